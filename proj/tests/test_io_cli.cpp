#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cpr/cli.hpp"
#include "cpr/io.hpp"
#include "doctest.h"

using namespace cpr;
namespace fs = std::filesystem;

namespace {

const char* kDefaultGame = R"({
  "game": {
    "players": [{"mu_s": 1, "mu_r": 2}, {"mu_s": 1, "mu_r": 2}, {"mu_s": 1, "mu_r": 2},
                {"mu_s": 1, "mu_r": 2}, {"mu_s": 1, "mu_r": 2}, {"mu_s": 1, "mu_r": 2}],
    "r_s": 1,
    "model": {"family": "exponential", "A": 5, "B": 0.5}
  }
})";

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("cpr_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name, std::ios::binary) << text;
    return (path / name).string();
  }
};

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cpr(std::vector<std::string> args) {
  args.insert(args.begin(), "cpr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("config parsing fills defaults") {
  const auto rc = io::parse_run_config(kDefaultGame);
  REQUIRE(rc.game);
  CHECK(rc.game->players.size() == 6);
  CHECK(rc.solver.tol_brd == 1e-9);
  CHECK(rc.solver.schedule == Schedule::Sequential);
  CHECK_FALSE(rc.sweep);
  CHECK(rc.game->build().mu_total_s() == 6.0);
}

TEST_CASE("malformed documents report a position") {
  try {
    io::parse_run_config("{\n  \"game\": {\n    \"players\": [\n");
    FAIL("expected ConfigError");
  } catch (const io::ConfigError& e) {
    CHECK(e.where().rfind("line ", 0) == 0);
  }
  try {
    io::parse_run_config("{\n  \"game\": ]\n}");
    FAIL("expected ConfigError");
  } catch (const io::ConfigError& e) {
    CHECK(e.where() == "line 2, column 11");
  }
}

TEST_CASE("schema violations name the field") {
  const auto where = [](const std::string& text) {
    try {
      io::parse_run_config(text);
    } catch (const io::ConfigError& e) {
      return e.where();
    }
    return std::string("(accepted)");
  };
  CHECK(where(R"({"game": {"players": [{"mu_s": 1, "mu_r": 2}], "colour": 1}})") == "game.colour");
  CHECK(where(R"({"game": {"players": [{"mu_s": 1, "mu_r": 2}, {"mu_s": -1, "mu_r": 2}]}})") ==
        "game.players[1].mu_s");
  CHECK(where(R"({"game": {"players": [{"mu_s": "1", "mu_r": 2}]}})") == "game.players[0].mu_s");
  CHECK(where(R"({"game": {"players": [{"mu_s": 1, "mu_r": 2}], "model": {"family": "linear"}}})") ==
        "game.model.family");
  CHECK(where(R"({"game": {"players": []}})") == "game.players");
  CHECK(where(R"({"game": {"players": [{"mu_s": 1, "mu_r": 2}]}, "solver": {"schedule": "async"}})") ==
        "solver.schedule");
  CHECK(where(R"({"sweep": {"rho_grid": [0.2, 0.1]}})") == "sweep");
  CHECK(where(R"({"solver": {}})") == "(root)");
  CHECK(where(R"([1, 2])") == "");
}

TEST_CASE("config serialization round-trips") {
  auto rc = io::parse_run_config(
      R"({"game": {"players": [{"mu_s": 0.3, "mu_r": 1.1}], "r_s": 2},
          "solver": {"schedule": "simultaneous", "max_iters": 50},
          "sweep": {"trials_per_rho": 3, "rho_grid": [0, 0.25], "seed": 9}})");
  const auto again = io::parse_run_config(io::config_to_json(rc).dump());
  CHECK(io::config_to_json(again) == io::config_to_json(rc));
  CHECK(again.sweep->seed == 9);
  CHECK(again.solver.max_iters == 50);
}

TEST_CASE("result documents round-trip") {
  io::PneDoc pne;
  pne.schedule = "sequential";
  pne.starts = 3;
  pne.profile_input_order = {0.1, 0.30000000000000004, 1e-300};
  pne.profile_h_order = {0.30000000000000004, 0.1, 1e-300};
  pne.h_order = {1, 0, 2};
  pne.x = 0.9078143543248043;
  pne.incentives_h_order = {1.5, -0.25, 2.0 / 3.0};
  pne.iterations = {61, 62, 59};
  pne.max_pairwise_sup_norm = 3.2e-9;
  pne.verification.passed = true;
  pne.verification.findings = {"a", "b"};
  CHECK(nlohmann::json::parse(nlohmann::json(pne).dump()).get<io::PneDoc>() == pne);

  const io::WelfareDoc w{3.97, 11.95, 1, {2.0, 0.65}, {2.0, 0.65}, {0, 1}};
  CHECK(nlohmann::json::parse(nlohmann::json(w).dump()).get<io::WelfareDoc>() == w);
  const io::BoundsDoc b{3.0, 3.0, 2.0, 2.0, true};
  CHECK(nlohmann::json::parse(nlohmann::json(b).dump()).get<io::BoundsDoc>() == b);
  io::OracleDoc o;
  o.deviation_grid = 10000;
  o.sw_relative_gap = 1.234e-7;
  o.brute_input_order = {0.5};
  o.pne_confirmed = true;
  CHECK(nlohmann::json::parse(nlohmann::json(o).dump()).get<io::OracleDoc>() == o);
}

TEST_CASE("real formatting keeps 17 significant digits") {
  CHECK(io::format_real(0.1) == "0.10000000000000001");
  CHECK(io::format_real(2.0) == "2");
  CHECK(io::format_real(std::nan("")) == "nan");
  CHECK(std::stod(io::format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("records csv layout") {
  SweepRecord ok;
  ok.rho = 0.05;
  ok.trial = 2;
  ok.report = {1.5, 0.5, 1.25, 3.0, 2.0, 2.0, 3.0, true};
  ok.x_pne = 1;
  ok.x_sw = 2;
  ok.pne_iterations = 40;
  ok.a3_ok = true;
  ok.precond_ok = true;
  SweepRecord bad = ok;
  bad.status = "solver said \"no\", twice";
  std::ostringstream out;
  io::write_records_csv(out, {ok, bad});
  std::istringstream lines(out.str());
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  CHECK(header == "rho,trial,poa,tri,li,poa_bound,tri_bound,li_bound,x_pne,x_sw,pne_iters,a3_ok,precond_ok,status");
  CHECK(row1 == "0.050000000000000003,2,1.5,0.5,1.25,3,2,2,1,2,40,1,1,ok");
  CHECK(row2.rfind("0.050000000000000003,2,nan,nan,nan,nan,nan,nan,nan,nan,40,1,1,", 0) == 0);
  CHECK(row2.substr(row2.size() - 28) == ",\"solver said \"\"no\"\", twice\"");
  CHECK(out.str().find('\r') == std::string::npos);
}

}  // TEST_SUITE

TEST_SUITE("cli") {

TEST_CASE("validate exit codes") {
  TempDir dir;
  CHECK(run_cpr({"validate", dir.write("ok.json", kDefaultGame)}).code == 0);

  std::string negative = kDefaultGame;
  negative.replace(negative.find("\"B\": 0.5"), 8, "\"B\": -0.5");
  const auto r = run_cpr({"validate", dir.write("neg.json", negative)});
  CHECK(r.code == 1);
  CHECK(r.out.find("A1: VIOLATED") != std::string::npos);

  const std::string full = kDefaultGame;
  const auto t = run_cpr({"validate", dir.write("cut.json", full.substr(0, full.size() / 2))});
  CHECK(t.code == 2);
  CHECK(t.err.find("line ") != std::string::npos);

  CHECK(run_cpr({"validate", (dir.path / "missing.json").string()}).code == 2);
  CHECK(run_cpr({"validate"}).code == 2);
  CHECK(run_cpr({"frobnicate", "x"}).code == 2);
  CHECK(run_cpr({}).code == 2);
}

TEST_CASE("pne reports multi-start agreement") {
  TempDir dir;
  const auto cfg = dir.write("g.json", kDefaultGame);
  const auto out = (dir.path / "pne.json").string();
  const auto r = run_cpr({"pne", cfg, "--starts", "20", "--seed", "4", "--out", out});
  REQUIRE(r.code == 0);
  const auto doc = nlohmann::json::parse(slurp(out)).get<io::PneDoc>();
  CHECK(doc.starts == 20);
  CHECK(doc.iterations.size() == 20);
  CHECK(doc.max_pairwise_sup_norm < 1e-6);
  CHECK(doc.verification.passed);
  for (double v : doc.profile_input_order) CHECK(std::abs(v - doc.profile_input_order[0]) < 1e-8);
  CHECK(nlohmann::json::parse(r.out) == nlohmann::json(doc));

  const auto sim = run_cpr({"pne", cfg, "--schedule", "simultaneous"});
  CHECK(sim.code == 1);
  CHECK(sim.err.find("trace") != std::string::npos);
  CHECK(run_cpr({"pne", cfg, "--schedule", "sideways"}).code == 2);
  CHECK(run_cpr({"pne", cfg, "--starts", "0"}).code == 2);
}

TEST_CASE("pne and oracle agree on a pair") {
  TempDir dir;
  const auto cfg = dir.write(
      "pair.json", R"({"game": {"players": [{"mu_s": 0.8, "mu_r": 1.9}, {"mu_s": 1.3, "mu_r": 2.2}]}})");
  const auto pne = run_cpr({"pne", cfg});
  const auto oracle = run_cpr({"oracle", cfg, "--grid", "10000"});
  REQUIRE(pne.code == 0);
  REQUIRE(oracle.code == 0);
  const auto p = nlohmann::json::parse(pne.out).get<io::PneDoc>();
  const auto o = nlohmann::json::parse(oracle.out).get<io::OracleDoc>();
  CHECK(o.pne_confirmed);
  CHECK(o.sw_confirmed);
  CHECK(o.max_deviation_gain < 1e-8);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(p.profile_input_order[i] - o.pne_input_order[i]) < 1e-4);
  }
}

TEST_CASE("oracle on a single player") {
  TempDir dir;
  const auto cfg = dir.write("one.json", R"({"game": {"players": [{"mu_s": 3, "mu_r": 4}]}})");
  const auto r = run_cpr({"oracle", cfg});
  REQUIRE(r.code == 0);
  const auto o = nlohmann::json::parse(r.out).get<io::OracleDoc>();
  CHECK(std::abs(o.pne_input_order[0] - o.sw_input_order[0]) < 1e-6);
  CHECK(std::abs(o.brute_input_order[0] - o.sw_input_order[0]) < 1e-4);
}

TEST_CASE("oracle refuses large teams") {
  TempDir dir;
  CHECK(run_cpr({"oracle", dir.write("g.json", kDefaultGame)}).code == 1);
}

TEST_CASE("welfare and bounds documents") {
  TempDir dir;
  const auto cfg = dir.write("g.json", kDefaultGame);
  const auto w = run_cpr({"welfare", cfg});
  REQUIRE(w.code == 0);
  const auto wd = nlohmann::json::parse(w.out).get<io::WelfareDoc>();
  CHECK(wd.pivot == 1);
  CHECK(wd.profile_h_order[0] == 2.0);

  const auto b = run_cpr({"bounds", cfg});
  REQUIRE(b.code == 0);
  const auto bd = nlohmann::json::parse(b.out).get<io::BoundsDoc>();
  CHECK(std::abs(bd.li_bound - 2.0) < 1e-12);
  CHECK(std::abs(bd.xbar - 3.0) < 1e-10);
  CHECK(bd.precondition);

  const auto tiny = dir.write(
      "tiny.json",
      R"({"game": {"players": [{"mu_s": 1, "mu_r": 1.1}, {"mu_s": 1, "mu_r": 1.1}, {"mu_s": 0.01, "mu_r": 1.1}]}})");
  CHECK_FALSE(nlohmann::json::parse(run_cpr({"bounds", tiny}).out).get<io::BoundsDoc>().precondition);

  std::string negative = kDefaultGame;
  negative.replace(negative.find("\"A\": 5"), 6, "\"A\": -5");
  CHECK(run_cpr({"bounds", dir.write("neg.json", negative)}).code == 1);
}

TEST_CASE("sweep writes deterministic tables") {
  TempDir dir;
  const auto cfg = dir.write(
      "s.json", R"({"sweep": {"rho_grid": [0, 0.3], "trials_per_rho": 4, "seed": 5}})");
  REQUIRE(run_cpr({"sweep", cfg, "--out", (dir.path / "a").string()}).code == 0);
  REQUIRE(run_cpr({"sweep", cfg, "--out", (dir.path / "b").string()}).code == 0);
  for (const char* f : {"records.csv", "summary.csv"}) {
    const auto a = slurp(dir.path / "a" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(dir.path / "b" / f));
  }
  const auto summary = slurp(dir.path / "a" / "summary.csv");
  CHECK(summary.rfind("rho,trials,ok,poa_mean,poa_std,poa_max,", 0) == 0);

  const auto blocker = dir.write("file", "x");
  CHECK(run_cpr({"sweep", cfg, "--out", blocker + "/sub"}).code == 2);
  CHECK(run_cpr({"sweep", dir.write("g.json", kDefaultGame), "--out", (dir.path / "c").string()}).code == 2);
}

}  // TEST_SUITE
