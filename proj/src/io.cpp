#include "cpr/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace cpr::io {

using nlohmann::json;

namespace {

std::string line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

// Typed access into one JSON object that remembers its path for diagnostics.
class Fields {
 public:
  Fields(const json& obj, std::string path, std::set<std::string> allowed)
      : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw ConfigError(path_, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.count(key)) throw ConfigError(at(key), "unknown key");
    }
  }

  bool has(const std::string& key) const { return obj_.contains(key); }
  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  const json& raw(const std::string& key) const { return obj_.at(key); }

  double real(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(at(key), "missing required number");
    }
    const auto& v = obj_.at(key);
    if (!v.is_number()) throw ConfigError(at(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(at(key), "expected a finite number");
    return d;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) const {
    const double d = real(key, fallback);
    if (!(d > 0)) throw ConfigError(at(key), "must be positive");
    return d;
  }

  std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw ConfigError(at(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = obj_.at(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }

 private:
  const json& obj_;
  std::string path_;
};

GameSection parse_game(const json& j) {
  const Fields f(j, "game", {"players", "r_s", "model"});
  GameSection g;
  if (!f.has("players")) throw ConfigError("game.players", "missing player list");
  const auto& players = f.raw("players");
  if (!players.is_array() || players.empty()) {
    throw ConfigError("game.players", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < players.size(); ++i) {
    const Fields p(players[i], "game.players[" + std::to_string(i) + "]", {"mu_s", "mu_r"});
    g.players.push_back({p.positive("mu_s"), p.positive("mu_r")});
  }
  g.r_s = f.positive("r_s", 1.0);
  if (f.has("model")) {
    const Fields m(f.raw("model"), "game.model", {"family", "A", "B"});
    g.model.family = m.text("family", "exponential");
    if (g.model.family != "exponential") {
      throw ConfigError("game.model.family", "unsupported family '" + g.model.family + "'");
    }
    g.model.A = m.real("A", 5.0);
    g.model.B = m.real("B", 0.5);
  }
  return g;
}

BrdOptions<double> parse_solver(const json& j) {
  const Fields f(j, "solver", {"tol_brd", "tol_stat", "max_iters", "schedule", "verify_tol"});
  BrdOptions<double> o;
  o.tol_brd = f.positive("tol_brd", o.tol_brd);
  o.tol_stat = f.positive("tol_stat", o.tol_stat);
  o.verify_tol = f.positive("verify_tol", o.verify_tol);
  const auto iters = f.count("max_iters", static_cast<std::uint64_t>(o.max_iters));
  if (iters < 1 || iters > 100'000'000) throw ConfigError("solver.max_iters", "out of range");
  o.max_iters = static_cast<int>(iters);
  const auto schedule = f.text("schedule", "sequential");
  if (schedule == "sequential") {
    o.schedule = Schedule::Sequential;
  } else if (schedule == "simultaneous") {
    o.schedule = Schedule::Simultaneous;
  } else {
    throw ConfigError("solver.schedule", "expected 'sequential' or 'simultaneous'");
  }
  return o;
}

SweepSpec parse_sweep(const json& j) {
  const Fields f(j, "sweep", {"n_players", "mean_mu_s", "mean_mu_r", "rho_grid",
                              "trials_per_rho", "seed", "A", "B", "r_s"});
  SweepSpec s;
  s.n_players = f.count("n_players", s.n_players);
  s.mean_mu_s = f.positive("mean_mu_s", s.mean_mu_s);
  s.mean_mu_r = f.positive("mean_mu_r", s.mean_mu_r);
  s.trials_per_rho = f.count("trials_per_rho", s.trials_per_rho);
  s.seed = f.count("seed", s.seed);
  s.A = f.real("A", s.A);
  s.B = f.real("B", s.B);
  s.r_s = f.positive("r_s", s.r_s);
  if (f.has("rho_grid")) {
    const auto& grid = f.raw("rho_grid");
    if (!grid.is_array()) throw ConfigError("sweep.rho_grid", "expected an array");
    s.rho_grid.clear();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!grid[i].is_number()) {
        throw ConfigError("sweep.rho_grid[" + std::to_string(i) + "]", "expected a number");
      }
      s.rho_grid.push_back(grid[i].get<double>());
    }
  }
  try {
    s.validate();
  } catch (const StructuralError& e) {
    throw ConfigError("sweep", e.what());
  }
  return s;
}

}  // namespace

GameConfig<double> GameSection::build() const {
  return GameConfig<double>(players, r_s, exponential_model(model.A, model.B));
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(line_col(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
  }
  const Fields top(doc, "", {"game", "solver", "sweep"});
  RunConfig rc;
  if (top.has("game")) rc.game = parse_game(doc.at("game"));
  if (top.has("solver")) rc.solver = parse_solver(doc.at("solver"));
  if (top.has("sweep")) {
    rc.sweep = parse_sweep(doc.at("sweep"));
    rc.sweep->solver = rc.solver;
  }
  if (!rc.game && !rc.sweep) throw ConfigError("(root)", "need a 'game' or 'sweep' section");
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot read file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

json config_to_json(const RunConfig& rc) {
  json doc = json::object();
  if (rc.game) {
    json players = json::array();
    for (const auto& p : rc.game->players) players.push_back({{"mu_s", p.mu_s}, {"mu_r", p.mu_r}});
    doc["game"] = {{"players", players},
                   {"r_s", rc.game->r_s},
                   {"model", {{"family", rc.game->model.family},
                              {"A", rc.game->model.A},
                              {"B", rc.game->model.B}}}};
  }
  doc["solver"] = {{"tol_brd", rc.solver.tol_brd},
                   {"tol_stat", rc.solver.tol_stat},
                   {"verify_tol", rc.solver.verify_tol},
                   {"max_iters", rc.solver.max_iters},
                   {"schedule", to_string(rc.solver.schedule)}};
  if (rc.sweep) {
    const auto& s = *rc.sweep;
    doc["sweep"] = {{"n_players", s.n_players}, {"mean_mu_s", s.mean_mu_s},
                    {"mean_mu_r", s.mean_mu_r}, {"rho_grid", s.rho_grid},
                    {"trials_per_rho", s.trials_per_rho}, {"seed", s.seed},
                    {"A", s.A}, {"B", s.B}, {"r_s", s.r_s}};
  }
  return doc;
}

VerificationDoc VerificationDoc::from(const PneReport& r) {
  return {r.passed(),          r.slope_positive, r.zero_iff_nonpositive,
          r.first_order,       r.monotone_structure, r.zero_suffix,
          r.no_profitable_deviation, r.max_deviation_gain, r.findings};
}

namespace {

template <class T>
void get_or_keep(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

}  // namespace

#define CPR_JSON_FIELD_OUT(name) j[#name] = d.name;
#define CPR_JSON_FIELD_IN(name) get_or_keep(j, #name, d.name);

#define CPR_JSON_FIELDS_VERIFICATION(X)                                                  \
  X(passed) X(slope_positive) X(zero_iff_nonpositive) X(first_order) X(monotone_structure) \
  X(zero_suffix) X(no_profitable_deviation) X(max_deviation_gain) X(findings)
#define CPR_JSON_FIELDS_PNE(X)                                                                 \
  X(schedule) X(starts) X(profile_input_order) X(profile_h_order) X(h_order) X(x)            \
  X(incentives_h_order) X(iterations) X(max_pairwise_sup_norm) X(verification)
#define CPR_JSON_FIELDS_WELFARE(X) \
  X(c_star) X(psi_star) X(pivot) X(profile_input_order) X(profile_h_order) X(h_order)
#define CPR_JSON_FIELDS_BOUNDS(X) X(xbar) X(poa_bound) X(tri_bound) X(li_bound) X(precondition)
#define CPR_JSON_FIELDS_ORACLE(X)                                                          \
  X(deviation_grid) X(welfare_grid) X(pne_input_order) X(max_deviation_gain)             \
  X(relative_deviation_gain) X(sw_input_order) X(sw_psi) X(brute_input_order) X(brute_psi) \
  X(sw_relative_gap) X(pne_confirmed) X(sw_confirmed)

#define CPR_JSON_DOC(Type, FIELDS)                                                 \
  void to_json(json& j, const Type& d) {                                           \
    j = json::object();                                                            \
    FIELDS(CPR_JSON_FIELD_OUT)                                                     \
  }                                                                                \
  void from_json(const json& j, Type& d) {                                         \
    if (!j.is_object()) throw json::type_error::create(302, "expected object", &j); \
    FIELDS(CPR_JSON_FIELD_IN)                                                      \
  }

CPR_JSON_DOC(VerificationDoc, CPR_JSON_FIELDS_VERIFICATION)
CPR_JSON_DOC(PneDoc, CPR_JSON_FIELDS_PNE)
CPR_JSON_DOC(WelfareDoc, CPR_JSON_FIELDS_WELFARE)
CPR_JSON_DOC(BoundsDoc, CPR_JSON_FIELDS_BOUNDS)
CPR_JSON_DOC(OracleDoc, CPR_JSON_FIELDS_ORACLE)

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

const std::vector<std::string> kRecordColumns = {
    "rho",      "trial", "poa",   "tri",       "li",     "poa_bound", "tri_bound",
    "li_bound", "x_pne", "x_sw",  "pne_iters", "a3_ok",  "precond_ok", "status"};

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

struct Stats {
  double mean = std::nan("");
  double stddev = std::nan("");
  double max = std::nan("");
};

Stats stats_of(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double sq = 0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.stddev = v.size() > 1 ? std::sqrt(sq / static_cast<double>(v.size() - 1)) : 0.0;
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

}  // namespace

void write_records_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  write_row(out, kRecordColumns);
  for (const auto& r : records) {
    const auto metric = [&](double v) { return r.ok() ? format_real(v) : std::string("nan"); };
    write_row(out, {format_real(r.rho), std::to_string(r.trial), metric(r.report.poa),
                    metric(r.report.tri), metric(r.report.li), metric(r.report.poa_bound),
                    metric(r.report.tri_bound), metric(r.report.li_bound), metric(r.x_pne),
                    metric(r.x_sw), std::to_string(r.pne_iterations), r.a3_ok ? "1" : "0",
                    r.precond_ok ? "1" : "0", csv_field(r.status)});
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
  using Getter = double (*)(const SweepRecord&);
  const std::vector<std::pair<std::string, Getter>> metrics = {
      {"poa", [](const SweepRecord& r) { return r.report.poa; }},
      {"tri", [](const SweepRecord& r) { return r.report.tri; }},
      {"li", [](const SweepRecord& r) { return r.report.li; }},
      {"poa_bound", [](const SweepRecord& r) { return r.report.poa_bound; }},
      {"tri_bound", [](const SweepRecord& r) { return r.report.tri_bound; }},
      {"li_bound", [](const SweepRecord& r) { return r.report.li_bound; }},
      {"x_pne", [](const SweepRecord& r) { return r.x_pne; }},
      {"x_sw", [](const SweepRecord& r) { return r.x_sw; }},
      {"pne_iters", [](const SweepRecord& r) { return double(r.pne_iterations); }},
  };
  std::vector<std::string> header = {"rho", "trials", "ok"};
  for (const auto& [name, get] : metrics) {
    header.push_back(name + "_mean");
    header.push_back(name + "_std");
    header.push_back(name + "_max");
  }
  write_row(out, header);

  std::map<double, std::vector<const SweepRecord*>> by_rho;
  for (const auto& r : records) by_rho[r.rho].push_back(&r);
  for (const auto& [rho, rows] : by_rho) {
    std::vector<std::string> cells = {format_real(rho), std::to_string(rows.size())};
    std::size_t ok = 0;
    for (const auto* r : rows) ok += r->ok();
    cells.push_back(std::to_string(ok));
    for (const auto& [name, get] : metrics) {
      std::vector<double> vals;
      for (const auto* r : rows) {
        if (r->ok()) vals.push_back(get(*r));
      }
      const auto s = stats_of(vals);
      cells.push_back(format_real(s.mean));
      cells.push_back(format_real(s.stddev));
      cells.push_back(format_real(s.max));
    }
    write_row(out, cells);
  }
}

}  // namespace cpr::io
