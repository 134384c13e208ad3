#include "cpr/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "cpr/equilibrium.hpp"
#include "cpr/experiments.hpp"
#include "cpr/inefficiency.hpp"
#include "cpr/io.hpp"
#include "cpr/philox.hpp"
#include "cpr/welfare.hpp"

namespace cpr::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Thrown for bad flags or paths discovered after CLI11 parsing.
struct UsageError : Error {
  using Error::Error;
};

struct Common {
  std::string config_path;
  std::string out_path;
};

io::RunConfig load(const std::string& path) { return io::load_run_config(path); }

GameConfig<double> game_of(const io::RunConfig& rc) {
  if (!rc.game) throw io::ConfigError("game", "this command needs a 'game' section");
  return rc.game->build();
}

std::vector<double> to_std(const Vector<double>& v) { return {v.data(), v.data() + v.size()}; }

void emit(const json& doc, const std::string& out_path, std::ostream& out) {
  const std::string text = doc.dump(2) + "\n";
  out << text;
  if (out_path.empty()) return;
  std::ofstream file(out_path, std::ios::binary);
  if (!file) throw UsageError("cannot write " + out_path);
  file << text;
  if (!file.flush()) throw UsageError("failed writing " + out_path);
}

int cmd_validate(const Common& c, std::ostream& out) {
  const auto config = game_of(load(c.config_path));
  const auto report = validate_assumptions(config);
  out << "players: " << config.size() << ", mu_T^S = " << io::format_real(config.mu_total_s())
      << ", model: " << config.model().family() << "\n";
  for (const auto a : {Assumption::A1, Assumption::A2, Assumption::A3}) {
    out << to_string(a) << ": " << (report.holds(a) ? "ok" : "VIOLATED") << "\n";
  }
  for (const auto& v : report.violations) {
    out << "  " << to_string(v.assumption);
    if (v.player) out << " player " << config.input_index(*v.player);
    out << " at x = " << io::format_real(v.x) << ": " << v.detail << "\n";
  }
  return report.passed() ? kOk : kFailure;
}

struct PneFlags {
  std::string schedule;
  std::size_t starts = 1;
  std::uint64_t seed = 0;
};

StrategyProfile<double> random_start(const GameConfig<double>& config, std::uint64_t seed,
                                     std::uint32_t start) {
  const auto k = rng::mix64(seed);
  const rng::Philox4x32::Key key{static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  Vector<double> lam(config.dim());
  for (Eigen::Index i = 0; i < config.dim(); ++i) {
    const auto block = rng::Philox4x32::block({start, static_cast<std::uint32_t>(i), 0, 0}, key);
    lam[i] = (1.0 - rng::unit_open_closed(block[0], block[1])) * config.mu_r()[i];
  }
  return StrategyProfile<double>(lam);
}

int cmd_pne(const Common& c, const PneFlags& f, std::ostream& out, std::ostream& err) {
  const auto rc = load(c.config_path);
  const auto config = game_of(rc);
  auto opts = rc.solver;
  if (f.schedule == "sequential") {
    opts.schedule = Schedule::Sequential;
  } else if (f.schedule == "simultaneous") {
    opts.schedule = Schedule::Simultaneous;
  }
  if (f.starts < 1) throw UsageError("--starts must be at least 1");

  std::vector<EquilibriumResult<double>> runs;
  bool failed = false;
  for (std::size_t s = 0; s < f.starts; ++s) {
    const auto init = s == 0 ? half_capacity_profile(config)
                             : random_start(config, f.seed, static_cast<std::uint32_t>(s));
    try {
      runs.push_back(run_brd(config, init, opts));
    } catch (const ConvergenceError& e) {
      failed = true;
      err << "start " << s << ": " << e.what() << "\n  sup-norm trace (last 10):";
      const auto& tr = e.trace();
      for (std::size_t k = tr.size() > 10 ? tr.size() - 10 : 0; k < tr.size(); ++k) {
        err << ' ' << io::format_real(tr[k]);
      }
      err << "\n";
    }
  }
  if (failed) return kFailure;

  const auto& best = runs.front();
  double spread = 0;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    for (std::size_t t = s + 1; t < runs.size(); ++t) {
      spread = std::max(
          spread, (runs[s].profile.lambda_r - runs[t].profile.lambda_r).cwiseAbs().maxCoeff());
    }
  }
  io::PneDoc doc;
  doc.schedule = to_string(opts.schedule);
  doc.starts = runs.size();
  doc.profile_h_order = to_std(best.profile.lambda_r);
  doc.profile_input_order = to_std(config.to_input_order(best.profile.lambda_r));
  doc.h_order = config.permutation();
  doc.x = slackness(config, best.profile);
  for (std::size_t i = 0; i < config.size(); ++i) {
    doc.incentives_h_order.push_back(incentive(config, best.profile, i));
  }
  for (const auto& r : runs) doc.iterations.push_back(r.iterations);
  doc.max_pairwise_sup_norm = spread;
  doc.verification = io::VerificationDoc::from(best.verification);
  emit(doc, c.out_path, out);
  return kOk;
}

int cmd_welfare(const Common& c, std::ostream& out) {
  const auto config = game_of(load(c.config_path));
  const auto sw = optimize_welfare(config);
  io::WelfareDoc doc;
  doc.c_star = sw.c_star;
  doc.psi_star = sw.psi_star;
  doc.pivot = sw.pivot;
  doc.profile_h_order = to_std(sw.profile.lambda_r);
  doc.profile_input_order = to_std(config.to_input_order(sw.profile.lambda_r));
  doc.h_order = config.permutation();
  emit(doc, c.out_path, out);
  return kOk;
}

int cmd_bounds(const Common& c, std::ostream& out) {
  const auto config = game_of(load(c.config_path));
  const auto b = inefficiency_bounds(config);
  emit(io::BoundsDoc{b.xbar, b.poa, b.tri, b.li, theorem3_precondition(config)}, c.out_path, out);
  return kOk;
}

int cmd_sweep(const Common& c, std::ostream& out) {
  const auto rc = load(c.config_path);
  if (!rc.sweep) throw io::ConfigError("sweep", "this command needs a 'sweep' section");
  if (c.out_path.empty()) throw UsageError("sweep needs --out <dir>");
  const fs::path dir(c.out_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create directory " + c.out_path);
  std::ofstream records(dir / "records.csv", std::ios::binary);
  std::ofstream summary(dir / "summary.csv", std::ios::binary);
  if (!records || !summary) throw UsageError("cannot write into " + c.out_path);

  const auto rows = run_sweep(*rc.sweep);
  io::write_records_csv(records, rows);
  io::write_summary_csv(summary, rows);
  if (!records.flush() || !summary.flush()) throw UsageError("failed writing into " + c.out_path);

  std::size_t ok = 0;
  for (const auto& r : rows) ok += r.ok();
  out << "trials: " << rows.size() << ", solved: " << ok << "\n";
  return kOk;
}

struct OracleFlags {
  std::size_t grid = 10000;
  std::size_t welfare_grid = 400;
  int refine = 4;
};

int cmd_oracle(const Common& c, const OracleFlags& f, std::ostream& out) {
  const auto rc = load(c.config_path);
  const auto config = game_of(rc);
  if (config.size() > 3) throw DomainError("oracle supports at most 3 players");
  if (f.grid < 2) throw UsageError("--grid must be at least 2");

  const auto pne = run_brd(config, half_capacity_profile(config), rc.solver);
  double gain = 0;
  for (Eigen::Index i = 0; i < config.dim(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double base = expected_utility(config, pne.profile, idx);
    auto trial = pne.profile;
    for (std::size_t k = 0; k < f.grid; ++k) {
      trial.lambda_r[i] = k + 1 == f.grid ? config.mu_r()[i]
                                          : config.mu_r()[i] * double(k) / double(f.grid - 1);
      gain = std::max(gain, expected_utility(config, trial, idx) - base);
    }
  }
  const double psi_pne = welfare_value(config, pne.profile);
  const auto sw = optimize_welfare(config);
  const auto [brute, brute_psi] = brute_force_welfare(config, f.welfare_grid, f.refine);

  io::OracleDoc doc;
  doc.deviation_grid = f.grid;
  doc.welfare_grid = f.welfare_grid;
  doc.pne_input_order = to_std(config.to_input_order(pne.profile.lambda_r));
  doc.max_deviation_gain = gain;
  doc.relative_deviation_gain = gain / psi_pne;
  doc.sw_input_order = to_std(config.to_input_order(sw.profile.lambda_r));
  doc.sw_psi = sw.psi_star;
  doc.brute_input_order = to_std(config.to_input_order(brute.lambda_r));
  doc.brute_psi = brute_psi;
  doc.sw_relative_gap = std::abs(sw.psi_star - brute_psi) / std::abs(brute_psi);
  doc.pne_confirmed = doc.relative_deviation_gain < 1e-8;
  doc.sw_confirmed = doc.sw_relative_gap < 1e-5;
  emit(doc, c.out_path, out);
  return doc.pne_confirmed && doc.sw_confirmed ? kOk : kFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heterogeneous-team common-pool resource game solver", "cpr"};
  app.require_subcommand(1);
  Common common;
  PneFlags pne_flags;
  OracleFlags oracle_flags;

  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("config", common.config_path, "JSON config file")->required();
  };
  auto* validate = app.add_subcommand("validate", "check the model assumptions");
  add_config(validate);
  auto* pne = app.add_subcommand("pne", "solve the pure Nash equilibrium");
  add_config(pne);
  pne->add_option("--schedule", pne_flags.schedule, "override solver.schedule")
      ->check(CLI::IsMember({"sequential", "simultaneous"}));
  pne->add_option("--starts", pne_flags.starts, "number of BRD starts")->check(CLI::PositiveNumber);
  pne->add_option("--seed", pne_flags.seed, "seed for random starts");
  pne->add_option("--out", common.out_path, "also write the result here");
  auto* welfare = app.add_subcommand("welfare", "solve the social-welfare optimum");
  add_config(welfare);
  welfare->add_option("--out", common.out_path, "also write the result here");
  auto* bounds = app.add_subcommand("bounds", "analytic inefficiency bounds");
  add_config(bounds);
  bounds->add_option("--out", common.out_path, "also write the result here");
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo heterogeneity sweep");
  add_config(sweep);
  sweep->add_option("--out", common.out_path, "output directory")->required();
  auto* oracle = app.add_subcommand("oracle", "brute-force cross-check for N <= 3");
  add_config(oracle);
  oracle->add_option("--grid", oracle_flags.grid, "deviation grid points per player");
  oracle->add_option("--welfare-grid", oracle_flags.welfare_grid, "welfare grid points per player")
      ->check(CLI::Range(2, 1000));
  oracle->add_option("--refine", oracle_flags.refine, "welfare grid refinement rounds")
      ->check(CLI::Range(0, 20));
  oracle->add_option("--out", common.out_path, "also write the result here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(common, out);
    if (*pne) return cmd_pne(common, pne_flags, out, err);
    if (*welfare) return cmd_welfare(common, out);
    if (*bounds) return cmd_bounds(common, out);
    if (*sweep) return cmd_sweep(common, out);
    if (*oracle) return cmd_oracle(common, oracle_flags, out);
  } catch (const io::ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const StructuralError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

}  // namespace cpr::cli
