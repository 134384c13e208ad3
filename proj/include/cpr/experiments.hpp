#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cpr/equilibrium.hpp"
#include "cpr/game.hpp"
#include "cpr/inefficiency.hpp"

namespace cpr {

/// Monte Carlo heterogeneity sweep. Team members draw mu_s ~ N(mean_mu_s, rho)
/// and mu_r ~ N(mean_mu_r, rho); teams with a non-positive draw or any
/// mu_s > mu_r are rejected as a whole and redrawn.
///
/// The means are not given by the experimental protocol this reproduces; the
/// defaults (1, 2) are a reconstruction. r_s defaults to 1 for the same reason.
struct SweepSpec {
  std::size_t n_players = 6;
  double mean_mu_s = 1.0;
  double mean_mu_r = 2.0;
  std::vector<double> rho_grid = default_rho_grid();
  std::size_t trials_per_rho = 200;
  std::uint64_t seed = 1;
  double A = 5.0;
  double B = 0.5;
  double r_s = 1.0;
  BrdOptions<double> solver{};

  /// {0, 0.05, ..., 0.5}.
  static std::vector<double> default_rho_grid();

  /// Throws StructuralError on an invalid spec.
  void validate() const;
};

struct SweepRecord {
  double rho = 0;
  std::size_t trial = 0;
  std::uint64_t config_digest = 0;
  InefficiencyReport<double> report{};
  int pne_iterations = 0;
  double x_pne = 0;
  double x_sw = 0;
  double pne_welfare = 0;
  double welfare_lower_bound = 0;
  /// Sup-norm distance between the PNE and welfare-optimal profiles.
  double pne_sw_distance = 0;
  bool pne_verified = false;
  bool sw_waterfill_shape = false;
  bool a3_ok = false;
  bool precond_ok = false;
  /// "ok", or the error that stopped this trial.
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

/// Deterministic team draw for (spec.seed, rho, trial). Players come back in
/// draw order; GameConfig canonicalizes them.
GameConfig<double> sample_team(const SweepSpec& spec, double rho, std::size_t trial);

/// Raw (mu_s, mu_r) draws of sample_team, in draw order. `attempts`, if
/// given, receives the number of whole-team draws used.
std::vector<PlayerParams<double>> sample_team_params(const SweepSpec& spec, double rho,
                                                     std::size_t trial,
                                                     std::uint32_t* attempts = nullptr);

/// FNV-1a over the canonical capacities, r_s and model parameters.
std::uint64_t config_digest(const GameConfig<double>& config);

/// Solves one sampled team end to end. Never throws for solver failures;
/// they become the record's status.
SweepRecord run_trial(const SweepSpec& spec, double rho, std::size_t trial);

/// All (rho, trial) records sorted by rho then trial. `threads` = 0 picks
/// CPR_THREADS or the hardware concurrency.
std::vector<SweepRecord> run_sweep(const SweepSpec& spec, unsigned threads = 0);

/// Worker count from CPR_THREADS, capped by hardware concurrency.
unsigned default_thread_count();

/// True when a profile is [mu_r..., partial, 0...] in canonical order.
bool has_waterfill_shape(const GameConfig<double>& config, const StrategyProfile<double>& profile,
                         double tol);

}  // namespace cpr
