#include "cpr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>
#include <thread>

#include "cpr/philox.hpp"
#include "cpr/welfare.hpp"

namespace cpr {

std::vector<double> SweepSpec::default_rho_grid() {
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(k / 20.0);
  return grid;
}

void SweepSpec::validate() const {
  if (n_players < 1) throw StructuralError("sweep needs n_players >= 1");
  if (!(mean_mu_s > 0) || !(mean_mu_r > 0)) throw StructuralError("sweep means must be positive");
  if (mean_mu_s > mean_mu_r) throw StructuralError("sweep needs mean_mu_s <= mean_mu_r");
  if (trials_per_rho < 1) throw StructuralError("sweep needs trials_per_rho >= 1");
  if (rho_grid.empty()) throw StructuralError("sweep needs a non-empty rho grid");
  for (std::size_t k = 0; k < rho_grid.size(); ++k) {
    if (!(rho_grid[k] >= 0) || !std::isfinite(rho_grid[k])) {
      throw StructuralError("rho values must be finite and non-negative");
    }
    if (k > 0 && !(rho_grid[k] > rho_grid[k - 1])) {
      throw StructuralError("rho grid must be strictly ascending");
    }
  }
  if (!(r_s > 0)) throw StructuralError("sweep r_s must be positive");
  if (!std::isfinite(A) || !std::isfinite(B)) throw StructuralError("model parameters must be finite");
}

namespace {

constexpr std::uint32_t kRejectionBudget = 1'000'000;

rng::Philox4x32::Key stream_key(std::uint64_t seed, double rho) {
  const std::uint64_t k = rng::mix64(rng::mix64(seed) ^ std::bit_cast<std::uint64_t>(rho));
  return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

void fnv(std::uint64_t& h, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) {
    h ^= (bits >> (8 * b)) & 0xFFu;
    h *= 0x100000001B3ull;
  }
}

}  // namespace

std::vector<PlayerParams<double>> sample_team_params(const SweepSpec& spec, double rho,
                                                     std::size_t trial,
                                                     std::uint32_t* attempts) {
  if (!(rho >= 0)) throw DomainError("rho must be non-negative");
  if (trial > std::numeric_limits<std::uint32_t>::max()) {
    throw DomainError("trial index exceeds 32 bits");
  }
  const auto key = stream_key(spec.seed, rho);
  const auto t = static_cast<std::uint32_t>(trial);
  std::vector<PlayerParams<double>> team(spec.n_players);
  for (std::uint32_t attempt = 0; attempt < kRejectionBudget; ++attempt) {
    bool accepted = true;
    for (std::uint32_t i = 0; i < team.size() && accepted; ++i) {
      const double zs = rng::standard_normal({t, attempt, i, 0}, key);
      const double zr = rng::standard_normal({t, attempt, i, 1}, key);
      team[i] = {spec.mean_mu_s + rho * zs, spec.mean_mu_r + rho * zr};
      accepted = team[i].mu_s > 0 && team[i].mu_r > 0 && team[i].mu_s <= team[i].mu_r;
    }
    if (accepted) {
      if (attempts) *attempts = attempt + 1;
      return team;
    }
  }
  throw SamplingError("rejection budget exhausted for rho = " + std::to_string(rho));
}

GameConfig<double> sample_team(const SweepSpec& spec, double rho, std::size_t trial) {
  return GameConfig<double>(sample_team_params(spec, rho, trial), spec.r_s,
                            exponential_model(spec.A, spec.B));
}

std::uint64_t config_digest(const GameConfig<double>& config) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const auto& p : config.players()) {
    fnv(h, p.mu_s);
    fnv(h, p.mu_r);
  }
  fnv(h, config.r_s());
  for (const auto& [name, value] : config.model().parameters()) fnv(h, value);
  return h;
}

bool has_waterfill_shape(const GameConfig<double>& config, const StrategyProfile<double>& profile,
                         double tol) {
  enum { kFull, kAfterPartial } phase = kFull;
  for (Eigen::Index i = 0; i < profile.size(); ++i) {
    const double v = profile[i];
    const bool full = std::abs(v - config.mu_r()[i]) <= tol;
    const bool zero = std::abs(v) <= tol;
    if (phase == kFull) {
      if (!full) phase = kAfterPartial;
    } else if (!zero) {
      return false;
    }
  }
  return true;
}

SweepRecord run_trial(const SweepSpec& spec, double rho, std::size_t trial) {
  SweepRecord rec;
  rec.rho = rho;
  rec.trial = trial;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  rec.report = {nan, nan, nan, nan, nan, nan, nan, false};
  rec.x_pne = rec.x_sw = rec.pne_welfare = rec.welfare_lower_bound = rec.pne_sw_distance = nan;
  try {
    const auto config = sample_team(spec, rho, trial);
    rec.config_digest = config_digest(config);
    rec.a3_ok = validate_assumptions(config).holds(Assumption::A3);
    rec.precond_ok = theorem3_precondition(config);

    const auto pne = run_brd(config, half_capacity_profile(config), spec.solver);
    const auto sw = optimize_welfare(config);
    rec.report = measure(config, pne.profile, sw.profile);
    rec.pne_iterations = pne.iterations;
    rec.pne_verified = pne.verification.passed();
    rec.x_pne = slackness(config, pne.profile);
    rec.x_sw = slackness(config, sw.profile);
    rec.pne_welfare = welfare_value(config, pne.profile);
    rec.welfare_lower_bound = pne_welfare_lower_bound(config);
    rec.pne_sw_distance = (pne.profile.lambda_r - sw.profile.lambda_r).cwiseAbs().maxCoeff();
    rec.sw_waterfill_shape = has_waterfill_shape(config, sw.profile, 1e-9);
  } catch (const Error& e) {
    rec.status = e.what();
  }
  return rec;
}

unsigned default_thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CPR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) hw = std::min(hw, static_cast<unsigned>(v));
  }
  return hw;
}

std::vector<SweepRecord> run_sweep(const SweepSpec& spec, unsigned threads) {
  spec.validate();
  const std::size_t per_rho = spec.trials_per_rho;
  const std::size_t jobs = spec.rho_grid.size() * per_rho;
  std::vector<SweepRecord> out(jobs);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      out[j] = run_trial(spec, spec.rho_grid[j / per_rho], j % per_rho);
    }
  };
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }
  return out;
}

}  // namespace cpr
