#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>

#include "cpr/errors.hpp"
#include "cpr/game.hpp"
#include "cpr/scalar_search.hpp"

namespace cpr {

template <typename Scalar = double>
struct WelfareSolution {
  StrategyProfile<Scalar> profile;
  Scalar c_star;      // optimal review load sum_i a_i lambda_i
  Scalar psi_star;    // welfare at the optimum
  std::size_t pivot;  // canonical index of the partially filled player; N if none
};

/// Social welfare Psi = sum_i u_i = (lambda_T + x) r^S + lambda_T r(x) (1 - p(x)).
template <typename Scalar>
Scalar welfare_value(const GameConfig<Scalar>& config, const StrategyProfile<Scalar>& profile) {
  const Scalar x = slackness(config, profile);
  const Scalar total = profile.total();
  return (total + x) * config.r_s() + total * shared_incentive(config, x);
}

namespace detail {

template <typename Scalar>
std::pair<StrategyProfile<Scalar>, std::size_t> fill(const GameConfig<Scalar>& config,
                                                     Scalar c) {
  const auto n = config.dim();
  Vector<Scalar> lam = Vector<Scalar>::Zero(n);
  Scalar used = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const Scalar full = config.a()[k] * config.mu_r()[k];
    if (used + full <= c) {
      lam[k] = config.mu_r()[k];
      used += full;
      continue;
    }
    lam[k] = std::clamp((c - used) / config.a()[k], Scalar(0), config.mu_r()[k]);
    return {StrategyProfile<Scalar>(std::move(lam)), static_cast<std::size_t>(k)};
  }
  return {StrategyProfile<Scalar>(std::move(lam)), config.size()};
}

}  // namespace detail

/// Welfare-optimal profile at fixed review load c: fill players to capacity
/// in ascending h, one partial player, the rest idle.
template <typename Scalar>
StrategyProfile<Scalar> waterfill(const GameConfig<Scalar>& config, Scalar c) {
  const Scalar cap = config.max_load();
  const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * cap;
  if (!(c >= -slack) || c > cap + slack) {
    throw DomainError("review load c outside [0, sum_i a_i mu_i^R]");
  }
  return detail::fill(config, std::clamp(c, Scalar(0), cap)).first;
}

/// Maximizes Psi(waterfill(c)) over c.
///
/// Psi(c) starts with slope -h_1 r^S / a_1 at c = 0 (no return yet at
/// x = mu_T^S), so it dips before it rises and is not unimodal on the whole
/// range. A coarse scan picks the bracket of the interior peak and
/// golden-section search refines it.
template <typename Scalar>
WelfareSolution<Scalar> optimize_welfare(const GameConfig<Scalar>& config,
                                         Scalar tol_c = Scalar(1e-10)) {
  if (!(tol_c > Scalar(0))) throw DomainError("tol_c must be positive");
  const Scalar hi = std::min(config.max_load(), config.mu_total_s() + config.mu_total_r());
  const auto psi = [&](Scalar c) {
    return welfare_value(config, detail::fill(config, c).first);
  };
  constexpr int kScan = 64;
  int best_k = 0;
  Scalar best_v = psi(Scalar(0));
  for (int k = 1; k <= kScan; ++k) {
    const Scalar v = psi(hi * Scalar(k) / Scalar(kScan));
    if (v > best_v) {
      best_v = v;
      best_k = k;
    }
  }
  const Scalar lo_c = hi * Scalar(std::max(best_k - 1, 0)) / Scalar(kScan);
  const Scalar hi_c = hi * Scalar(std::min(best_k + 1, kScan)) / Scalar(kScan);
  auto [c, value] = search::golden_max(psi, lo_c, hi_c, tol_c);
  for (const Scalar edge : {Scalar(0), hi}) {
    const Scalar v = psi(edge);
    if (v > value) {
      c = edge;
      value = v;
    }
  }
  auto [profile, pivot] = detail::fill(config, c);
  return {std::move(profile), c, value, pivot};
}

/// Exhaustive grid maximization of Psi over the strategy box (test oracle).
///
/// grid_per_dim points per player, endpoints included. Each refinement round
/// re-grids a box of two old spacings around the incumbent. Ties keep the
/// lexicographically first grid point.
template <typename Scalar>
std::pair<StrategyProfile<Scalar>, Scalar> brute_force_welfare(const GameConfig<Scalar>& config,
                                                               std::size_t grid_per_dim,
                                                               int refine_rounds = 0) {
  if (config.size() > 3) throw DomainError("brute-force welfare supports N <= 3");
  if (grid_per_dim < 2 || grid_per_dim > 1000) {
    throw DomainError("grid_per_dim must be in [2, 1000]");
  }
  const auto n = config.dim();
  Vector<Scalar> lo = Vector<Scalar>::Zero(n);
  Vector<Scalar> hi = config.mu_r();
  Vector<Scalar> best_point = Vector<Scalar>::Zero(n);
  Scalar best = -std::numeric_limits<Scalar>::infinity();

  for (int round = 0; round <= refine_rounds; ++round) {
    const Vector<Scalar> step = (hi - lo) / Scalar(grid_per_dim - 1);
    Vector<Scalar> point(n);
    std::size_t total = 1;
    for (Eigen::Index d = 0; d < n; ++d) total *= grid_per_dim;
    for (std::size_t idx = 0; idx < total; ++idx) {
      std::size_t rem = idx;
      for (Eigen::Index d = n - 1; d >= 0; --d) {
        const auto k = rem % grid_per_dim;
        rem /= grid_per_dim;
        point[d] = k + 1 == grid_per_dim ? hi[d] : lo[d] + step[d] * Scalar(k);
      }
      const Scalar v = welfare_value(config, StrategyProfile<Scalar>(point));
      if (v > best) {
        best = v;
        best_point = point;
      }
    }
    for (Eigen::Index d = 0; d < n; ++d) {
      lo[d] = std::max(Scalar(0), best_point[d] - Scalar(2) * step[d]);
      hi[d] = std::min(config.mu_r()[d], best_point[d] + Scalar(2) * step[d]);
    }
  }
  return {StrategyProfile<Scalar>(best_point), best};
}

}  // namespace cpr
