#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "cpr/errors.hpp"
#include "cpr/return_model.hpp"
#include "cpr/scalar_search.hpp"

namespace cpr {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// One team member's maximum service and review admission rates.
template <typename Scalar = double>
struct PlayerParams {
  Scalar mu_s;
  Scalar mu_r;

  /// Heterogeneity measure mu_s / mu_r.
  Scalar h() const { return mu_s / mu_r; }
  Scalar a() const { return Scalar(1) + h(); }
};

/// A full game instance with players in canonical (ascending h) order.
///
/// The constructor stably sorts the players by h and keeps the permutation,
/// so `input_index(k)` is the caller's index of canonical player k. All
/// per-player accessors use canonical indices. Immutable once built.
template <typename Scalar = double>
class GameConfig {
 public:
  GameConfig(std::vector<PlayerParams<Scalar>> players, Scalar r_s,
             const ModelFactory<Scalar>& model)
      : r_s_(r_s) {
    using std::isfinite;
    if (players.empty()) throw StructuralError("a game needs at least one player");
    if (!(r_s > Scalar(0)) || !isfinite(r_s)) {
      throw StructuralError("service reward r_s must be positive and finite");
    }
    for (std::size_t i = 0; i < players.size(); ++i) {
      const auto& pl = players[i];
      if (!(pl.mu_s > Scalar(0)) || !(pl.mu_r > Scalar(0)) || !isfinite(pl.mu_s) ||
          !isfinite(pl.mu_r)) {
        throw StructuralError("player " + std::to_string(i) +
                              ": mu_s and mu_r must be positive and finite");
      }
    }

    const auto n = players.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t l, std::size_t r) {
      return players[l].h() < players[r].h();
    });

    players_.reserve(n);
    mu_s_.resize(static_cast<Eigen::Index>(n));
    mu_r_.resize(static_cast<Eigen::Index>(n));
    h_.resize(static_cast<Eigen::Index>(n));
    a_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const auto& pl = players[order_[k]];
      const auto e = static_cast<Eigen::Index>(k);
      players_.push_back(pl);
      mu_s_[e] = pl.mu_s;
      mu_r_[e] = pl.mu_r;
      h_[e] = pl.h();
      a_[e] = pl.a();
    }
    mu_total_s_ = mu_s_.sum();
    mu_total_r_ = mu_r_.sum();
    model_ = model(mu_total_s_);
    if (!model_) throw StructuralError("model factory returned no model");
  }

  std::size_t size() const { return players_.size(); }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(players_.size()); }

  const std::vector<PlayerParams<Scalar>>& players() const { return players_; }
  const Vector<Scalar>& mu_s() const { return mu_s_; }
  const Vector<Scalar>& mu_r() const { return mu_r_; }
  const Vector<Scalar>& h() const { return h_; }
  const Vector<Scalar>& a() const { return a_; }

  Scalar r_s() const { return r_s_; }
  Scalar mu_total_s() const { return mu_total_s_; }
  Scalar mu_total_r() const { return mu_total_r_; }
  const ReturnModel<Scalar>& model() const { return *model_; }
  std::shared_ptr<const ReturnModel<Scalar>> model_ptr() const { return model_; }

  /// Caller's index of canonical player k.
  std::size_t input_index(std::size_t k) const { return order_.at(k); }
  const std::vector<std::size_t>& permutation() const { return order_; }

  /// Largest feasible review load, sum_i a_i mu_i^R.
  Scalar max_load() const { return a_.dot(mu_r_); }

  /// Reorders a canonical-order vector back to input order.
  Vector<Scalar> to_input_order(const Vector<Scalar>& canonical) const {
    Vector<Scalar> out(canonical.size());
    for (std::size_t k = 0; k < order_.size(); ++k) {
      out[static_cast<Eigen::Index>(order_[k])] = canonical[static_cast<Eigen::Index>(k)];
    }
    return out;
  }
  Vector<Scalar> from_input_order(const Vector<Scalar>& input) const {
    Vector<Scalar> out(input.size());
    for (std::size_t k = 0; k < order_.size(); ++k) {
      out[static_cast<Eigen::Index>(k)] = input[static_cast<Eigen::Index>(order_[k])];
    }
    return out;
  }

 private:
  std::vector<PlayerParams<Scalar>> players_;
  std::vector<std::size_t> order_;
  Vector<Scalar> mu_s_, mu_r_, h_, a_;
  Scalar r_s_;
  Scalar mu_total_s_{};
  Scalar mu_total_r_{};
  std::shared_ptr<const ReturnModel<Scalar>> model_;
};

/// Review admission rates in canonical player order.
template <typename Scalar = double>
struct StrategyProfile {
  Vector<Scalar> lambda_r;

  StrategyProfile() = default;
  explicit StrategyProfile(Vector<Scalar> v) : lambda_r(std::move(v)) {}

  Eigen::Index size() const { return lambda_r.size(); }
  Scalar operator[](Eigen::Index i) const { return lambda_r[i]; }
  Scalar total() const { return lambda_r.sum(); }

  static StrategyProfile zeros(Eigen::Index n) {
    return StrategyProfile(Vector<Scalar>::Zero(n));
  }
};

template <typename Scalar>
void check_dimension(const GameConfig<Scalar>& config, Eigen::Index n) {
  if (n != config.dim()) {
    throw StructuralError("profile has " + std::to_string(n) + " entries, game has " +
                          std::to_string(config.size()) + " players");
  }
}

/// Throws unless every lambda_i lies in [0, mu_i^R].
template <typename Scalar>
void check_in_box(const GameConfig<Scalar>& config, const StrategyProfile<Scalar>& profile) {
  check_dimension(config, profile.size());
  for (Eigen::Index i = 0; i < profile.size(); ++i) {
    const Scalar v = profile[i];
    if (!(v >= Scalar(0)) || v > config.mu_r()[i]) {
      throw StructuralError("lambda_r[" + std::to_string(i) + "] outside [0, mu_r]");
    }
  }
}

/// Service rates implied by operating at full capacity: mu_i^S - h_i lambda_i^R.
template <typename Scalar>
Vector<Scalar> service_rates(const GameConfig<Scalar>& config,
                             const StrategyProfile<Scalar>& profile) {
  check_dimension(config, profile.size());
  return config.mu_s() - config.h().cwiseProduct(profile.lambda_r);
}

/// Review load sum_i a_i lambda_i^R.
template <typename Scalar>
Scalar review_load(const GameConfig<Scalar>& config, const StrategyProfile<Scalar>& profile) {
  check_dimension(config, profile.size());
  return config.a().dot(profile.lambda_r);
}

/// x = mu_T^S - sum_i a_i lambda_i^R. Negative when reviewing outpaces service.
template <typename Scalar>
Scalar slackness(const GameConfig<Scalar>& config, const StrategyProfile<Scalar>& profile) {
  return config.mu_total_s() - review_load(config, profile);
}

/// r(x) (1 - p(x)), the incentive shared by every player before the h_i r^S offset.
template <typename Scalar>
Scalar shared_incentive(const GameConfig<Scalar>& config, Scalar x) {
  if (x <= Scalar(0)) return Scalar(0);
  const auto& m = config.model();
  return m.r(x) * (Scalar(1) - m.p(x));
}

template <typename Scalar>
Scalar incentive_at(const GameConfig<Scalar>& config, Scalar x, std::size_t i) {
  if (i >= config.size()) throw StructuralError("player index out of range");
  return shared_incentive(config, x) - config.h()[static_cast<Eigen::Index>(i)] * config.r_s();
}

/// f_i(x) = r(x)(1 - p(x)) - h_i r^S at the profile's slackness.
template <typename Scalar>
Scalar incentive(const GameConfig<Scalar>& config, const StrategyProfile<Scalar>& profile,
                 std::size_t i) {
  return incentive_at(config, slackness(config, profile), i);
}

template <typename Scalar>
struct IncentiveDerivatives {
  Scalar df_dx;
  Scalar d2f_dx2;
};

/// x-derivatives of f_i. They do not depend on i; the lambda_i-partial of
/// f_i is -a_i * df_dx. Only defined for x in (0, mu_T^S].
template <typename Scalar>
IncentiveDerivatives<Scalar> incentive_dx(const GameConfig<Scalar>& config, Scalar x) {
  if (!(x > Scalar(0))) {
    throw DomainError("incentive derivative undefined for x <= 0 (p = 1 plateau)");
  }
  const auto& m = config.model();
  const Scalar r = m.r(x), dr = m.dr(x), d2r = m.d2r(x);
  const Scalar p = m.p(x), dp = m.dp(x), d2p = m.d2p(x);
  return {dr * (Scalar(1) - p) - r * dp,
          d2r * (Scalar(1) - p) - Scalar(2) * dr * dp - r * d2p};
}

template <typename Scalar>
IncentiveDerivatives<Scalar> incentive_dx(const GameConfig<Scalar>& config,
                                          const StrategyProfile<Scalar>& profile) {
  return incentive_dx(config, slackness(config, profile));
}

/// Expected utility mu_i^S r^S + lambda_i^R f_i(x).
template <typename Scalar>
Scalar expected_utility(const GameConfig<Scalar>& config, const StrategyProfile<Scalar>& profile,
                        std::size_t i) {
  const auto e = static_cast<Eigen::Index>(i);
  const Scalar base = config.mu_s()[e] * config.r_s();
  const Scalar lam = profile[e];
  if (lam == Scalar(0)) return base;
  return base + lam * incentive(config, profile, i);
}

/// Unique maximizer of f_i on (0, mu_T^S), the root of df/dx. The default
/// tolerance bisects until the bracket cannot shrink.
template <typename Scalar>
Scalar xbar(const GameConfig<Scalar>& config, Scalar tol = Scalar(0)) {
  const Scalar end = config.mu_total_s();
  const Scalar eps = end * Scalar(1e-9);
  const auto slope = [&](Scalar x) { return incentive_dx(config, x).df_dx; };
  if (!(slope(eps) > Scalar(0)) || !(slope(end - eps) < Scalar(0))) {
    throw DomainError("df/dx has no sign change on (0, mu_T^S): no interior maximizer");
  }
  return search::bisect(slope, eps, end - eps, tol);
}

enum class Assumption { A1, A2, A3 };

inline const char* to_string(Assumption a) {
  switch (a) {
    case Assumption::A1: return "A1";
    case Assumption::A2: return "A2";
    case Assumption::A3: return "A3";
  }
  return "?";
}

struct Violation {
  Assumption assumption;
  std::optional<std::size_t> player;  // canonical index, A3 only
  double x;                           // witnessing point
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool passed() const { return violations.empty(); }
  bool holds(Assumption a) const {
    return std::none_of(violations.begin(), violations.end(),
                        [a](const Violation& v) { return v.assumption == a; });
  }
};

/// Checks A1 and A2 on a uniform grid over [0, mu_T^S] and A3 for every player.
/// Only the first witness per property is reported.
template <typename Scalar>
ValidationReport validate_assumptions(const GameConfig<Scalar>& config,
                                      std::size_t grid_size = 512) {
  using std::abs;
  if (grid_size < 10) throw DomainError("validation grid needs at least 10 points");
  ValidationReport report;
  const auto& m = config.model();
  const Scalar end = config.mu_total_s();
  const Scalar step = end / Scalar(grid_size - 1);
  const Scalar scale_r = abs(m.r(Scalar(0))) + Scalar(1);
  const auto add = [&](Assumption a, Scalar x, std::string detail,
                       std::optional<std::size_t> player = std::nullopt) {
    report.violations.push_back({a, player, static_cast<double>(x), std::move(detail)});
  };
  const auto grid = [&](std::size_t k) {
    return k + 1 == grid_size ? end : step * Scalar(k);
  };

  // A1: r(mu_T^S) = 0, r strictly decreasing and strictly concave.
  if (abs(m.r(end)) > Scalar(1e-12) * scale_r) add(Assumption::A1, end, "r(mu_T^S) != 0");
  for (std::size_t k = 0; k < grid_size; ++k) {
    const Scalar x = grid(k);
    if (!(m.dr(x) < Scalar(0))) {
      add(Assumption::A1, x, "r is not strictly decreasing (r' >= 0)");
      break;
    }
  }
  for (std::size_t k = 1; k + 1 < grid_size; ++k) {
    const Scalar x = grid(k);
    const Scalar second = m.r(x - step) - Scalar(2) * m.r(x) + m.r(x + step);
    if (!(second < Scalar(0))) {
      add(Assumption::A1, x, "r is not strictly concave (second difference >= 0)");
      break;
    }
  }

  // A2: p = 1 for x <= 0, p -> 1 at 0+, non-increasing and convex on (0, mu_T^S].
  if (m.p(Scalar(0)) != Scalar(1) || m.p(-end) != Scalar(1)) {
    add(Assumption::A2, Scalar(0), "p != 1 on x <= 0");
  }
  const Scalar tiny = end * Scalar(1e-10);
  if (abs(Scalar(1) - m.p(tiny)) > Scalar(1e-6)) {
    add(Assumption::A2, tiny, "p does not approach 1 as x -> 0+");
  }
  for (std::size_t k = 1; k < grid_size; ++k) {
    const Scalar x = grid(k);
    if (m.dp(x) > Scalar(0) || m.p(x) > Scalar(1) || m.p(x) < Scalar(0)) {
      add(Assumption::A2, x, "p is not a non-increasing probability");
      break;
    }
  }
  for (std::size_t k = 2; k + 1 < grid_size; ++k) {
    const Scalar x = grid(k);
    const Scalar second = m.p(x - step) - Scalar(2) * m.p(x) + m.p(x + step);
    if (second < -Scalar(1e-14)) {
      add(Assumption::A2, x, "p is not convex (second difference < 0)");
      break;
    }
  }

  // A3: a lone reviewer at full rate has a positive incentive.
  for (std::size_t i = 0; i < config.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    const Scalar x = end - config.a()[e] * config.mu_r()[e];
    if (!(incentive_at(config, x, i) > Scalar(0))) {
      add(Assumption::A3, x, "f_i(mu_T^S - a_i mu_i^R) <= 0", i);
    }
  }
  return report;
}

}  // namespace cpr
