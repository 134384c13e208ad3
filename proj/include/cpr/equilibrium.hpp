#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "cpr/errors.hpp"
#include "cpr/game.hpp"
#include "cpr/scalar_search.hpp"

namespace cpr {

enum class BestResponseTag { DropOut, Interior, Saturated };

inline const char* to_string(BestResponseTag t) {
  switch (t) {
    case BestResponseTag::DropOut: return "dropout";
    case BestResponseTag::Interior: return "interior";
    case BestResponseTag::Saturated: return "saturated";
  }
  return "?";
}

template <typename Scalar = double>
struct BestResponseCase {
  BestResponseTag tag;
  Scalar value;
  /// g(value) = f_i + value * df_i/dlambda_i; zero for interior responses.
  Scalar stationarity_residual;
};

enum class Schedule { Sequential, Simultaneous };

inline const char* to_string(Schedule s) {
  return s == Schedule::Sequential ? "sequential" : "simultaneous";
}

/// Outcome of the PNE characterization checks. Each flag is one check; the
/// findings list explains every failed one.
struct PneReport {
  bool slope_positive = true;           // df/dx(x*) > 0
  bool zero_iff_nonpositive = true;     // lambda_i = 0  <=>  f_i(x*) <= tol
  bool first_order = true;              // lambda_i = min(f_i / (a_i df/dx), mu_i^R)
  bool monotone_structure = true;       // a_i lambda_i non-increasing past unsaturated players
  bool zero_suffix = true;              // dropouts form a suffix of the h-order
  bool no_profitable_deviation = true;  // exact best responses gain at most tol
  double x = 0.0;
  double max_deviation_gain = 0.0;
  std::vector<std::string> findings;

  bool passed() const {
    return slope_positive && zero_iff_nonpositive && first_order && monotone_structure &&
           zero_suffix && no_profitable_deviation;
  }
};

template <typename Scalar = double>
struct EquilibriumResult {
  StrategyProfile<Scalar> profile;
  int iterations = 0;
  std::vector<double> sup_norm_history;
  Schedule schedule = Schedule::Sequential;
  PneReport verification;
};

template <typename Scalar = double>
struct BrdOptions {
  Schedule schedule = Schedule::Sequential;
  Scalar tol_brd = Scalar(1e-9);
  int max_iters = 10000;
  Scalar tol_stat = Scalar(1e-11);
  Scalar verify_tol = Scalar(1e-8);
};

/// Best responses of every player of one game.
///
/// Each f_i is strictly concave in x with the same shape for all players, so
/// the set where f_i > 0 is an interval (gamma1_i, gamma2_i) around xbar that
/// does not depend on the other players. Those intervals are found once here;
/// a response then only needs the aggregate sigma_i = sum_{j != i} a_j lambda_j.
template <typename Scalar = double>
class BestResponder {
 public:
  explicit BestResponder(const GameConfig<Scalar>& config, Scalar tol_stat = Scalar(1e-11))
      : config_(config), tol_stat_(tol_stat), xbar_(xbar(config)) {
    const Scalar end = config.mu_total_s();
    const Scalar x_tol = end * std::numeric_limits<Scalar>::epsilon();
    bands_.reserve(config.size());
    for (std::size_t i = 0; i < config.size(); ++i) {
      const auto f = [&](Scalar x) { return incentive_at(config, x, i); };
      Band band;
      if (f(xbar_) > Scalar(0)) {
        // f_i(0+) = f_i(mu_T^S) = -h_i r^S < 0, so both roots are interior.
        band.lo = search::bisect(f, Scalar(0), xbar_, x_tol);
        band.hi = search::bisect(f, xbar_, end, x_tol);
        band.empty = false;
      }
      bands_.push_back(band);
    }
  }

  const GameConfig<Scalar>& config() const { return config_; }
  Scalar xbar_value() const { return xbar_; }

  /// Positive-incentive interval of player i in x, if any.
  bool has_positive_incentive(std::size_t i) const { return !bands_.at(i).empty; }
  Scalar gamma_lo(std::size_t i) const { return bands_.at(i).lo; }
  Scalar gamma_hi(std::size_t i) const { return bands_.at(i).hi; }

  /// Best response of player i when the others load sigma = sum_{j != i} a_j lambda_j.
  BestResponseCase<Scalar> respond(std::size_t i, Scalar sigma) const {
    const auto e = static_cast<Eigen::Index>(i);
    const Scalar a = config_.a()[e];
    const Scalar mu_r = config_.mu_r()[e];
    const Scalar x0 = config_.mu_total_s() - sigma;
    const Band& band = bands_.at(i);

    const auto drop = [&] {
      return BestResponseCase<Scalar>{BestResponseTag::DropOut, Scalar(0),
                                      stationarity(i, x0, Scalar(0))};
    };
    if (x0 <= Scalar(0) || band.empty) return drop();

    // Review rates with f_i > 0: x0 - a*lambda in (gamma1, gamma2).
    const Scalar cap = std::min(mu_r, x0 / a);
    const Scalar lo = std::max(Scalar(0), (x0 - band.hi) / a);
    const Scalar hi = std::min(cap, (x0 - band.lo) / a);
    if (!(hi > lo)) return drop();

    if (hi == mu_r) {
      const Scalar g_end = stationarity(i, x0, mu_r);
      if (g_end >= Scalar(0)) return {BestResponseTag::Saturated, mu_r, g_end};
    }

    // g > 0 on the rising part of f_i and strictly decreasing on the falling
    // part, so it has exactly one root in (lo, hi).
    Scalar left = lo, right = hi;
    Scalar g_right = stationarity(i, x0, right);
    if (g_right >= Scalar(0)) return {BestResponseTag::Interior, right, g_right};
    Scalar mid = left + (right - left) / Scalar(2);
    Scalar g_mid = stationarity(i, x0, mid);
    for (int it = 0; it < 400; ++it) {
      using std::abs;
      if (abs(g_mid) <= tol_stat_) break;
      if (g_mid > Scalar(0)) {
        left = mid;
      } else {
        right = mid;
      }
      const Scalar next = left + (right - left) / Scalar(2);
      if (next <= left || next >= right) break;
      mid = next;
      g_mid = stationarity(i, x0, mid);
    }
    return {BestResponseTag::Interior, mid, g_mid};
  }

  /// d(u_i)/d(lambda_i) = f_i(x) - lambda * a_i * df/dx at x = x0 - a_i * lambda.
  Scalar stationarity(std::size_t i, Scalar x0, Scalar lambda) const {
    const auto e = static_cast<Eigen::Index>(i);
    const Scalar a = config_.a()[e];
    const Scalar x = x0 - a * lambda;
    const Scalar f = incentive_at(config_, x, i);
    if (x <= Scalar(0)) return f;  // flat region: f' = 0
    return f - lambda * a * incentive_dx(config_, x).df_dx;
  }

  /// Expected utility of player i playing lambda against sigma.
  Scalar utility(std::size_t i, Scalar sigma, Scalar lambda) const {
    const auto e = static_cast<Eigen::Index>(i);
    const Scalar base = config_.mu_s()[e] * config_.r_s();
    if (lambda == Scalar(0)) return base;
    const Scalar x = config_.mu_total_s() - sigma - config_.a()[e] * lambda;
    return base + lambda * incentive_at(config_, x, i);
  }

 private:
  struct Band {
    bool empty = true;
    Scalar lo{};
    Scalar hi{};
  };

  const GameConfig<Scalar>& config_;
  Scalar tol_stat_;
  Scalar xbar_;
  std::vector<Band> bands_;
};

/// Best response of player i to the other players' rates (length N-1, in
/// canonical order with player i removed).
template <typename Scalar>
BestResponseCase<Scalar> best_response(const GameConfig<Scalar>& config,
                                       const Vector<Scalar>& lambda_minus_i, std::size_t i,
                                       Scalar tol_stat = Scalar(1e-11)) {
  if (i >= config.size()) throw StructuralError("player index out of range");
  if (lambda_minus_i.size() + 1 != config.dim()) {
    throw StructuralError("lambda_minus_i must have N-1 entries");
  }
  Scalar sigma = 0;
  for (Eigen::Index k = 0, j = 0; j < config.dim(); ++j) {
    if (static_cast<std::size_t>(j) == i) continue;
    const Scalar v = lambda_minus_i[k++];
    if (!(v >= Scalar(0)) || v > config.mu_r()[j]) {
      throw StructuralError("lambda_minus_i entry for player " + std::to_string(j) +
                            " outside [0, mu_r]");
    }
    sigma += config.a()[j] * v;
  }
  return BestResponder<Scalar>(config, tol_stat).respond(i, sigma);
}

template <typename Scalar>
PneReport verify_pne(const BestResponder<Scalar>& responder,
                     const StrategyProfile<Scalar>& profile, Scalar tol) {
  using std::abs;
  const auto& config = responder.config();
  check_in_box(config, profile);
  PneReport rep;
  const Scalar x = slackness(config, profile);
  rep.x = static_cast<double>(x);
  const auto n = config.dim();
  const auto fail = [&rep](bool& flag, std::string msg) {
    flag = false;
    rep.findings.push_back(std::move(msg));
  };

  Scalar slope = 0;
  if (x > Scalar(0)) slope = incentive_dx(config, x).df_dx;
  if (!(slope > Scalar(0))) fail(rep.slope_positive, "df/dx(x*) <= 0");

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Scalar lam = profile[i];
    const Scalar f = incentive_at(config, x, ui);
    const bool is_zero = lam <= tol;
    if (is_zero != (f <= tol)) {
      fail(rep.zero_iff_nonpositive,
           "player " + std::to_string(i) + ": zero rate does not match f_i <= 0");
    }
    if (!is_zero) {
      const Scalar mu_r = config.mu_r()[i];
      bool ok = false;
      if (slope > Scalar(0)) {
        const Scalar target = f / (config.a()[i] * slope);
        ok = abs(lam - target) <= tol || (abs(lam - mu_r) <= tol && target >= mu_r - tol);
      }
      if (!ok) {
        fail(rep.first_order,
             "player " + std::to_string(i) + ": first-order condition violated");
      }
    }
  }

  for (Eigen::Index k1 = 0; k1 < n; ++k1) {
    if (!(profile[k1] < config.mu_r()[k1] - tol)) continue;
    for (Eigen::Index k2 = k1 + 1; k2 < n; ++k2) {
      if (config.a()[k1] * profile[k1] < config.a()[k2] * profile[k2] - tol ||
          profile[k1] < profile[k2] - tol) {
        fail(rep.monotone_structure, "players " + std::to_string(k1) + "," +
                                         std::to_string(k2) + ": rates not monotone in h");
        k1 = n;
        break;
      }
    }
  }

  bool seen_zero = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool is_zero = profile[i] <= tol;
    if (seen_zero && !is_zero) {
      fail(rep.zero_suffix, "dropouts are not a suffix of the h-order");
      break;
    }
    seen_zero = seen_zero || is_zero;
  }

  const Scalar load = review_load(config, profile);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Scalar sigma = load - config.a()[i] * profile[i];
    const auto br = responder.respond(ui, sigma);
    const Scalar now = responder.utility(ui, sigma, profile[i]);
    const Scalar gain = responder.utility(ui, sigma, br.value) - now;
    rep.max_deviation_gain = std::max(rep.max_deviation_gain, static_cast<double>(gain));
    if (gain > tol * (Scalar(1) + abs(now))) {
      fail(rep.no_profitable_deviation,
           "player " + std::to_string(i) + " gains by deviating to " +
               std::to_string(static_cast<double>(br.value)));
    }
  }
  return rep;
}

template <typename Scalar>
PneReport verify_pne(const GameConfig<Scalar>& config, const StrategyProfile<Scalar>& profile,
                     Scalar tol = Scalar(1e-8)) {
  return verify_pne(BestResponder<Scalar>(config), profile, tol);
}

/// Best-response dynamics from `initial` until the per-sweep sup-norm change
/// drops below tol_brd. Throws ConvergenceError with the trace otherwise.
template <typename Scalar>
EquilibriumResult<Scalar> run_brd(const GameConfig<Scalar>& config,
                                  const StrategyProfile<Scalar>& initial,
                                  const BrdOptions<Scalar>& opts = {}) {
  check_in_box(config, initial);
  if (!(opts.tol_brd > Scalar(0))) throw DomainError("tol_brd must be positive");
  if (opts.max_iters < 1) throw DomainError("max_iters must be at least 1");

  const BestResponder<Scalar> responder(config, opts.tol_stat);
  const auto n = config.dim();
  const auto& a = config.a();
  EquilibriumResult<Scalar> result;
  result.schedule = opts.schedule;
  Vector<Scalar> lam = initial.lambda_r;
  Vector<Scalar> next(n);

  for (int it = 1; it <= opts.max_iters; ++it) {
    Scalar change = 0;
    if (opts.schedule == Schedule::Sequential) {
      Scalar load = a.dot(lam);
      for (Eigen::Index i = 0; i < n; ++i) {
        const Scalar sigma = load - a[i] * lam[i];
        const Scalar v = responder.respond(static_cast<std::size_t>(i), sigma).value;
        change = std::max(change, Scalar(std::abs(v - lam[i])));
        load = sigma + a[i] * v;
        lam[i] = v;
      }
    } else {
      const Scalar load = a.dot(lam);
      for (Eigen::Index i = 0; i < n; ++i) {
        next[i] = responder.respond(static_cast<std::size_t>(i), load - a[i] * lam[i]).value;
      }
      change = (next - lam).cwiseAbs().maxCoeff();
      lam.swap(next);
    }
    result.sup_norm_history.push_back(static_cast<double>(change));
    if (change < opts.tol_brd) {
      result.iterations = it;
      result.profile = StrategyProfile<Scalar>(lam);
      result.verification = verify_pne(responder, result.profile, opts.verify_tol);
      return result;
    }
  }
  throw ConvergenceError(std::string(to_string(opts.schedule)) +
                             " best-response dynamics did not converge within " +
                             std::to_string(opts.max_iters) + " sweeps",
                         std::move(result.sup_norm_history));
}

template <typename Scalar>
StrategyProfile<Scalar> half_capacity_profile(const GameConfig<Scalar>& config) {
  return StrategyProfile<Scalar>(config.mu_r() / Scalar(2));
}

template <typename Scalar = double>
struct HomogeneousSolution {
  Scalar lambda;  // per-player review rate
  Scalar x;
};

namespace detail {

template <typename Scalar>
void check_homogeneous(const GameConfig<Scalar>& config) {
  using std::abs;
  const Scalar h = config.h()[0];
  for (Eigen::Index i = 1; i < config.dim(); ++i) {
    if (abs(config.h()[i] - h) > Scalar(1e-12) * h) {
      throw HomogeneityError("players do not share one heterogeneity ratio h");
    }
  }
  const Scalar need = config.mu_total_s() / (Scalar(config.size()) * (Scalar(1) + h));
  if (config.mu_r().minCoeff() < need) {
    throw HomogeneityError("min mu_r below mu_T^S / (N (1 + h))");
  }
}

// Root of (mu_T^S - x) df/dx - weight * f(x) on (gamma1, xbar).
template <typename Scalar>
HomogeneousSolution<Scalar> solve_symmetric(const GameConfig<Scalar>& config, Scalar weight,
                                            Scalar tol) {
  check_homogeneous(config);
  const BestResponder<Scalar> responder(config);
  const Scalar end = config.mu_total_s();
  if (!responder.has_positive_incentive(0)) return {Scalar(0), end};
  const auto residual = [&](Scalar x) {
    return (end - x) * incentive_dx(config, x).df_dx - weight * incentive_at(config, x, 0);
  };
  const Scalar x = search::bisect(residual, responder.gamma_lo(0), responder.xbar_value(), tol);
  const Scalar a = config.a()[0];
  return {(end - x) / (a * Scalar(config.size())), x};
}

}  // namespace detail

/// Symmetric PNE of a homogeneous game. Every player's first-order condition
/// lambda = f(x) / (a df/dx) holds, so the team total is N f / (a df/dx).
template <typename Scalar>
HomogeneousSolution<Scalar> homogeneous_pne(const GameConfig<Scalar>& config,
                                            Scalar tol = Scalar(1e-11)) {
  return detail::solve_symmetric(config, Scalar(config.size()), tol);
}

/// Symmetric welfare optimum of a homogeneous game: the team total solves
/// lambda_T = f(x) / (a df/dx).
template <typename Scalar>
HomogeneousSolution<Scalar> homogeneous_symmetric_optimum(const GameConfig<Scalar>& config,
                                                          Scalar tol = Scalar(1e-11)) {
  return detail::solve_symmetric(config, Scalar(1), tol);
}

}  // namespace cpr
