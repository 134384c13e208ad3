#pragma once

#include <algorithm>

#include "cpr/errors.hpp"
#include "cpr/game.hpp"
#include "cpr/welfare.hpp"

namespace cpr {

/// Inefficiency of a PNE against the welfare optimum, with the analytic
/// upper bounds anchored at xbar.
template <typename Scalar = double>
struct InefficiencyReport {
  Scalar poa;   // Psi(SW) / Psi(PNE)
  Scalar tri;   // lambda_T(SW) / lambda_T(PNE)
  Scalar li;    // load(PNE) / load(SW)
  Scalar poa_bound;
  Scalar tri_bound;
  Scalar li_bound;
  Scalar xbar;
  /// Bounds are only guaranteed when this holds; they are reported regardless.
  bool bounds_guaranteed;

  bool within_bounds() const { return poa < poa_bound && tri < tri_bound && li < li_bound; }
};

/// min_i mu_i^S > mu_T^S h_N / (N (1 + h_N)).
template <typename Scalar>
bool theorem3_precondition(const GameConfig<Scalar>& config) {
  const Scalar h_n = config.h()[config.dim() - 1];
  const Scalar rhs = config.mu_total_s() * h_n / (Scalar(config.size()) * (Scalar(1) + h_n));
  return config.mu_s().minCoeff() > rhs;
}

template <typename Scalar = double>
struct InefficiencyBounds {
  Scalar xbar;
  Scalar poa;
  Scalar tri;
  Scalar li;
};

template <typename Scalar>
InefficiencyBounds<Scalar> inefficiency_bounds(const GameConfig<Scalar>& config) {
  const Scalar x = xbar(config);
  const Scalar end = config.mu_total_s();
  const Scalar a_1 = config.a()[0];
  const Scalar a_n = config.a()[config.dim() - 1];
  const Scalar li = end / (end - x);
  return {x, li * a_n, li * a_n / a_1, li};
}

/// Psi(PNE) lower bound mu_T^S r^S + ((mu_T^S - xbar) / a_N) f_N(xbar).
template <typename Scalar>
Scalar pne_welfare_lower_bound(const GameConfig<Scalar>& config) {
  const Scalar x = xbar(config);
  const auto last = config.size() - 1;
  return config.mu_total_s() * config.r_s() +
         (config.mu_total_s() - x) / config.a()[config.dim() - 1] *
             incentive_at(config, x, last);
}

template <typename Scalar>
InefficiencyReport<Scalar> measure(const GameConfig<Scalar>& config,
                                   const StrategyProfile<Scalar>& pne,
                                   const StrategyProfile<Scalar>& sw) {
  check_in_box(config, pne);
  check_in_box(config, sw);
  const Scalar total_pne = pne.total();
  const Scalar load_sw = review_load(config, sw);
  if (!(total_pne > Scalar(0))) throw DegenerateError("no player reviews at the PNE");
  if (!(load_sw > Scalar(0))) throw DegenerateError("welfare optimum has zero review load");

  const auto b = inefficiency_bounds(config);
  return {welfare_value(config, sw) / welfare_value(config, pne),
          sw.total() / total_pne,
          review_load(config, pne) / load_sw,
          b.poa,
          b.tri,
          b.li,
          b.xbar,
          theorem3_precondition(config)};
}

}  // namespace cpr
