#pragma once

#include <random>
#include <vector>

#include "cpr/game.hpp"

namespace cpr::test {

using Config = GameConfig<double>;
using Profile = StrategyProfile<double>;

inline Config team(std::vector<PlayerParams<double>> players, double r_s = 1.0, double A = 5.0,
                   double B = 0.5) {
  return Config(std::move(players), r_s, exponential_model(A, B));
}

inline Config homogeneous(std::size_t n, double mu_s = 1.0, double mu_r = 2.0) {
  return team(std::vector<PlayerParams<double>>(n, {mu_s, mu_r}));
}

/// Default six-player team used throughout: every player (1, 2).
inline Config default_team() { return homogeneous(6); }

/// Heterogeneous team with mu_s <= mu_r, loosely around means (1, 2).
inline Config random_team(std::mt19937_64& rng, std::size_t n, double spread = 0.3) {
  std::normal_distribution<double> ns(1.0, spread), nr(2.0, spread);
  std::vector<PlayerParams<double>> players;
  while (players.size() < n) {
    const double s = ns(rng), r = nr(rng);
    if (s > 0 && r > 0 && s <= r) players.push_back({s, r});
  }
  return team(players);
}

inline Profile random_profile(std::mt19937_64& rng, const Config& config) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector<double> lam(config.dim());
  for (Eigen::Index i = 0; i < lam.size(); ++i) lam[i] = u(rng) * config.mu_r()[i];
  return Profile(lam);
}

}  // namespace cpr::test
