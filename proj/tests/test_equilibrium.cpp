#include <algorithm>
#include <cmath>
#include <random>

#include "cpr/equilibrium.hpp"
#include "cpr/welfare.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cpr;
using namespace cpr::test;

namespace {

// Grid argmax of player i's utility against fixed sigma.
double grid_best(const Config& g, std::size_t i, double sigma, int points) {
  const auto e = static_cast<Eigen::Index>(i);
  const double cap = g.mu_r()[e];
  double best_lam = 0, best = -1e300;
  for (int k = 0; k < points; ++k) {
    const double lam = cap * k / (points - 1);
    const double x = g.mu_total_s() - sigma - g.a()[e] * lam;
    const double u = g.mu_s()[e] * g.r_s() + lam * incentive_at(g, x, i);
    if (u > best) {
      best = u;
      best_lam = lam;
    }
  }
  return best_lam;
}

double max_grid_gain(const Config& g, const Profile& prof, int points) {
  double gain = 0;
  for (Eigen::Index i = 0; i < g.dim(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double base = expected_utility(g, prof, ui);
    Profile dev = prof;
    for (int k = 0; k < points; ++k) {
      dev.lambda_r[i] = g.mu_r()[i] * k / (points - 1);
      gain = std::max(gain, expected_utility(g, dev, ui) - base);
    }
  }
  return gain;
}

}  // namespace

TEST_SUITE("equilibrium") {

TEST_CASE("overloaded pool means drop out") {
  const auto g = default_team();
  const BestResponder<double> br(g);
  const auto c = br.respond(0, g.mu_total_s() + 0.1);
  CHECK(c.tag == BestResponseTag::DropOut);
  CHECK(c.value == 0.0);
  CHECK(br.respond(2, g.mu_total_s()).tag == BestResponseTag::DropOut);
}

TEST_CASE("alone in the pool a player saturates when the incentive keeps rising") {
  // A single small reviewer cannot push x past xbar.
  const auto g = team({{3, 3}, {3, 3}, {0.2, 0.25}});
  const BestResponder<double> br(g);
  const std::size_t small = 0;
  REQUIRE(g.input_index(small) == 2);
  const auto c = br.respond(small, 0.0);
  CHECK(c.tag == BestResponseTag::Saturated);
  CHECK(c.value == g.mu_r()[0]);
  CHECK(std::abs(c.value - grid_best(g, small, 0.0, 100001)) <= g.mu_r()[0] / 100000);
}

TEST_CASE("interior best response hits the stationarity tolerance") {
  const auto g = default_team();
  const BestResponder<double> br(g, 1e-11);
  const auto c = br.respond(0, 5 * 1.5 * 0.5);
  REQUIRE(c.tag == BestResponseTag::Interior);
  CHECK(c.value > 0);
  CHECK(c.value < g.mu_r()[0]);
  CHECK(std::abs(c.stationarity_residual) <= 1e-11);
}

TEST_CASE("two-player best response matches a dense grid") {
  const auto g = team({{1, 2}, {1, 2}});
  Vector<double> others(1);
  others << 0.3;
  const auto c = best_response(g, others, 0);
  constexpr int kPoints = 1'000'000;
  const double spacing = g.mu_r()[0] / (kPoints - 1);
  CHECK(std::abs(c.value - grid_best(g, 0, g.a()[1] * 0.3, kPoints)) <= spacing);
}

TEST_CASE("best response is optimal against a grid on small random games") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    const auto g = random_team(rng, 1 + rep % 3, 0.4);
    const BestResponder<double> br(g);
    const auto prof = random_profile(rng, g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto e = static_cast<Eigen::Index>(i);
      const double sigma = g.a().dot(prof.lambda_r) - g.a()[e] * prof[e];
      const double v = br.respond(i, sigma).value;
      const double u_br = br.utility(i, sigma, v);
      const double u_grid = br.utility(i, sigma, grid_best(g, i, sigma, 20001));
      CHECK(u_br >= u_grid - 1e-12);
    }
  }
}

TEST_CASE("best response does not increase with the others' load") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 10; ++rep) {
    const auto g = random_team(rng, 4, 0.4);
    const BestResponder<double> br(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double prev = br.respond(i, 0.0).value;
      for (double s = 0.01; s < g.mu_total_s() + 0.5; s += 0.01) {
        const double v = br.respond(i, s).value;
        CHECK(v <= prev + 1e-9);
        prev = v;
      }
    }
  }
}

TEST_CASE("best_response validates its inputs") {
  const auto g = default_team();
  CHECK_THROWS_AS(best_response(g, Vector<double>(Vector<double>::Zero(4)), 0), StructuralError);
  CHECK_THROWS_AS(best_response(g, Vector<double>(Vector<double>::Zero(5)), 6), StructuralError);
  Vector<double> bad = Vector<double>::Zero(5);
  bad[1] = 5.0;
  CHECK_THROWS_AS(best_response(g, bad, 0), StructuralError);
}

TEST_CASE("sequential dynamics on a homogeneous team give equal rates") {
  const auto g = default_team();
  const auto res = run_brd(g, half_capacity_profile(g));
  CHECK(res.verification.passed());
  for (Eigen::Index i = 1; i < g.dim(); ++i) {
    CHECK(std::abs(res.profile[i] - res.profile[0]) <= 1e-8);
  }
  CHECK(res.sup_norm_history.back() < 1e-9);
  CHECK(res.iterations == static_cast<int>(res.sup_norm_history.size()));
}

TEST_CASE("random starts reach the same profile") {
  std::mt19937_64 rng(23);
  for (int team_rep = 0; team_rep < 3; ++team_rep) {
    const auto g = random_team(rng, 6, 0.3);
    const auto ref = run_brd(g, half_capacity_profile(g));
    for (int s = 0; s < 20; ++s) {
      const auto other = run_brd(g, random_profile(rng, g));
      CHECK((other.profile.lambda_r - ref.profile.lambda_r).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("two-player equilibrium survives a unilateral deviation scan") {
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 5; ++rep) {
    const auto g = random_team(rng, 2, 0.4);
    const auto res = run_brd(g, half_capacity_profile(g));
    CHECK(max_grid_gain(g, res.profile, 10000) <= 1e-8);
  }
}

TEST_CASE("dynamics fail loudly when they cannot settle") {
  const auto g = default_team();
  BrdOptions<double> opts;
  opts.max_iters = 3;
  try {
    run_brd(g, half_capacity_profile(g), opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.trace().size() == 3);
  }
  opts = {};
  opts.tol_brd = 0;
  CHECK_THROWS_AS(run_brd(g, half_capacity_profile(g), opts), DomainError);
  CHECK_THROWS_AS(run_brd(g, Profile(g.mu_r() * 2.0)), StructuralError);
}

TEST_CASE("simultaneous dynamics agree with sequential for a single player") {
  const auto g = team({{0.7, 1.5}});
  BrdOptions<double> opts;
  opts.schedule = Schedule::Simultaneous;
  const auto sim = run_brd(g, half_capacity_profile(g), opts);
  const auto seq = run_brd(g, half_capacity_profile(g));
  CHECK(sim.schedule == Schedule::Simultaneous);
  CHECK(std::abs(sim.profile[0] - seq.profile[0]) < 1e-12);
}

TEST_CASE("verification flags") {
  const auto g = default_team();
  const auto res = run_brd(g, half_capacity_profile(g));

  SUBCASE("converged profile passes every check") {
    const auto rep = res.verification;
    CHECK(rep.slope_positive);
    CHECK(rep.zero_iff_nonpositive);
    CHECK(rep.first_order);
    CHECK(rep.monotone_structure);
    CHECK(rep.zero_suffix);
    CHECK(rep.no_profitable_deviation);
    CHECK(rep.findings.empty());
  }
  SUBCASE("all-zero profile is not an equilibrium") {
    const auto rep = verify_pne(g, Profile(Vector<double>::Zero(6)));
    CHECK_FALSE(rep.passed());
    CHECK_FALSE(rep.no_profitable_deviation);
    CHECK_FALSE(rep.findings.empty());
  }
  SUBCASE("a perturbed coordinate is caught") {
    for (Eigen::Index i = 0; i < g.dim(); ++i) {
      for (double d : {1e-3, -1e-3}) {
        Profile p = res.profile;
        p.lambda_r[i] += d;
        CHECK_FALSE(verify_pne(g, p).passed());
      }
    }
  }
}

TEST_CASE("heterogeneous equilibria have the prefix structure") {
  std::mt19937_64 rng(25);
  for (int rep = 0; rep < 40; ++rep) {
    const auto g = random_team(rng, 6, 0.5);
    const auto res = run_brd(g, half_capacity_profile(g));
    CHECK(res.verification.passed());
    bool seen_zero = false;
    for (Eigen::Index i = 0; i < g.dim(); ++i) {
      if (res.profile[i] <= 1e-12) seen_zero = true;
      else CHECK_FALSE(seen_zero);
    }
  }
}

TEST_CASE("homogeneous closed forms") {
  for (std::size_t n : {1u, 2u, 3u, 6u, 10u}) {
    const auto g = homogeneous(n, 0.8, 1.9);
    const auto sol = homogeneous_pne(g);
    const auto brd = run_brd(g, half_capacity_profile(g));
    for (Eigen::Index i = 0; i < g.dim(); ++i) {
      CHECK(std::abs(brd.profile[i] - sol.lambda) <= 1e-7);
    }
    if (n == 1) {
      // mu_T^S = 0.8 is too small for any positive incentive.
      CHECK(sol.lambda == 0.0);
      continue;
    }
    CHECK(incentive_dx(g, sol.x).df_dx > 0);
    CHECK(incentive_at(g, sol.x, 0) > 0);

    // Team-level first-order point coincides with the welfare optimum.
    const auto opt = homogeneous_symmetric_optimum(g);
    const auto sw = optimize_welfare(g);
    CHECK(std::abs(slackness(g, sw.profile) - opt.x) < 1e-6);
    CHECK(opt.x > sol.x);
  }
}

TEST_CASE("homogeneous solvers reject mixed h") {
  CHECK_THROWS_AS(homogeneous_pne(team({{1, 2}, {1, 3}})), HomogeneityError);
  CHECK_THROWS_AS(homogeneous_symmetric_optimum(team({{1, 2}, {2, 2}})), HomogeneityError);
}

}  // TEST_SUITE
