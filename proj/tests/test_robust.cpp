#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <doctest.h>

#include "moedge/common.hpp"
#include "moedge/robust.hpp"
#include "test_support.hpp"

using namespace moedge;
using namespace moedge::testsupport;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

WcCvarResult solve(const ResourceModel& rm, double mean, double sd, int z,
                   double eps) {
  return wc_cvar_sdp(rm, AmbiguityMoments{mean, sd}, z, eps);
}

}  // namespace

TEST_CASE("excess demand: worked example and sentinels") {
  const ResourceModel rm = reference_model();

  // Only the third type is demand-dependent: c_max(z) = -1.6 - 3.2 z.
  CHECK(excess_demand(rm, 5.0, 0) == doctest::Approx(3.4).epsilon(1e-12));
  CHECK(excess_demand(rm, 5.0, 1) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(demand_offset(rm, 0) == doctest::Approx(-1.6).epsilon(1e-12));
  CHECK(demand_offset(rm, 1) == doctest::Approx(-4.8).epsilon(1e-12));

  // Demand below the headroom leaves non-positive excess.
  CHECK(excess_demand(rm, 0.0, 0) <= 0.0);
  CHECK(excess_demand(rm, 1.5, 0) == doctest::Approx(-0.1).epsilon(1e-12));

  // No demand-dependent type and all constant types feasible: never violated.
  ResourceModel flat;
  flat.r = {2.0};
  flat.phi = {0.0};
  flat.varphi = {1.0};
  flat.g = {1.0};
  flat.u = {1.0};
  CHECK(excess_demand(flat, 100.0, 0) == kNeverViolated);
  CHECK(demand_offset(flat, 3) == kNeverViolated);

  CHECK_THROWS_AS(excess_demand(rm, -1.0, 0), ValidationError);
  CHECK_THROWS_AS(excess_demand(rm, 5.0, -1), ValidationError);
  CHECK_THROWS_AS(excess_demand(rm, std::nan(""), 0), ValidationError);
}

TEST_CASE("resource model validation") {
  ResourceModel rm = reference_model();
  rm.varphi[0] = 17.0;  // exceeds r[0] = 16: constant part can never be met
  CHECK_THROWS_AS(rm.validate(), ValidationError);

  rm = reference_model();
  rm.u_base = 0.0;
  CHECK_THROWS_AS(rm.validate(), ValidationError);

  rm = reference_model();
  rm.phi.pop_back();
  CHECK_THROWS_AS(rm.validate(), ValidationError);

  rm = ResourceModel{};
  CHECK_THROWS_AS(rm.validate(), ValidationError);

  rm = reference_model();
  rm.g[1] = -0.5;
  CHECK_THROWS_AS(rm.validate(), ValidationError);
}

TEST_CASE("worst-case CVaR: frozen values against the closed form") {
  const ResourceModel pure = pure_demand_model();

  // mu = 0, sigma = 1, eps = 0.05: sqrt(19) on top of c_max = 0.
  const double root19 = std::sqrt(19.0);
  CHECK(std::abs(solve(pure, 0.0, 1.0, 0, 0.05).zeta_star - root19) <= 1e-6);
  CHECK(wc_cvar_closed_form(pure, AmbiguityMoments{0.0, 1.0}, 0, 0.05) ==
        doctest::Approx(root19).epsilon(1e-12));

  // eps = 0.5 collapses the CVaR factor to 1: mu + sigma.
  CHECK(std::abs(solve(pure, 2.0, 3.0, 0, 0.5).zeta_star - 5.0) <= 1e-6);

  // Zero variance pins the distribution at its mean.
  const ResourceModel rm = reference_model();
  CHECK(std::abs(solve(rm, 5.0, 0.0, 0, 0.05).zeta_star - 3.4) <= 1e-6);
  CHECK(wc_cvar_closed_form(rm, AmbiguityMoments{10.0, 0.0}, 0, 0.05) ==
        doctest::Approx(8.4).epsilon(1e-12));

  // Worked example with one MU stationed: c_max = -4.8.
  const double with_mu = 5.0 + root19 - 4.8;
  CHECK(std::abs(solve(rm, 5.0, 1.0, 1, 0.05).zeta_star - with_mu) <= 1e-6);
  CHECK(wc_cvar_closed_form(rm, AmbiguityMoments{5.0, 1.0}, 1, 0.05) ==
        doctest::Approx(with_mu).epsilon(1e-12));
}

TEST_CASE("worst-case CVaR: SDP matches the closed form on random instances") {
  std::mt19937_64 rng(20240817);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const ResourceModel rm = reference_model();
  const ResourceModel pure = pure_demand_model();
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mean = 20.0 * unit(rng);
    const double sd = 5.0 * unit(rng);
    const double eps =
        (i % 3 == 0) ? 0.01 + 0.2 * unit(rng) : 0.01 + 0.98 * unit(rng);
    const int z = i % 4;
    const ResourceModel& model = (i % 2 == 0) ? rm : pure;
    const double got = solve(model, mean, sd, z, eps).zeta_star;
    const double want = wc_cvar_closed_form(model, AmbiguityMoments{mean, sd},
                                            z, eps);
    worst = std::max(worst, std::abs(got - want));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("worst-case CVaR: tiny and zero sigma stay within tolerance") {
  const ResourceModel pure = pure_demand_model();
  for (const double sd : {0.0, 1e-9, 5e-8, 1e-7, 1e-6, 1e-3}) {
    for (const double eps : {0.01, 0.05, 0.5, 0.95}) {
      const double got = solve(pure, 100.0, sd, 0, eps).zeta_star;
      const double want =
          wc_cvar_closed_form(pure, AmbiguityMoments{100.0, sd}, 0, eps);
      CHECK(std::abs(got - want) <= 1e-5);
    }
  }
}

TEST_CASE("worst-case CVaR: monotone in z, mean, sigma and epsilon") {
  const ResourceModel rm = reference_model();
  const double base = solve(rm, 5.0, 1.0, 1, 0.05).zeta_star;

  CHECK(solve(rm, 5.0, 1.0, 0, 0.05).zeta_star >= base - 1e-9);
  CHECK(solve(rm, 5.0, 1.0, 2, 0.05).zeta_star <= base + 1e-9);
  CHECK(solve(rm, 6.0, 1.0, 1, 0.05).zeta_star >= base - 1e-9);
  CHECK(solve(rm, 5.0, 1.5, 1, 0.05).zeta_star >= base - 1e-9);
  CHECK(solve(rm, 5.0, 1.0, 1, 0.10).zeta_star <= base + 1e-9);
}

TEST_CASE("worst-case CVaR: certificates satisfy the dual feasibility constraints") {
  const ResourceModel rm = reference_model();
  const ResourceModel pure = pure_demand_model();

  struct Case {
    const ResourceModel* model;
    double mean, sd, eps;
    int z;
  };
  const Case cases[] = {
      {&rm, 5.0, 1.0, 0.05, 0},   {&rm, 5.0, 1.0, 0.05, 1},
      {&rm, 0.3, 0.05, 0.01, 2},  {&pure, 0.0, 1.0, 0.05, 0},
      {&pure, 100.0, 0.0, 0.05, 0}, {&pure, 100.0, 1e-9, 0.5, 0},
      {&pure, 7.0, 4.0, 0.9, 0},  {&rm, 12.0, 0.2, 0.3, 3},
  };
  for (const Case& c : cases) {
    CAPTURE(c.mean);
    CAPTURE(c.sd);
    CAPTURE(c.eps);
    CAPTURE(c.z);
    const AmbiguityMoments m{c.mean, c.sd};
    const WcCvarResult res = wc_cvar_sdp(*c.model, m, c.z, c.eps);
    REQUIRE(std::isfinite(res.zeta_star));

    // One multiplier per demand-dependent resource type.
    std::size_t expected = 0;
    for (double phi : c.model->phi) expected += phi > 0.0 ? 1 : 0;
    REQUIRE(res.certificate.xi_k.size() == expected);

    CHECK(certificate_violation(*c.model, m, c.z, c.eps, res) <= 1e-9);

    // The reported value is attained by the certificate: it dominates every
    // per-type multiplier.  The comparison re-derives the same quantity along
    // a different floating-point path, so allow solver-level slack.
    for (double xi : res.certificate.xi_k)
      CHECK(res.zeta_star >= xi - 1e-5);
  }
}

TEST_CASE("worst-case CVaR: sentinel results carry no certificate") {
  ResourceModel flat;
  flat.r = {2.0};
  flat.phi = {0.0};
  flat.varphi = {1.0};
  flat.g = {1.0};
  flat.u = {1.0};
  const WcCvarResult res = solve(flat, 5.0, 1.0, 0, 0.05);
  CHECK(res.zeta_star == kNeverViolated);
  CHECK(res.certificate.xi_k.empty());
}

TEST_CASE("worst-case CVaR: dominates every two-point member of the set") {
  const ResourceModel rm = reference_model();
  const double mean = 5.0;
  const double sd = 1.0;
  const double eps = 0.05;
  const double star = solve(rm, mean, sd, 0, eps).zeta_star;
  const double offset = demand_offset(rm, 0);

  double best = -kInf;
  for (double q = 0.005; q < 1.0; q += 0.005) {
    const double cvar = two_point_cvar(mean, sd, q, eps) + offset;
    CHECK(star >= cvar - 1e-7);
    best = std::max(best, cvar);
  }
  // q = eps attains the bound exactly, so the supremum is tight.
  CHECK(best == doctest::Approx(star).epsilon(1e-6));
}

TEST_CASE("worst-case CVaR: input validation") {
  const ResourceModel rm = reference_model();
  const AmbiguityMoments m{5.0, 1.0};
  CHECK_THROWS_AS(wc_cvar_sdp(rm, m, 0, 0.0), ValidationError);
  CHECK_THROWS_AS(wc_cvar_sdp(rm, m, 0, 1.0), ValidationError);
  CHECK_THROWS_AS(wc_cvar_sdp(rm, m, -1, 0.05), ValidationError);
  CHECK_THROWS_AS(wc_cvar_sdp(rm, AmbiguityMoments{5.0, -1.0}, 0, 0.05),
                  ValidationError);
  CHECK_THROWS_AS(wc_cvar_closed_form(rm, m, 0, 1.5), ValidationError);
}

TEST_CASE("utility: worked example, floor and limits") {
  // Residuals rho = r - d with unit slopes: d = 0 leaves rho = (2, 4, 8).
  ResourceModel rm;
  rm.r = {2.0, 4.0, 8.0};
  rm.phi = {1.0, 1.0, 1.0};
  rm.varphi = {0.0, 0.0, 0.0};
  rm.g = {0.0, 0.0, 0.0};
  rm.u = {1.0, 1.0, 1.0};
  rm.u_base = -100.0;

  CHECK(utility(rm, 0.0, 0) == doctest::Approx(-0.5).epsilon(1e-12));
  CHECK(utility(rm, 1.0, 0) == doctest::Approx(-1.0).epsilon(1e-12));

  // A vanishing residual (or an exceeded resource) drops to the floor.
  CHECK(utility(rm, 2.0, 0) == doctest::Approx(-100.0).epsilon(1e-12));
  CHECK(utility(rm, 3.0, 0) == doctest::Approx(-100.0).epsilon(1e-12));

  // Large headroom pushes the utility toward 0 from below.
  ResourceModel roomy = rm;
  roomy.r = {2000.0, 4000.0, 8000.0};
  const double near_zero = utility(roomy, 0.0, 0);
  CHECK(near_zero < 0.0);
  CHECK(near_zero > -1e-3);

  // The floor also caps the blow-up just above a residual of zero.
  CHECK(utility(rm, 2.0 - 1e-9, 0) == doctest::Approx(-100.0).epsilon(1e-12));

  // Monotone: more demand never helps, more MUs never hurt.
  const ResourceModel ref = reference_model();
  double prev = utility(ref, 0.0, 0);
  for (double d : {0.4, 0.8, 1.2, 1.55, 1.7, 2.0}) {
    const double cur = utility(ref, d, 0);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
  CHECK(utility(ref, 1.0, 1) >= utility(ref, 1.0, 0) - 1e-12);

  CHECK_THROWS_AS(utility(ref, -0.1, 0), ValidationError);
  CHECK_THROWS_AS(utility(ref, 1.0, -2), ValidationError);
}

TEST_CASE("expected utility: sample average and monotonicity") {
  const ResourceModel rm = reference_model();
  const std::vector<double> samples = {0.0, 0.5, 1.0};
  double want = 0.0;
  for (double d : samples) want += utility(rm, d, 0);
  want /= 3.0;
  CHECK(expected_utility(rm, samples, 0) ==
        doctest::Approx(want).epsilon(1e-12));

  CHECK(expected_utility(rm, samples, 1) >=
        expected_utility(rm, samples, 0) - 1e-12);
  CHECK(expected_utility(rm, {0.2, 0.4}, 0) >=
        expected_utility(rm, {0.6, 0.9}, 0) - 1e-12);

  CHECK_THROWS_AS(expected_utility(rm, {}, 0), ValidationError);
  CHECK_THROWS_AS(expected_utility(rm, {-1.0}, 0), ValidationError);
}

TEST_CASE("expected penalty: scaling, clamping and sentinels") {
  CHECK(expected_penalty(3.4, 5e5) == doctest::Approx(1.7e6).epsilon(1e-12));
  CHECK(expected_penalty(-2.0, 5e5) == 0.0);
  CHECK(expected_penalty(0.0, 5e5) == 0.0);
  CHECK(expected_penalty(3.4, 0.0) == 0.0);
  CHECK(expected_penalty(kNeverViolated, 5e5) == 0.0);
  CHECK_THROWS_AS(expected_penalty(kAlwaysViolated, 5e5), ConfigError);
  CHECK_THROWS_AS(expected_penalty(std::nan(""), 5e5), ValidationError);
  CHECK_THROWS_AS(expected_penalty(1.0, -1.0), ValidationError);
}
