#pragma once

#include <vector>

#include "moedge/common.hpp"

namespace moedge {

/// Per-cell resource model: K resource types with linear minimum-resource
/// functions f^k(d) = phi^k * d + varphi^k against fixed capacity r^k and
/// per-MU contribution g^k, plus the staircase-utility constants.
struct ResourceModel {
  std::vector<double> r;       // fixed cell resources r^k
  std::vector<double> phi;     // demand coefficients phi^k >= 0
  std::vector<double> varphi;  // constant parts varphi^k >= 0
  std::vector<double> g;       // per-MU resources g^k >= 0
  std::vector<double> u;       // utility constants u^k >= 0
  double u_base = -100.0;      // utility floor, < 0

  int K() const { return static_cast<int>(r.size()); }
  void validate() const;
};

/// First/second moments defining the ambiguity set for one (cell, tau).
struct AmbiguityMoments {
  double mean = 0.0;
  double stddev = 0.0;  // >= 0
};

/// Optimizing variables of the moment-dual program, kept for audit: the
/// result value is exactly the objective attained by this feasible point.
struct WcCvarCertificate {
  double nu = 0.0;
  double m11 = 0.0, m12 = 0.0, m22 = 0.0;  // M symmetric 2x2
  std::vector<double> xi_k;                // one per resource type with phi^k > 0
};

struct WcCvarResult {
  double zeta_star = 0.0;
  WcCvarCertificate certificate;
};

/// Demand-independent offset of the excess demand: c_max = max over
/// {k : phi^k > 0} of (varphi^k - r^k - g^k z) / phi^k, so that
/// zeta(d) = d + c_max.  Returns +inf if some phi^k = 0 type is infeasible
/// regardless of demand, -inf if no phi^k > 0 type exists and all others are
/// feasible.
double demand_offset(const ResourceModel& rm, int z);

/// Realized excess demand zeta (Eq. 12); +/-inf sentinels as demand_offset.
double excess_demand(const ResourceModel& rm, double d, int z);

/// Worst-case CVaR of the excess demand over all distributions with the given
/// moments, via the dual semidefinite program reduced to a nested 1-D
/// minimization.
WcCvarResult wc_cvar_sdp(const ResourceModel& rm, const AmbiguityMoments& m,
                         int z, double epsilon);

/// Independent oracle: mean + stddev * sqrt((1-eps)/eps) + c_max.
double wc_cvar_closed_form(const ResourceModel& rm, const AmbiguityMoments& m,
                           int z, double epsilon);

/// Staircase utility of one realized demand at MU count z: the sum of u^k
/// over satisfied resource types, or u_base if any type is short.
double utility(const ResourceModel& rm, double d, int z);

/// Sample-average utility over Monte Carlo demand samples.
double expected_utility(const ResourceModel& rm,
                        const std::vector<double>& samples, int z);

/// Provisioning penalty P * max{zeta_star, 0}.  -inf => 0; +inf =>
/// configuration error.
double expected_penalty(double zeta_star, double penalty_constant);

}  // namespace moedge
