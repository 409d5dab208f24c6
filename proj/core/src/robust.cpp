#include "moedge/robust.hpp"

#include <algorithm>
#include <cmath>

namespace moedge {
namespace {

constexpr double kInvGolden = 0.6180339887498949;  // (sqrt(5)-1)/2

// Golden-section minimizer of a unimodal f over [lo, hi].
template <class F>
double golden_min(F&& f, double lo, double hi, double tol) {
  double x1 = hi - kInvGolden * (hi - lo);
  double x2 = lo + kInvGolden * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > tol) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - kInvGolden * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvGolden * (hi - lo);
      f2 = f(x2);
    }
  }
  return 0.5 * (lo + hi);
}

void validate_inputs(const ResourceModel& rm, double sigma, int z, double eps) {
  rm.validate();
  if (z < 0) throw ValidationError("MU count z must be >= 0");
  if (!(sigma >= 0.0)) throw ValidationError("sigma must be >= 0");
  if (!(eps > 0.0 && eps < 1.0)) throw ValidationError("epsilon must be in (0,1)");
}

// Dual objective after eliminating nu = -(1/eps)<Omega,M> and pinning
// M22 = M12^2/M11 on the PSD boundary:
//   xi(p,q) = c_max + (1/eps)[(mu^2+s^2)p + 2 mu q + q^2/p] + (1/4 - q)/p,
// reparameterized with w = q + mu p, which removes all large cancelling
// terms:
//   xi(p,w) = c_max + mu + (1/eps)(w^2/p + s^2 p) + (1/4 - w)/p.
// The function is jointly convex (quadratic-over-linear terms); the inner
// minimizer over w always lies in (0, 1/2).
double reduced_objective(double p, double w, double mu, double sigma,
                         double eps, double c_max) {
  return c_max + mu + (w * w / p + sigma * sigma * p) / eps + (0.25 - w) / p;
}

double inner_min(double p, double mu, double sigma, double eps, double c_max,
                 double* w_opt = nullptr) {
  auto f = [&](double w) { return reduced_objective(p, w, mu, sigma, eps, c_max); };
  const double w = golden_min(f, -1.0, 2.0, 1e-12);
  if (w_opt) *w_opt = w;
  return f(w);
}

// <Omega, M> evaluated in one fixed expression; wc_cvar_sdp derives nu from
// this same function so the certificate's nu-constraint holds exactly.
double omega_dot_m(double mu, double sigma, double m11, double m12, double m22) {
  return (mu * mu + sigma * sigma) * m11 + 2.0 * mu * m12 + m22;
}

// Assembles the feasible point (nu, M, xi^k) at the solver's (p, w): M sits
// on the PSD boundary and the nu-constraint is tight.  xi^k is written as
// c_k - c_max + zeta_star, the algebraic value of c_k - nu - gamma at the
// boundary: this keeps the binding multiplier bitwise-consistent with the
// reported objective even when the M entries are large enough that deriving
// xi^k from them would lose ~|mu|^2 m11 / eps of absolute precision to
// cancellation.
WcCvarResult make_result(double zeta_star, double p, double w,
                         const ResourceModel& rm, const AmbiguityMoments& m,
                         int z, double eps, double c_max) {
  WcCvarResult res;
  res.zeta_star = zeta_star;
  auto& cert = res.certificate;
  cert.m11 = p;
  cert.m12 = w - m.mean * p;
  cert.m22 = cert.m12 * cert.m12 / cert.m11;
  cert.nu = -omega_dot_m(m.mean, m.stddev, cert.m11, cert.m12, cert.m22) / eps;
  for (int k = 0; k < rm.K(); ++k) {
    if (rm.phi[k] <= 0.0) continue;
    const double c_k = (rm.varphi[k] - rm.r[k] - rm.g[k] * z) / rm.phi[k];
    cert.xi_k.push_back(c_k - c_max + zeta_star);
  }
  return res;
}

}  // namespace

void ResourceModel::validate() const {
  const auto k = r.size();
  if (k == 0 || phi.size() != k || varphi.size() != k || g.size() != k ||
      u.size() != k)
    throw ValidationError("resource model vectors must share a positive length");
  for (std::size_t i = 0; i < k; ++i) {
    if (!(phi[i] >= 0.0) || !(varphi[i] >= 0.0) || !(g[i] >= 0.0) ||
        !(u[i] >= 0.0))
      throw ValidationError("phi, varphi, g, u must be elementwise >= 0");
    if (!(r[i] >= varphi[i]))
      throw ValidationError("fixed resources must cover the constant demand part"
                            " (r^k >= varphi^k)");
  }
  if (!(u_base < 0.0)) throw ValidationError("U_base must be negative");
}

double demand_offset(const ResourceModel& rm, int z) {
  rm.validate();
  if (z < 0) throw ValidationError("MU count z must be >= 0");
  double c_max = kNeverViolated;
  bool any_slope = false;
  for (int k = 0; k < rm.K(); ++k) {
    const double headroom = rm.r[k] + rm.g[k] * z - rm.varphi[k];
    if (rm.phi[k] > 0.0) {
      any_slope = true;
      c_max = std::max(c_max, -headroom / rm.phi[k]);
    } else if (headroom < 0.0) {
      return kAlwaysViolated;  // constant requirement exceeds resources
    }
  }
  return any_slope ? c_max : kNeverViolated;
}

double excess_demand(const ResourceModel& rm, double d, int z) {
  if (!(d >= 0.0)) throw ValidationError("demand must be >= 0");
  const double c_max = demand_offset(rm, z);
  return std::isfinite(c_max) ? d + c_max : c_max;
}

WcCvarResult wc_cvar_sdp(const ResourceModel& rm, const AmbiguityMoments& m,
                         int z, double epsilon) {
  validate_inputs(rm, m.stddev, z, epsilon);
  const double c_max = demand_offset(rm, z);
  if (!std::isfinite(c_max)) {
    WcCvarResult res;
    res.zeta_star = c_max;
    return res;
  }

  // The PSD checks on the stored certificate lose meaning once M's entries
  // grow past ~1e6 (determinant rounding), so p is capped; the objective is
  // within (1-eps)/(4 p) of the infimum at the cap, far below the 1e-6
  // solver tolerance for every sigma above the degenerate floor.
  constexpr double kMaxP = 1e6;
  constexpr double kDegenerateSigma = 7e-8;

  double p_opt, w_opt;
  if (m.stddev < kDegenerateSigma) {
    // Point mass (or numerically indistinguishable from it): the infimum
    // mu + c_max is approached as p grows; evaluating at a fixed large p
    // leaves (1-eps)/(4p) + sigma^2 p / eps of slack.  The certificate's
    // nu carries rounding noise of order ulp(mu^2 p) / eps, so p shrinks
    // with mu^2 to keep the audit LMIs within tolerance, floored where the
    // value slack would exceed ~5e-6.
    p_opt = std::clamp(1e7 / std::max(1.0, m.mean * m.mean), 5e4, 5e5);
  } else {
    auto g = [&](double s) {
      return inner_min(std::exp(s), m.mean, m.stddev, epsilon, c_max);
    };
    // Bracket the outer minimum geometrically in s = log p.
    double lo = -1.0, mid = 0.0, hi = 1.0;
    const double s_cap = std::log(kMaxP);
    double flo = g(lo), fmid = g(mid), fhi = g(hi);
    for (int i = 0; i < 200 && (flo < fmid || fhi < fmid); ++i) {
      if (flo < fmid) {
        hi = mid;
        fhi = fmid;
        mid = lo;
        fmid = flo;
        lo = mid - (hi - mid) * 2.0;
        flo = g(lo);
      } else {
        lo = mid;
        flo = fmid;
        mid = hi;
        fmid = fhi;
        hi = std::min(s_cap, mid + (mid - lo) * 2.0);
        if (hi <= mid) {
          hi = s_cap;
          mid = 0.5 * (lo + hi);
          fmid = g(mid);
        }
        fhi = g(hi);
        if (hi >= s_cap && !(fhi >= fmid)) break;  // minimum at the cap
      }
    }
    p_opt = std::exp(golden_min(g, lo, hi, 1e-10));
  }
  const double zeta = inner_min(p_opt, m.mean, m.stddev, epsilon, c_max, &w_opt);
  return make_result(zeta, p_opt, w_opt, rm, m, z, epsilon, c_max);
}

double wc_cvar_closed_form(const ResourceModel& rm, const AmbiguityMoments& m,
                           int z, double epsilon) {
  validate_inputs(rm, m.stddev, z, epsilon);
  const double c_max = demand_offset(rm, z);
  if (!std::isfinite(c_max)) return c_max;
  return m.mean + m.stddev * std::sqrt((1.0 - epsilon) / epsilon) + c_max;
}

double utility(const ResourceModel& rm, double d, int z) {
  if (!(d >= 0.0)) throw ValidationError("demand must be >= 0");
  if (z < 0) throw ValidationError("MU count z must be >= 0");
  double worst_ratio = 0.0;
  for (int k = 0; k < rm.K(); ++k) {
    const double residual = rm.r[k] + rm.g[k] * z - (rm.phi[k] * d + rm.varphi[k]);
    if (residual <= 0.0) return rm.u_base;
    worst_ratio = std::max(worst_ratio, rm.u[k] / residual);
  }
  return -std::min(worst_ratio, -rm.u_base);
}

double expected_utility(const ResourceModel& rm,
                        const std::vector<double>& samples, int z) {
  rm.validate();
  if (z < 0) throw ValidationError("MU count z must be >= 0");
  if (samples.empty()) throw ValidationError("expected_utility needs samples");
  double total = 0.0;
  for (double d : samples) total += utility(rm, d, z);
  return total / static_cast<double>(samples.size());
}

double expected_penalty(double zeta_star, double penalty_constant) {
  if (!(penalty_constant >= 0.0))
    throw ValidationError("penalty constant must be >= 0");
  if (std::isnan(zeta_star)) throw ValidationError("zeta_star is NaN");
  if (zeta_star == kAlwaysViolated)
    throw ConfigError("cell is structurally infeasible: some resource type "
                      "with phi^k = 0 exceeds capacity at every demand");
  return penalty_constant * std::max(zeta_star, 0.0);
}

}  // namespace moedge
