#include "pacer/lv.hpp"

#include <cmath>
#include <string>

namespace pacer::lv {

void Params::validate() const {
  require(alpha > 0 && beta > 0 && gamma > 0 && delta > 0, "domain",
          "dynamics parameters must all be positive");
}

Equilibrium equilibrium(const Params& P, double p) {
  P.validate();
  require(p >= 0 && p <= 1, "domain", "breaking probability outside [0,1]");
  const double ab = P.alpha / P.beta;
  Equilibrium eq;
  if (p < 1.0 && ab / (1.0 - p) < 1.0) {
    const double u = 1.0 / (1.0 - p);
    eq.lam = (P.gamma / P.delta) * u * (1.0 - ab * u);
    eq.q = ab * u;
    eq.nonzero_branch = eq.lam > 0;
    if (!eq.nonzero_branch) {  // boundary p = 1 - alpha/beta
      eq.lam = 0;
      eq.q = 1;
    }
  }
  return eq;
}

double equilibrium_upper_bound(const Params& P) {
  P.validate();
  return P.beta * P.gamma / (4.0 * P.alpha * P.delta);
}

OptimalPolicy optimal_policy(const Params& P) {
  P.validate();
  const double ab = P.alpha / P.beta;
  OptimalPolicy out;
  if (ab >= 1.0) return out;  // user churns under any policy
  if (ab <= 0.5) {
    out.p_opt = 1.0 - 2.0 * ab;
    out.lam_opt = equilibrium_upper_bound(P);
  } else {
    out.p_opt = 0;
    out.lam_opt = (P.gamma / P.delta) * (1.0 - ab);
  }
  return out;
}

namespace {

struct Deriv {
  double dlam, dq;
};

inline Deriv rhs(const Params& P, double keep, const State& s) {
  return {(-P.alpha + P.beta * s.q * keep) * s.lam,
          (P.gamma * (1.0 - s.q) - P.delta * s.lam * keep) * s.q};
}

// Clamp a coordinate to [lo, hi]; excursions past tol mean the step size is
// too large for these dynamics.
inline double clamp_coord(double v, double lo, double hi, double tol,
                          const char* name) {
  if (v < lo - tol || v > hi + tol)
    fail("numeric", std::string(name) +
                        " left its range by more than 1e-6; decrease dt");
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

Trajectory integrate(const Params& P, double p, State init, double dt,
                     double horizon) {
  P.validate();
  require(p >= 0 && p <= 1, "domain", "breaking probability outside [0,1]");
  require(dt > 0, "domain", "dt must be positive");
  require(horizon >= 0, "domain", "horizon must be nonnegative");
  require(init.lam >= 0 && init.q >= 0 && init.q <= 1, "domain",
          "initial state outside lam >= 0, q in [0,1]");

  const double keep = 1.0 - p;
  const double tol = 1e-6;
  Trajectory tr;
  const std::size_t n = static_cast<std::size_t>(std::ceil(horizon / dt));
  tr.t.reserve(n + 1);
  tr.x.reserve(n + 1);
  tr.t.push_back(0);
  tr.x.push_back(init);

  State s = init;
  double t = 0;
  while (t < horizon) {
    const double h = std::min(dt, horizon - t);
    const Deriv k1 = rhs(P, keep, s);
    const Deriv k2 = rhs(P, keep, {s.lam + 0.5 * h * k1.dlam, s.q + 0.5 * h * k1.dq});
    const Deriv k3 = rhs(P, keep, {s.lam + 0.5 * h * k2.dlam, s.q + 0.5 * h * k2.dq});
    const Deriv k4 = rhs(P, keep, {s.lam + h * k3.dlam, s.q + h * k3.dq});
    s.lam += h / 6.0 * (k1.dlam + 2 * k2.dlam + 2 * k3.dlam + k4.dlam);
    s.q += h / 6.0 * (k1.dq + 2 * k2.dq + 2 * k3.dq + k4.dq);
    if (!std::isfinite(s.lam) || !std::isfinite(s.q))
      fail("numeric", "integration diverged (nonfinite state)");
    s.q = clamp_coord(s.q, 0.0, 1.0, tol, "interest q");
    if (s.lam < 0) {
      if (s.lam < -tol) fail("numeric", "rate lam went negative; decrease dt");
      s.lam = 0;
    }
    t += h;
    tr.t.push_back(t);
    tr.x.push_back(s);
  }
  return tr;
}

double alpha_beta_error_bound(const Params& P, double p0, double p1,
                              double eps) {
  P.validate();
  require(eps >= 0, "domain", "eps must be nonnegative");
  const double dp = std::fabs(p1 - p0);
  require(dp > 0, "domain", "treatment probabilities must be distinct");
  require(eps <= (P.gamma / P.delta) * dp / 4.0, "domain",
          "eps exceeds the validity threshold (gamma/delta)*|p1-p0|/4");
  return (eps / dp) * (P.beta * P.delta) / (P.alpha * P.gamma);
}

double estimation_price_bound(const Params& P, double ab_hat) {
  P.validate();
  const double ab = P.alpha / P.beta;
  const double dev = std::fabs(ab_hat - ab);
  require(dev <= std::min(ab / 2.0, 1.0), "domain",
          "|ab_hat - alpha/beta| exceeds min(alpha/(2*beta), 1)");
  // dev/(2*ab^2) is the convexity bound around the true ratio; dev/(4*ab^2)
  // fails to cover the loss near the extinction edge of the validity window.
  const double c = P.gamma / P.delta;
  return c * std::min(dev / (2.0 * ab * ab), 1.0 / (4.0 * ab));
}

double regret_bound(const BoundInputs& in, double p0, double p1,
                    double eps_pred, double eps_dev, double eps_lv) {
  require(in.nu >= 1 && in.mu >= 1, "domain",
          "regularity constants nu, mu must be >= 1");
  require(eps_pred >= 0 && eps_dev >= 0 && eps_lv >= 0, "domain",
          "error terms must be nonnegative");
  const double dp = std::fabs(p1 - p0);
  require(dp > 0, "domain", "treatment probabilities must be distinct");
  const double eta =
      in.nu * in.nu * in.nu / 2.0 + (in.nu + in.nu * in.nu / 4.0) * in.mu +
      2.0 * in.nu;
  return eta / dp * (eps_pred + eps_dev + eps_lv);
}

}  // namespace pacer::lv
