#pragma once
#include <vector>

#include "pacer/error.hpp"

namespace pacer::lv {

// Controlled user dynamics. lam is the interaction rate, q in [0,1] the
// interest level, p the stationary probability of replacing a recommendation
// with a break:
//   dlam/dt = -alpha*lam + beta*lam*q*(1-p)
//   dq/dt   =  gamma*q*(1-q) - delta*lam*q*(1-p)
struct Params {
  double alpha = 0, beta = 0, gamma = 0, delta = 0;
  void validate() const;  // all strictly positive
};

struct State {
  double lam = 0, q = 0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<State> x;
  const State& back() const { return x.back(); }
};

// Stationary point under breaking probability p. The rate is nonzero only for
// p below 1 - alpha/beta; past that (or when alpha >= beta) the user settles
// at (0, 1): no interactions, interest recovered.
struct Equilibrium {
  double lam = 0, q = 1;
  bool nonzero_branch = false;
};

struct OptimalPolicy {
  double p_opt = 0;
  double lam_opt = 0;
};

// Regularity constants for the engagement-regret bound; both >= 1.
struct BoundInputs {
  double nu = 1, mu = 1;
};

Equilibrium equilibrium(const Params& P, double p);

// Largest stationary rate any policy can reach: beta*gamma/(4*alpha*delta).
double equilibrium_upper_bound(const Params& P);

// Maximizer of the stationary rate over p. Attains the upper bound when
// alpha/beta <= 1/2; otherwise breaks cannot help and p_opt = 0.
OptimalPolicy optimal_policy(const Params& P);

// Fixed-step RK4. Records every step; q excursions beyond 1e-6 outside [0,1]
// mean the step size is too large and raise a numeric error, smaller ones are
// clamped. Nonfinite states raise integration-diverged.
Trajectory integrate(const Params& P, double p, State init, double dt,
                     double horizon);

// Worst-case error of the two-treatment alpha/beta estimator when each
// measured rate is off by at most eps. Valid only up to the threshold
// eps <= (gamma/delta)*|p1-p0|/4; beyond it a domain error is raised.
double alpha_beta_error_bound(const Params& P, double p0, double p1,
                              double eps);

// Stationary-rate cost of acting on an estimate ab_hat of alpha/beta instead
// of the truth. Valid for |ab_hat - alpha/beta| <= min(alpha/(2*beta), 1).
double estimation_price_bound(const Params& P, double ab_hat);

// End-to-end engagement-regret rate: eta/|p1-p0| * (eps_pred+eps_dev+eps_lv)
// with eta = nu^3/2 + (nu + nu^2/4)*mu + 2*nu.
double regret_bound(const BoundInputs& in, double p0, double p1,
                    double eps_pred, double eps_dev, double eps_lv);

}  // namespace pacer::lv
