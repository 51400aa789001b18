#pragma once
#include <Eigen/Dense>
#include <vector>

#include "pacer/error.hpp"

namespace pacer::fit {

// One treatment cell: stationary breaking probability p and the measured (or
// predicted) long-term interaction rate f.
struct TreatmentPoint {
  double p = 0, f = 0;  // p in [0,1), f >= 0
};

// Stationary rate as a curve in u = 1/(1-p):  f(p) = c1*u - c2*u^2 with
// c1 = gamma/delta and c2 = (alpha/beta)*(gamma/delta). clipped marks fits
// whose coefficients had to be forced onto the boundary c >= 0.
struct EquilibriumCurve {
  double c1 = 0, c2 = 0;
  bool clipped = false;
  double eval(double p) const {
    const double u = 1.0 / (1.0 - p);
    return c1 * u - c2 * u * u;
  }
};

// degenerate marks a curve carrying no usable signal (c1 ~ 0); capped marks
// a recommendation truncated at p_max.
struct PolicyDecision {
  double p_hat = 0;
  double ab_hat = 0;
  bool degenerate = false;
  bool capped = false;
};

struct NnlsSolution {
  Eigen::VectorXd x;
  bool rank_deficient = false;
  int iterations = 0;
  double kkt_residual = 0;
};

// Exact two-treatment inversion via Cramer's rule. Negative coefficients are
// clipped to zero and flagged.
EquilibriumCurve fit_two_point(const TreatmentPoint& a, const TreatmentPoint& b);

// Least-squares fit over any number of treatment cells (>= 2 distinct p)
// under c1, c2 >= 0.
EquilibriumCurve fit_nnls(const std::vector<TreatmentPoint>& pts);

// Optimal stationary policy implied by a fitted curve: p = 1 - 2*ab_hat when
// ab_hat < 1/2, else 0, truncated at p_max.
PolicyDecision derive_policy(const EquilibriumCurve& curve, double p_max);

// Lawson-Hanson active-set solver for min ||A x - b|| s.t. x >= 0.
NnlsSolution nnls_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace pacer::fit
