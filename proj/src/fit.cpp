#include "pacer/fit.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pacer::fit {

namespace {

void check_point(const TreatmentPoint& pt) {
  require(pt.p >= 0 && pt.p < 1, "domain",
          "treatment probability must lie in [0,1)");
  require(std::isfinite(pt.f) && pt.f >= 0, "domain",
          "measured rate must be finite and nonnegative");
}

}  // namespace

EquilibriumCurve fit_two_point(const TreatmentPoint& a,
                               const TreatmentPoint& b) {
  check_point(a);
  check_point(b);
  const double den = a.p - b.p;
  require(den != 0, "domain", "two-point fit needs distinct probabilities");
  const double wa = 1.0 - a.p, wb = 1.0 - b.p;
  EquilibriumCurve c;
  c.c1 = (wb * wb * b.f - wa * wa * a.f) / den;
  c.c2 = wa * wb * (wb * b.f - wa * a.f) / den;
  if (c.c1 < 0) {
    c.c1 = 0;
    c.clipped = true;
  }
  if (c.c2 < 0) {
    c.c2 = 0;
    c.clipped = true;
  }
  return c;
}

EquilibriumCurve fit_nnls(const std::vector<TreatmentPoint>& pts) {
  std::set<double> distinct;
  for (const auto& pt : pts) {
    check_point(pt);
    distinct.insert(pt.p);
  }
  require(distinct.size() >= 2, "domain",
          "curve fit needs at least two distinct treatment probabilities");

  const int n = static_cast<int>(pts.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    const double u = 1.0 / (1.0 - pts[i].p);
    A(i, 0) = u;
    A(i, 1) = -u * u;
    b(i) = pts[i].f;
  }
  const NnlsSolution sol = nnls_solve(A, b);
  EquilibriumCurve c;
  c.c1 = sol.x(0);
  c.c2 = sol.x(1);
  c.clipped = sol.rank_deficient || c.c1 <= 0 || c.c2 <= 0;
  return c;
}

PolicyDecision derive_policy(const EquilibriumCurve& curve, double p_max) {
  require(p_max >= 0 && p_max < 1, "domain", "p_max must lie in [0,1)");
  require(curve.c1 >= 0 && curve.c2 >= 0, "domain",
          "curve coefficients must be nonnegative");
  PolicyDecision d;
  if (curve.c1 <= 1e-12) {  // no signal; recommending breaks would be noise
    d.degenerate = true;
    return d;
  }
  d.ab_hat = curve.c2 / curve.c1;
  if (d.ab_hat >= 0.5) return d;
  d.p_hat = 1.0 - 2.0 * d.ab_hat;
  if (d.p_hat > p_max) {
    d.p_hat = p_max;
    d.capped = true;
  }
  return d;
}

NnlsSolution nnls_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int m = static_cast<int>(A.rows());
  const int k = static_cast<int>(A.cols());
  require(m > 0 && k > 0, "domain", "empty system");
  require(b.size() == m, "domain", "A and b dimensions disagree");

  NnlsSolution sol;
  sol.x = Eigen::VectorXd::Zero(k);
  std::vector<bool> passive(k, false);
  Eigen::VectorXd w = A.transpose() * b;  // gradient at x = 0

  const double wtol = 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff());
  const int max_iter = 3 * k + 30;

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<int> idx;
    for (int j = 0; j < k; ++j)
      if (passive[j]) idx.push_back(j);
    Eigen::MatrixXd Ap(m, static_cast<int>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) Ap.col(c) = A.col(idx[c]);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Ap);
    if (qr.rank() < static_cast<int>(idx.size())) {
      sol.rank_deficient = true;
      // minimum-norm least squares keeps the solver total
      Eigen::VectorXd zp =
          Ap.completeOrthogonalDecomposition().solve(b);
      z.setZero(k);
      for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(c);
      return;
    }
    Eigen::VectorXd zp = qr.solve(b);
    z.setZero(k);
    for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(c);
  };

  for (int outer = 0; outer < max_iter; ++outer) {
    int best = -1;
    double best_w = wtol;
    for (int j = 0; j < k; ++j) {
      if (!passive[j] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;  // KKT satisfied
    passive[best] = true;

    Eigen::VectorXd z;
    for (int inner = 0; inner < max_iter; ++inner) {
      solve_passive(z);
      bool feasible = true;
      for (int j = 0; j < k; ++j)
        if (passive[j] && z(j) <= 0) feasible = false;
      if (feasible) {
        sol.x = z;
        break;
      }
      double step = 1.0;
      for (int j = 0; j < k; ++j) {
        if (passive[j] && z(j) <= 0) {
          const double denom = sol.x(j) - z(j);
          if (denom > 0) step = std::min(step, sol.x(j) / denom);
        }
      }
      sol.x += step * (z - sol.x);
      for (int j = 0; j < k; ++j) {
        if (passive[j] && sol.x(j) <= wtol) {
          sol.x(j) = 0;
          passive[j] = false;
        }
      }
    }
    w = A.transpose() * (b - A * sol.x);
    ++sol.iterations;
  }

  // Normalized stationarity + complementarity residual.
  Eigen::VectorXd wf = A.transpose() * (b - A * sol.x);
  double res = 0;
  for (int j = 0; j < k; ++j) {
    if (sol.x(j) > 0)
      res = std::max(res, std::fabs(wf(j)));
    else
      res = std::max(res, std::max(0.0, wf(j)));
  }
  sol.kkt_residual =
      res / (1.0 + (A.transpose() * b).cwiseAbs().maxCoeff());
  return sol;
}

}  // namespace pacer::fit
