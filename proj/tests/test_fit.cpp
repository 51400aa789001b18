#include <cmath>
#include <vector>

#include "doctest.h"
#include "pacer/fit.hpp"
#include "pacer/lv.hpp"
#include "pacer/rng.hpp"

using namespace pacer;
using fit::TreatmentPoint;

// Two exact stationary rates determine the curve f(p) = c1*u - c2*u^2 with
// u = 1/(1-p), c1 = gamma/delta, c2 = (alpha/beta)*(gamma/delta).

TEST_CASE("two-point fit inverts exact stationary rates") {
  // (1,4,1,1): f(0) = 0.75, f(0.2) = 0.859375
  const fit::EquilibriumCurve c =
      fit::fit_two_point({0, 0.75}, {0.2, 0.859375});
  CHECK(c.c1 == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c.c2 == doctest::Approx(0.25).epsilon(1e-15));
  CHECK_FALSE(c.clipped);
  CHECK(c.eval(0) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(c.eval(0.5) == doctest::Approx(1.0).epsilon(1e-15));

  const fit::PolicyDecision d = fit::derive_policy(c, 0.95);
  CHECK(d.ab_hat == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d.p_hat == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_FALSE(d.degenerate);
  CHECK_FALSE(d.capped);
}

TEST_CASE("two-point fit recovers random systems to relative 1e-9") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    lv::Params P;
    const double ab = rng.uniform(0.1, 0.9);
    P.alpha = rng.uniform(0.5, 2.0);
    P.beta = P.alpha / ab;
    P.gamma = rng.uniform(0.1, 1.0);
    P.delta = rng.uniform(0.05, 1.0);
    const double gd = P.gamma / P.delta;
    // both probes inside the nonzero branch (p < 1 - ab)
    const double p0 = rng.uniform(0, (1 - ab) * 0.5);
    double p1 = rng.uniform(0, (1 - ab) * 0.9);
    if (std::fabs(p1 - p0) < 1e-3) p1 = p0 + 0.05 * (1 - ab);
    const TreatmentPoint a{p0, lv::equilibrium(P, p0).lam};
    const TreatmentPoint b{p1, lv::equilibrium(P, p1).lam};
    const fit::EquilibriumCurve c = fit::fit_two_point(a, b);
    CHECK(c.c1 == doctest::Approx(gd).epsilon(1e-9));
    CHECK(c.c2 == doctest::Approx(ab * gd).epsilon(1e-9));
    CHECK(c.c2 / c.c1 == doctest::Approx(ab).epsilon(1e-9));
  }
}

TEST_CASE("least-squares fit on exact points matches the two-point fit") {
  Rng rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    lv::Params P;
    const double ab = rng.uniform(0.1, 0.8);
    P.alpha = 1.0;
    P.beta = 1.0 / ab;
    P.gamma = rng.uniform(0.2, 1.0);
    P.delta = rng.uniform(0.1, 1.0);
    std::vector<TreatmentPoint> pts;
    for (double frac : {0.1, 0.4, 0.7}) {
      const double p = frac * (1 - ab);
      pts.push_back({p, lv::equilibrium(P, p).lam});
    }
    const fit::EquilibriumCurve nn = fit::fit_nnls(pts);
    const fit::EquilibriumCurve tp = fit::fit_two_point(pts[0], pts[2]);
    CHECK(nn.c1 == doctest::Approx(tp.c1).epsilon(1e-9));
    CHECK(nn.c2 == doctest::Approx(tp.c2).epsilon(1e-9));
    CHECK_FALSE(nn.clipped);
  }
}

TEST_CASE("negative coefficients clip to the boundary and flag") {
  // rates rising too fast in p: Cramer gives c2 = -0.1, clipped to 0
  const fit::EquilibriumCurve c = fit::fit_two_point({0, 0.5}, {0.5, 1.2});
  CHECK(c.c1 == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(c.c2 == 0);
  CHECK(c.clipped);
  // ab_hat = 0 says breaks are free; recommendation saturates at the cap
  const fit::PolicyDecision d = fit::derive_policy(c, 0.95);
  CHECK(d.ab_hat == 0);
  CHECK(d.p_hat == doctest::Approx(0.95));
  CHECK(d.capped);
  CHECK_FALSE(d.degenerate);
}

TEST_CASE("flat or empty curves are degenerate, never a break recommendation") {
  const fit::EquilibriumCurve z = fit::fit_two_point({0, 0}, {0.2, 0});
  CHECK(z.c1 == 0);
  CHECK(z.c2 == 0);
  const fit::PolicyDecision d = fit::derive_policy(z, 0.95);
  CHECK(d.degenerate);
  CHECK(d.p_hat == 0);

  fit::EquilibriumCurve tiny;
  tiny.c1 = 1e-13;
  tiny.c2 = 0;
  CHECK(fit::derive_policy(tiny, 0.95).degenerate);
}

TEST_CASE("policy switches off breaks at the ratio threshold 1/2") {
  fit::EquilibriumCurve c;
  c.c1 = 1.0;
  c.c2 = 0.5;
  const fit::PolicyDecision at = fit::derive_policy(c, 0.95);
  CHECK(at.p_hat == 0);
  CHECK_FALSE(at.degenerate);
  CHECK_FALSE(at.capped);

  c.c2 = 0.5 - 1e-9;
  const fit::PolicyDecision below = fit::derive_policy(c, 0.95);
  CHECK(below.p_hat == doctest::Approx(2e-9).epsilon(1e-6));

  c.c2 = 0.7;
  CHECK(fit::derive_policy(c, 0.95).p_hat == 0);
}

TEST_CASE("nonnegative least squares solves a hand-checked system") {
  // unconstrained optimum is (1,-1); active set drops x2, leaving x1 = 1/2
  Eigen::MatrixXd A(3, 2);
  A << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd b(3);
  b << 1, -1, 0;
  const fit::NnlsSolution s = fit::nnls_solve(A, b);
  CHECK(s.x(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.x(1) == 0);
  CHECK_FALSE(s.rank_deficient);
  CHECK(s.kkt_residual < 1e-10);

  // fully interior problem reduces to plain least squares
  Eigen::VectorXd b2(3);
  b2 << 1, 1, 0;
  const fit::NnlsSolution s2 = fit::nnls_solve(A, b2);
  Eigen::VectorXd ls = (A.transpose() * A)
                           .ldlt()
                           .solve(A.transpose() * b2);
  CHECK(s2.x(0) == doctest::Approx(ls(0)).epsilon(1e-12));
  CHECK(s2.x(1) == doctest::Approx(ls(1)).epsilon(1e-12));
}

TEST_CASE("curve fit scales linearly with the measured rates") {
  std::vector<TreatmentPoint> pts{{0, 0.75}, {0.1, 0.81}, {0.2, 0.859375}};
  const fit::EquilibriumCurve base = fit::fit_nnls(pts);
  for (auto& pt : pts) pt.f *= 7.5;
  const fit::EquilibriumCurve scaled = fit::fit_nnls(pts);
  CHECK(scaled.c1 == doctest::Approx(7.5 * base.c1).epsilon(1e-12));
  CHECK(scaled.c2 == doctest::Approx(7.5 * base.c2).epsilon(1e-12));
}

TEST_CASE("fit input validation") {
  CHECK_THROWS_AS(fit::fit_two_point({0.2, 1}, {0.2, 2}), Error);
  CHECK_THROWS_AS(fit::fit_two_point({-0.1, 1}, {0.2, 2}), Error);
  CHECK_THROWS_AS(fit::fit_two_point({1.0, 1}, {0.2, 2}), Error);
  CHECK_THROWS_AS(fit::fit_two_point({0, -1}, {0.2, 2}), Error);
  CHECK_THROWS_AS(fit::fit_two_point({0, std::nan("")}, {0.2, 2}), Error);
  CHECK_THROWS_AS(fit::fit_nnls({{0.3, 1}, {0.3, 1.1}}), Error);
  CHECK_THROWS_AS(fit::fit_nnls({}), Error);

  fit::EquilibriumCurve c;
  c.c1 = 1;
  c.c2 = 0.25;
  CHECK_THROWS_AS(fit::derive_policy(c, 1.0), Error);
  CHECK_THROWS_AS(fit::derive_policy(c, -0.1), Error);
  c.c2 = -0.1;
  CHECK_THROWS_AS(fit::derive_policy(c, 0.95), Error);

  Eigen::MatrixXd A(2, 2);
  A.setIdentity();
  Eigen::VectorXd b(3);
  b.setZero();
  CHECK_THROWS_AS(fit::nnls_solve(A, b), Error);
}

TEST_CASE("noisy fits stay inside the ratio error bound") {
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    lv::Params P;
    const double ab = rng.uniform(0.1, 0.45);
    P.alpha = 1.0;
    P.beta = 1.0 / ab;
    P.gamma = rng.uniform(0.2, 2.0);
    P.delta = rng.uniform(0.1, 1.0);
    const double p0 = 0;
    const double p1 = rng.uniform(0.15, std::min(0.5, (1 - ab) * 0.8));
    const double eps_max =
        (P.gamma / P.delta) * std::fabs(p1 - p0) / 4.0;
    const double eps = rng.uniform(0, eps_max);

    const double fa = lv::equilibrium(P, p0).lam + rng.uniform(-eps, eps);
    const double fb = lv::equilibrium(P, p1).lam + rng.uniform(-eps, eps);
    const fit::EquilibriumCurve c =
        fit::fit_two_point({p0, std::max(0.0, fa)}, {p1, std::max(0.0, fb)});
    REQUIRE(c.c1 > 0);
    const double ab_hat = c.c2 / c.c1;
    const double bound = lv::alpha_beta_error_bound(P, p0, p1, eps);
    CHECK(std::fabs(ab_hat - ab) <= bound + 1e-12);
  }
}
