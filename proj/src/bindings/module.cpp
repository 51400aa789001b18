#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pacer/datagen.hpp"
#include "pacer/harness.hpp"
#include "pacer/predict.hpp"

namespace py = pybind11;
using namespace pacer;

namespace {

// Single-candidate user with a fixed item gain; enough for the dynamics and
// policy surface without dragging a ratings table across the boundary.
sim::UserLatent fixed_user(double alpha, double beta, double gamma,
                          double delta, double rating, double tau) {
  sim::UserLatent u;
  u.dyn = {alpha, beta, gamma, delta};
  u.items = {0};
  u.psi = {1.0};
  u.beta = {beta};
  u.rating = {rating};
  u.tau = tau;
  return u;
}

py::dict seq_to_dict(const sim::InteractionSequence& seq) {
  py::list events;
  for (const auto& e : seq.events) {
    py::dict je;
    je["t"] = e.t;
    je["items"] = e.items;
    je["indicators"] = e.indicators;
    events.append(std::move(je));
  }
  py::dict d;
  d["events"] = std::move(events);
  d["churned"] = seq.churned;
  d["horizon"] = seq.horizon;
  d["B"] = seq.B;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Individualized take-a-break policies for recommender feeds";

  py::class_<lv::Params>(m, "Params")
      .def(py::init([](double alpha, double beta, double gamma, double delta) {
             return lv::Params{alpha, beta, gamma, delta};
           }),
           py::arg("alpha"), py::arg("beta"), py::arg("gamma"), py::arg("delta"))
      .def_readwrite("alpha", &lv::Params::alpha)
      .def_readwrite("beta", &lv::Params::beta)
      .def_readwrite("gamma", &lv::Params::gamma)
      .def_readwrite("delta", &lv::Params::delta);

  m.def(
      "equilibrium",
      [](const lv::Params& P, double p) {
        const lv::Equilibrium eq = lv::equilibrium(P, p);
        return py::make_tuple(eq.lam, eq.q, eq.nonzero_branch);
      },
      py::arg("params"), py::arg("p"),
      "Stationary (rate, interest, nonzero_branch) under breaking probability p");
  m.def("equilibrium_upper_bound", &lv::equilibrium_upper_bound);
  m.def(
      "optimal_policy",
      [](const lv::Params& P) {
        const lv::OptimalPolicy o = lv::optimal_policy(P);
        return py::make_tuple(o.p_opt, o.lam_opt);
      },
      "Best stationary breaking probability and the rate it achieves");
  m.def(
      "integrate",
      [](const lv::Params& P, double p, double lam0, double q0, double dt,
         double horizon) {
        const lv::Trajectory tr = lv::integrate(P, p, {lam0, q0}, dt, horizon);
        std::vector<double> lam(tr.x.size()), q(tr.x.size());
        for (std::size_t i = 0; i < tr.x.size(); ++i) {
          lam[i] = tr.x[i].lam;
          q[i] = tr.x[i].q;
        }
        return py::make_tuple(tr.t, lam, q);
      },
      py::arg("params"), py::arg("p"), py::arg("lam0"), py::arg("q0"),
      py::arg("dt") = 1e-3, py::arg("horizon") = 100.0);
  m.def("alpha_beta_error_bound", &lv::alpha_beta_error_bound);
  m.def("estimation_price_bound", &lv::estimation_price_bound);
  m.def(
      "regret_bound",
      [](double nu, double mu, double p0, double p1, double eps_pred,
         double eps_dev, double eps_lv) {
        return lv::regret_bound({nu, mu}, p0, p1, eps_pred, eps_dev, eps_lv);
      },
      py::arg("nu"), py::arg("mu"), py::arg("p0"), py::arg("p1"),
      py::arg("eps_pred"), py::arg("eps_dev"), py::arg("eps_lv"));

  py::class_<fit::EquilibriumCurve>(m, "EquilibriumCurve")
      .def_readonly("c1", &fit::EquilibriumCurve::c1)
      .def_readonly("c2", &fit::EquilibriumCurve::c2)
      .def_readonly("clipped", &fit::EquilibriumCurve::clipped)
      .def("eval", &fit::EquilibriumCurve::eval);
  py::class_<fit::PolicyDecision>(m, "PolicyDecision")
      .def_readonly("p_hat", &fit::PolicyDecision::p_hat)
      .def_readonly("ab_hat", &fit::PolicyDecision::ab_hat)
      .def_readonly("degenerate", &fit::PolicyDecision::degenerate)
      .def_readonly("capped", &fit::PolicyDecision::capped);

  m.def(
      "fit_two_point",
      [](std::pair<double, double> a, std::pair<double, double> b) {
        return fit::fit_two_point({a.first, a.second}, {b.first, b.second});
      },
      py::arg("a"), py::arg("b"), "Exact inversion from two (p, rate) cells");
  m.def(
      "fit_nnls",
      [](const std::vector<std::pair<double, double>>& pts) {
        std::vector<fit::TreatmentPoint> tp;
        for (const auto& [p, f] : pts) tp.push_back({p, f});
        return fit::fit_nnls(tp);
      },
      py::arg("points"));
  m.def("derive_policy", &fit::derive_policy, py::arg("curve"),
        py::arg("p_max") = 0.95);
  m.def(
      "nnls_solve",
      [](const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
        const fit::NnlsSolution s = fit::nnls_solve(A, b);
        return py::make_tuple(s.x, s.rank_deficient, s.kkt_residual);
      },
      py::arg("A"), py::arg("b"),
      "Nonnegative least squares: (x, rank_deficient, kkt_residual)");

  m.def(
      "simulate",
      [](const std::string& model, double p, double alpha, double beta,
         double gamma, double delta, double rating, double tau, double T, int B,
         std::uint64_t seed) {
        sim::UserLatent u = fixed_user(alpha, beta, gamma, delta, rating, tau);
        sim::SeqConfig cfg;
        cfg.T = T;
        cfg.B = B;
        sim::StationaryPolicy pol(p);
        Rng rng(stable_seed(seed, "simulate"));
        const sim::InteractionSequence seq =
            model == "lv" ? sim::sample_lv_sequence(u, pol, cfg, rng)
                          : sim::sample_stateless_sequence(u, pol, cfg, rng);
        return seq_to_dict(seq);
      },
      py::arg("model") = "lv", py::arg("p") = 0.0, py::arg("alpha") = 1.3,
      py::arg("beta") = 3.2, py::arg("gamma") = 0.2, py::arg("delta") = 0.01,
      py::arg("rating") = 4.0, py::arg("tau") = 4.0, py::arg("T") = 100.0,
      py::arg("B") = 10, py::arg("seed") = 42,
      "One sampled interaction sequence for a fixed-gain user");
  m.def(
      "engagement_rate",
      [](const py::dict& seq, double window_start) {
        sim::InteractionSequence s;
        s.horizon = seq["horizon"].cast<double>();
        s.B = seq["B"].cast<int>();
        s.churned = seq["churned"].cast<bool>();
        for (const auto& e : seq["events"].cast<py::list>()) {
          sim::Event ev;
          ev.t = e.cast<py::dict>()["t"].cast<double>();
          s.events.push_back(std::move(ev));
        }
        return sim::engagement_rate(s, window_start);
      },
      py::arg("sequence"), py::arg("window_start"));

  m.def(
      "synthetic_ratings_file",
      [](const std::string& path, int users, int items, std::uint64_t seed) {
        rec::SyntheticConfig cfg;
        cfg.n_users = users;
        cfg.n_items = items;
        cfg.seed = seed;
        rec::write_ratings_file(rec::synthetic_ratings(cfg), path);
      },
      py::arg("path"), py::arg("users") = 800, py::arg("items") = 400,
      py::arg("seed") = 42);

  m.def(
      "run_experiment",
      [](const std::string& ratings_path, const std::string& config_json) {
        const rec::RatingsTable table = rec::load_ratings(ratings_path);
        const xp::ExperimentConfig cfg = xp::config_from_json(config_json);
        const xp::ResultsTable results = xp::run_experiment(table, cfg);
        return xp::results_to_json(results);
      },
      py::arg("ratings_path"), py::arg("config_json") = "{}",
      "Full pipeline on a ratings file; returns the results as a JSON string");
  m.def(
      "write_report",
      [](const std::string& results_json, const std::string& out_dir) {
        xp::write_report(xp::results_from_json(results_json), out_dir);
      },
      py::arg("results_json"), py::arg("out_dir"));

  py::register_exception<Error>(m, "PacerError");

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "dev";
#endif
}
