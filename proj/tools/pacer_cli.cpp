// Command-line front end: train-cf, simulate, fit, experiment, sweep, report.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pacer/datagen.hpp"
#include "pacer/harness.hpp"
#include "pacer/predict.hpp"

using nlohmann::json;
using namespace pacer;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

xp::ExperimentConfig build_config(const std::string& config_path,
                                  const std::string& scale,
                                  std::optional<std::uint64_t> seed,
                                  std::optional<double> kappa,
                                  const std::string& model,
                                  const std::vector<double>& probes,
                                  std::optional<int> threads,
                                  bool oracle_predictions) {
  xp::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = xp::config_from_json(read_file(config_path));
  if (!scale.empty()) xp::apply_scale(cfg, scale);
  if (seed) cfg.master_seed = *seed;
  if (kappa) cfg.kappa = *kappa;
  if (!model.empty()) cfg.model = model;
  if (!probes.empty()) cfg.probes = probes;
  if (threads) cfg.threads = *threads;
  if (oracle_predictions) cfg.oracle_predictions = true;
  cfg.validate();
  return cfg;
}

rec::RatingsTable load_table(const std::string& data,
                             std::optional<std::uint64_t> synthetic_seed) {
  if (!data.empty()) return rec::load_ratings(data);
  rec::SyntheticConfig gen;
  if (synthetic_seed) gen.seed = *synthetic_seed;
  return rec::synthetic_ratings(gen);
}

void print_summary(const xp::ResultsTable& r) {
  std::printf("%-14s %12s %10s %10s\n", "policy", "mean_lte", "gain_pct",
              "stderr");
  for (const auto& row : r.policies)
    std::printf("%-14s %12.4f %+9.2f%% %10.4f\n", row.name.c_str(),
                row.mean_lte, row.gain_pct, row.stderr_lte);
  if (!r.cf_rmse.empty()) {
    std::printf("cf_rmse:");
    for (double v : r.cf_rmse) std::printf(" %.4f", v);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Individualized take-a-break policies for recommender feeds"};
  app.require_subcommand(1);

  std::string config_path, data_path, out_dir = "out", scale, model;
  std::optional<std::uint64_t> seed;
  std::optional<double> kappa;
  std::optional<int> threads;
  std::vector<double> probes;
  bool oracle_predictions = false;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* train_cf = app.add_subcommand(
      "train-cf", "factorize a ratings table, report held-out accuracy");
  train_cf->add_option("--data", data_path, "ratings file (user::item::r::ts)");
  train_cf->add_option("--out", out_dir, "output directory");

  auto* simulate = app.add_subcommand(
      "simulate", "sample one interaction sequence for a fixed-gain user");
  double s_alpha = 1.3, s_beta = 3.2, s_gamma = 0.2, s_delta = 0.01;
  double s_p = 0, s_T = 100, s_rating = 4, s_tau = 4;
  int s_B = 10;
  std::string s_model = "lv", s_policy = "stationary";
  double s_tau_s = 16, s_cooldown = 0.5;
  int s_k = 10;
  simulate->add_option("--model", s_model, "lv | stateless");
  simulate->add_option("--p", s_p, "stationary breaking probability");
  simulate->add_option("--alpha", s_alpha, "decay rate");
  simulate->add_option("--beta", s_beta, "item gain");
  simulate->add_option("--gamma", s_gamma, "interest recovery rate");
  simulate->add_option("--delta", s_delta, "interest consumption rate");
  simulate->add_option("--rating", s_rating, "item rating (stateless)");
  simulate->add_option("--tau", s_tau, "stateless rate scale");
  simulate->add_option("--T", s_T, "horizon");
  simulate->add_option("--B", s_B, "batch size");
  simulate->add_option("--policy", s_policy, "stationary | safety");
  simulate->add_option("--tau-s", s_tau_s, "safety rate threshold");
  simulate->add_option("--safety-k", s_k, "safety trailing-gap window");
  simulate->add_option("--cooldown", s_cooldown, "safety cooldown");
  std::optional<double> s_lam0, s_q0;
  simulate->add_option("--lam0", s_lam0, "exact initial rate (default: equilibrium with noise)");
  simulate->add_option("--q0", s_q0, "exact initial interest");
  simulate->add_option("--out", out_dir, "output directory");

  auto* fit_cmd = app.add_subcommand(
      "fit", "fit the rate curve to treatment points and derive a policy");
  std::vector<std::string> fit_points_arg;
  std::string fit_in;
  double fit_p_max = 0.95;
  bool fit_two = false;
  fit_cmd->add_option("--point", fit_points_arg,
                      "treatment point as p:rate (repeatable)");
  fit_cmd->add_option("--in", fit_in, "JSON file with {\"points\":[[p,f],...]}");
  fit_cmd->add_option("--p-max", fit_p_max, "policy cap");
  fit_cmd->add_flag("--two-point", fit_two, "exact two-point inversion");

  auto* experiment = app.add_subcommand(
      "experiment", "train, fit per-user policies, evaluate all arms");
  experiment->add_option("--data", data_path,
                         "ratings file (omit for the synthetic table)");
  experiment->add_option("--scale", scale, "desk | paper");
  experiment->add_option("--model", model, "lv | stateless");
  experiment->add_option("--kappa", kappa, "true-rating blend weight");
  experiment->add_option("--probes", probes, "treatment probabilities");
  experiment->add_flag("--oracle-predictions", oracle_predictions,
                       "bypass the regressors with exact stationary rates");
  experiment->add_option("--out", out_dir, "output directory");

  auto* sweep = app.add_subcommand(
      "sweep", "rerun the experiment across single-probe grids");
  std::vector<double> sweep_grid = {0, 0.08, 0.16, 0.24, 0.32, 0.4};
  sweep->add_option("--data", data_path, "ratings file");
  sweep->add_option("--scale", scale, "desk | paper");
  sweep->add_option("--model", model, "lv | stateless");
  sweep->add_option("--kappa", kappa, "true-rating blend weight");
  sweep->add_option("--grid", sweep_grid, "probe grid");
  sweep->add_option("--out", out_dir, "output directory");

  auto* report = app.add_subcommand(
      "report", "re-render CSV reports from a stored results.json");
  std::string report_in;
  report->add_option("--in", report_in, "results.json path")->required();
  report->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cf->parsed()) {
      const auto cfg = build_config(config_path, scale, seed, kappa, model,
                                    probes, threads, false);
      const rec::RatingsTable table = load_table(data_path, cfg.master_seed);
      Rng split_rng(stable_seed(cfg.master_seed, "split", 0));
      const xp::SplitPlan plan = xp::make_splits(table, cfg, split_rng);
      Rng mf_rng(stable_seed(cfg.master_seed, "mf", 0));
      const rec::MFModel mf =
          rec::train_mf(table.subset(plan.cf_rows), cfg.mf, mf_rng);
      std::vector<int> eval_rows;
      for (int u = 0; u < table.n_users(); ++u)
        for (int r : plan.noncf_rows[u]) eval_rows.push_back(r);
      const double held_out = rec::rmse(mf, table.subset(eval_rows));
      std::filesystem::create_directories(out_dir);
      rec::save_mf(mf, out_dir + "/mf.json");
      std::printf("users=%d items=%d cf_rows=%zu rmse=%.6f\n", table.n_users(),
                  table.n_items(), plan.cf_rows.size(), held_out);
    } else if (simulate->parsed()) {
      sim::UserLatent u;
      u.dyn = {s_alpha, s_beta, s_gamma, s_delta};
      u.items = {0};
      u.psi = {1.0};
      u.beta = {s_beta};
      u.rating = {s_rating};
      u.tau = s_tau;
      sim::SeqConfig sc;
      sc.B = s_B;
      sc.T = s_T;
      if (s_lam0 || s_q0) {
        require(s_lam0 && s_q0, "usage", "--lam0 and --q0 go together");
        sc.init_override = lv::State{*s_lam0, *s_q0};
      }
      std::unique_ptr<sim::BreakingPolicy> pol;
      if (s_policy == "stationary")
        pol = std::make_unique<sim::StationaryPolicy>(s_p);
      else if (s_policy == "safety")
        pol = std::make_unique<sim::SafetyPolicy>(s_p, s_tau_s, s_k, s_cooldown);
      else
        fail("usage", "unknown policy \"" + s_policy + "\"");
      Rng rng(stable_seed(seed.value_or(42), "simulate"));
      sim::InteractionSequence seq;
      if (s_model == "lv")
        seq = sim::sample_lv_sequence(u, *pol, sc, rng);
      else if (s_model == "stateless")
        seq = sim::sample_stateless_sequence(u, *pol, sc, rng);
      else
        fail("usage", "unknown model \"" + s_model + "\"");
      std::filesystem::create_directories(out_dir);
      json echo = {{"model", s_model},   {"policy", s_policy},
                   {"p", s_p},           {"alpha", s_alpha},
                   {"beta", s_beta},     {"gamma", s_gamma},
                   {"delta", s_delta},   {"rating", s_rating},
                   {"tau", s_tau},       {"T", s_T},
                   {"B", s_B},           {"seed", seed.value_or(42)}};
      sim::write_sequence_csv(seq, out_dir + "/sequence.csv");
      sim::write_sequence_json(seq, echo.dump(), out_dir + "/sequence.json");
      std::printf("events=%zu churned=%d rate_last_half=%.6f\n",
                  seq.events.size(), seq.churned ? 1 : 0,
                  sim::engagement_rate(seq, s_T / 2));
    } else if (fit_cmd->parsed()) {
      std::vector<fit::TreatmentPoint> pts;
      for (const auto& s : fit_points_arg) {
        const auto sep = s.find(':');
        if (sep == std::string::npos)
          fail("usage", "point must look like p:rate, got \"" + s + "\"");
        pts.push_back(
            {std::stod(s.substr(0, sep)), std::stod(s.substr(sep + 1))});
      }
      if (!fit_in.empty()) {
        const json j = json::parse(read_file(fit_in));
        for (const auto& pair : j.at("points"))
          pts.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
      }
      require(!pts.empty(), "usage", "no treatment points given");
      fit::EquilibriumCurve curve;
      if (fit_two) {
        require(pts.size() == 2, "usage",
                "--two-point needs exactly two points");
        curve = fit::fit_two_point(pts[0], pts[1]);
      } else {
        curve = fit::fit_nnls(pts);
      }
      const fit::PolicyDecision dec = fit::derive_policy(curve, fit_p_max);
      json out = {{"c1", curve.c1},
                  {"c2", curve.c2},
                  {"clipped", curve.clipped},
                  {"ab_hat", dec.ab_hat},
                  {"p_hat", dec.p_hat},
                  {"degenerate", dec.degenerate},
                  {"capped", dec.capped}};
      std::cout << out.dump(2) << "\n";
    } else if (experiment->parsed()) {
      const auto cfg = build_config(config_path, scale, seed, kappa, model,
                                    probes, threads, oracle_predictions);
      const rec::RatingsTable table = load_table(data_path, cfg.master_seed);
      const xp::ResultsTable results = xp::run_experiment(table, cfg);
      xp::write_report(results, out_dir);
      print_summary(results);
    } else if (sweep->parsed()) {
      const auto cfg = build_config(config_path, scale, seed, kappa, model,
                                    probes, threads, false);
      const rec::RatingsTable table = load_table(data_path, cfg.master_seed);
      const xp::SweepTable sw = xp::sweep_p1(table, cfg, sweep_grid);
      xp::write_sweep(sw, out_dir);
      for (const auto& r : sw.rows)
        std::printf("p1=%.2f %-10s mean_lte=%.4f stderr=%.4f\n", r.p1,
                    r.policy.c_str(), r.mean_lte, r.stderr_lte);
    } else if (report->parsed()) {
      const xp::ResultsTable results = xp::load_results(report_in);
      xp::write_report(results, out_dir);
      print_summary(results);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.kind.c_str(), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 3;
  }
  return 0;
}
