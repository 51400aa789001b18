#pragma once
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pacer/error.hpp"
#include "pacer/fit.hpp"
#include "pacer/rec.hpp"
#include "pacer/rng.hpp"
#include "pacer/sim.hpp"

namespace pacer::xp {

struct SafetyConfig {
  double tau_s = 16;
  int k = 10;
  double cooldown = 0.5;
};

struct ExperimentConfig {
  std::uint64_t master_seed = 42;
  int replications = 3;
  std::string model = "lv";  // "lv" | "stateless"
  double kappa = 0.5;
  std::vector<double> probes = {0.05, 0.1, 0.15};
  double p_max = 0.95;

  // Split sizing. test_count users are held out for evaluation; from the
  // remainder a train pool is drawn (0 = use everyone), of which
  // main_fraction become the no-break cohort and treatment_fraction go to
  // each probe. Absolute counts override the fractions when set.
  double cf_fraction = 0.3;
  int test_count = 200;
  int train_pool = 500;
  double main_fraction = 0.7;
  double treatment_fraction = 0.1;
  std::optional<int> main_count;
  std::optional<int> treatment_count;

  // Dynamics constants shared by every user; beta comes from their items.
  double alpha = 1.3, gamma = 0.2, delta = 0.01;
  double T = 100;
  int B = 10;
  double init_noise = 0.1;
  double churn_floor = 1e-6;
  double tau = 4;  // stateless rate scale
  double softmax_temp = 0.5;

  std::vector<double> adaptive_t0 = {0.5, 5, 50};  // empty disables adaptive
  double collect_prob = 0.5;
  SafetyConfig safety;
  rec::MFConfig mf;

  int threads = 0;  // 0 = hardware concurrency
  bool oracle_predictions = false;
  double ols_ridge = 1e-8;
  long max_events = 1000000;

  void validate() const;
};

// "desk" keeps the 500-user pool / 200 test users / 3 replications defaults;
// "paper" sizes the run for the full protocol.
void apply_scale(ExperimentConfig& cfg, const std::string& scale);

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

struct SplitPlan {
  std::vector<int> cf_rows;                       // row indices into the table
  std::vector<std::vector<int>> noncf_rows;       // per user
  std::vector<int> main_users;
  std::vector<std::vector<int>> treatment_users;  // one group per probe
  std::vector<int> test_users;
  std::vector<std::int8_t> role;  // -1 unused, 0 main, 1..N treatment, 99 test
};

// Disjoint roles; the factorization subset covers every user and item (rows
// are moved in when an item would otherwise vanish from it).
SplitPlan make_splits(const rec::RatingsTable& table,
                      const ExperimentConfig& cfg, Rng& rng);

struct PolicyRow {
  std::string name;
  double mean_lte = 0;
  double stderr_lte = 0;
  double ci95_half = 0;
  double gain_pct = 0;  // vs default, from the means
  std::vector<double> per_rep;
};

struct PerUserRecord {
  int rep = 0;
  std::int32_t user_id = 0;  // original id
  double p_hat = 0;
  bool degenerate = false;
  double lte_learned = 0;
  double lte_default = 0;
};

struct ResultsTable {
  std::vector<PolicyRow> policies;  // default, safety, best_of, learned,
                                    // oracle, adaptive@t0...
  std::vector<PerUserRecord> users;
  std::vector<double> cf_rmse;  // per replication, held-out
  int n_test = 0;
  int replications = 0;
  std::string config_json;
};

ResultsTable run_experiment(const rec::RatingsTable& table,
                            const ExperimentConfig& cfg);

struct SweepRow {
  double p1 = 0;
  std::string policy;
  double mean_lte = 0;
  double stderr_lte = 0;
};

struct SweepTable {
  std::vector<double> grid;
  std::vector<SweepRow> rows;
  std::string config_json;
};

// Reruns the experiment with a single probe per grid point (p1 = 0 collapses
// to one fit point and the flagged p_hat = 0 fallback).
SweepTable sweep_p1(const rec::RatingsTable& table, const ExperimentConfig& cfg,
                    const std::vector<double>& grid = {0, 0.08, 0.16, 0.24,
                                                       0.32, 0.4});

// summary.csv, per_user.csv, adaptive.csv and results.json under out_dir.
void write_report(const ResultsTable& results, const std::string& out_dir);
std::string results_to_json(const ResultsTable& results);
ResultsTable results_from_json(const std::string& text);
ResultsTable load_results(const std::string& path);

void write_sweep(const SweepTable& sweep, const std::string& out_dir);
std::string sweep_to_json(const SweepTable& sweep);

// Fixed-order pairwise reduction; the value never depends on thread count.
double pairwise_sum(const double* a, std::size_t n);
inline double pairwise_mean(const std::vector<double>& v) {
  return v.empty() ? 0 : pairwise_sum(v.data(), v.size()) / static_cast<double>(v.size());
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace pacer::xp
