#include "pacer/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "pacer/predict.hpp"

namespace pacer::xp {

using nlohmann::json;

void ExperimentConfig::validate() const {
  require(replications >= 1, "config", "need at least one replication");
  require(model == "lv" || model == "stateless", "config",
          "model must be \"lv\" or \"stateless\"");
  require(kappa >= 0 && kappa <= 1, "config", "kappa must lie in [0,1]");
  require(p_max >= 0 && p_max < 1, "config", "p_max must lie in [0,1)");
  require(!probes.empty(), "config", "need at least one probe probability");
  std::set<double> distinct(probes.begin(), probes.end());
  require(distinct.size() == probes.size(), "config",
          "probe probabilities must be distinct");
  for (double p : probes)
    require(p >= 0 && p < 1, "config", "probes must lie in [0,1)");
  require(cf_fraction > 0 && cf_fraction < 1, "config",
          "cf_fraction must lie in (0,1)");
  require(test_count >= 1, "config", "need at least one test user");
  require(train_pool >= 0, "config", "train_pool must be nonnegative");
  require(main_fraction > 0 && main_fraction <= 1, "config",
          "main_fraction must lie in (0,1]");
  require(treatment_fraction > 0 && treatment_fraction <= 1, "config",
          "treatment_fraction must lie in (0,1]");
  require(alpha > 0 && gamma > 0 && delta > 0, "config",
          "dynamics constants must be positive");
  require(T > 0 && B >= 1, "config", "bad horizon or batch size");
  require(init_noise >= 0 && init_noise < 1, "config",
          "init_noise must lie in [0,1)");
  require(tau > 0, "config", "tau must be positive");
  require(softmax_temp > 0, "config", "softmax_temp must be positive");
  for (double t0 : adaptive_t0)
    require(t0 >= 0, "config", "adaptive t0 must be nonnegative");
  require(collect_prob >= 0 && collect_prob <= 1, "config",
          "collect_prob must lie in [0,1]");
  require(threads >= 0, "config", "threads must be nonnegative");
  require(ols_ridge >= 0, "config", "ols_ridge must be nonnegative");
}

void apply_scale(ExperimentConfig& cfg, const std::string& scale) {
  if (scale == "desk") {
    cfg.test_count = 200;
    cfg.train_pool = 500;
    cfg.replications = 3;
  } else if (scale == "paper") {
    cfg.test_count = 1000;
    cfg.train_pool = 0;
    cfg.replications = 10;
  } else {
    fail("config", "unknown scale \"" + scale + "\" (desk|paper)");
  }
}

namespace {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail("config", "bad config JSON: " + std::string(e.what()));
  }
  ExperimentConfig cfg;
  if (j.contains("scale")) apply_scale(cfg, j.at("scale").get<std::string>());
  read_if(j, "master_seed", cfg.master_seed);
  read_if(j, "replications", cfg.replications);
  read_if(j, "model", cfg.model);
  read_if(j, "kappa", cfg.kappa);
  read_if(j, "probes", cfg.probes);
  read_if(j, "p_max", cfg.p_max);
  read_if(j, "cf_fraction", cfg.cf_fraction);
  read_if(j, "test_count", cfg.test_count);
  read_if(j, "train_pool", cfg.train_pool);
  read_if(j, "main_fraction", cfg.main_fraction);
  read_if(j, "treatment_fraction", cfg.treatment_fraction);
  if (j.contains("main_count")) cfg.main_count = j.at("main_count").get<int>();
  if (j.contains("treatment_count"))
    cfg.treatment_count = j.at("treatment_count").get<int>();
  read_if(j, "alpha", cfg.alpha);
  read_if(j, "gamma", cfg.gamma);
  read_if(j, "delta", cfg.delta);
  read_if(j, "T", cfg.T);
  read_if(j, "B", cfg.B);
  read_if(j, "init_noise", cfg.init_noise);
  read_if(j, "churn_floor", cfg.churn_floor);
  read_if(j, "tau", cfg.tau);
  read_if(j, "softmax_temp", cfg.softmax_temp);
  read_if(j, "adaptive_t0", cfg.adaptive_t0);
  read_if(j, "collect_prob", cfg.collect_prob);
  if (j.contains("safety")) {
    const json& s = j.at("safety");
    read_if(s, "tau_s", cfg.safety.tau_s);
    read_if(s, "k", cfg.safety.k);
    read_if(s, "cooldown", cfg.safety.cooldown);
  }
  if (j.contains("mf")) {
    const json& m = j.at("mf");
    read_if(m, "d", cfg.mf.d);
    read_if(m, "epochs", cfg.mf.epochs);
    read_if(m, "lr", cfg.mf.lr);
    read_if(m, "reg", cfg.mf.reg);
    read_if(m, "init_scale", cfg.mf.init_scale);
  }
  read_if(j, "threads", cfg.threads);
  read_if(j, "oracle_predictions", cfg.oracle_predictions);
  read_if(j, "ols_ridge", cfg.ols_ridge);
  read_if(j, "max_events", cfg.max_events);
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["master_seed"] = cfg.master_seed;
  j["replications"] = cfg.replications;
  j["model"] = cfg.model;
  j["kappa"] = cfg.kappa;
  j["probes"] = cfg.probes;
  j["p_max"] = cfg.p_max;
  j["cf_fraction"] = cfg.cf_fraction;
  j["test_count"] = cfg.test_count;
  j["train_pool"] = cfg.train_pool;
  j["main_fraction"] = cfg.main_fraction;
  j["treatment_fraction"] = cfg.treatment_fraction;
  if (cfg.main_count) j["main_count"] = *cfg.main_count;
  if (cfg.treatment_count) j["treatment_count"] = *cfg.treatment_count;
  j["alpha"] = cfg.alpha;
  j["gamma"] = cfg.gamma;
  j["delta"] = cfg.delta;
  j["T"] = cfg.T;
  j["B"] = cfg.B;
  j["init_noise"] = cfg.init_noise;
  j["churn_floor"] = cfg.churn_floor;
  j["tau"] = cfg.tau;
  j["softmax_temp"] = cfg.softmax_temp;
  j["adaptive_t0"] = cfg.adaptive_t0;
  j["collect_prob"] = cfg.collect_prob;
  j["safety"] = {{"tau_s", cfg.safety.tau_s},
                 {"k", cfg.safety.k},
                 {"cooldown", cfg.safety.cooldown}};
  j["mf"] = {{"d", cfg.mf.d},
             {"epochs", cfg.mf.epochs},
             {"lr", cfg.mf.lr},
             {"reg", cfg.mf.reg},
             {"init_scale", cfg.mf.init_scale}};
  j["threads"] = cfg.threads;
  j["oracle_predictions"] = cfg.oracle_predictions;
  j["ols_ridge"] = cfg.ols_ridge;
  j["max_events"] = cfg.max_events;
  return j.dump(2);
}

double pairwise_sum(const double* a, std::size_t n) {
  if (n <= 8) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(a, h) + pairwise_sum(a + h, n - h);
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    threads = hw == 0 ? 1 : static_cast<int>(hw);
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

SplitPlan make_splits(const rec::RatingsTable& table,
                      const ExperimentConfig& cfg, Rng& rng) {
  cfg.validate();
  const int nu = table.n_users();
  const int ni = table.n_items();
  require(nu > 0, "data", "empty ratings table");

  SplitPlan plan;
  plan.role.assign(nu, -1);
  plan.noncf_rows.resize(nu);

  // Per-user factorization subset, then repair so every item keeps at least
  // one factorization rating.
  std::vector<char> is_cf(table.rows.size(), 0);
  std::vector<int> cf_per_item(ni, 0);
  std::vector<int> noncf_count(nu, 0);
  for (int u = 0; u < nu; ++u) {
    const auto [b, e] = table.user_span[u];
    const int n_u = e - b;
    if (n_u == 0) continue;
    const int n_cf = std::clamp(
        static_cast<int>(std::llround(cfg.cf_fraction * n_u)), 1, n_u - 1);
    std::vector<int> idx(n_u);
    for (int i = 0; i < n_u; ++i) idx[i] = b + i;
    for (int k = 0; k < n_cf; ++k) {
      const int j = k + static_cast<int>(rng.below(idx.size() - k));
      std::swap(idx[k], idx[j]);
    }
    for (int k = 0; k < n_cf; ++k) is_cf[idx[k]] = 1;
    noncf_count[u] = n_u - n_cf;
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    if (is_cf[i]) ++cf_per_item[table.rows[i].item];

  std::vector<std::vector<int>> item_rows(ni);
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    item_rows[table.rows[i].item].push_back(static_cast<int>(i));
  for (int it = 0; it < ni; ++it) {
    if (cf_per_item[it] > 0) continue;
    int pick = -1, best = -1;
    for (int row : item_rows[it]) {  // donor with the most spare ratings
      const int u = table.rows[row].user;
      if (noncf_count[u] > best) {
        best = noncf_count[u];
        pick = row;
      }
    }
    require(pick >= 0, "data", "item with no ratings in the table");
    is_cf[pick] = 1;
    ++cf_per_item[it];
    --noncf_count[table.rows[pick].user];
  }

  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (is_cf[i])
      plan.cf_rows.push_back(static_cast<int>(i));
    else
      plan.noncf_rows[table.rows[i].user].push_back(static_cast<int>(i));
  }

  // Role assignment over users that can still be simulated.
  std::vector<int> eligible;
  for (int u = 0; u < nu; ++u)
    if (!plan.noncf_rows[u].empty()) eligible.push_back(u);
  rng.shuffle(eligible);

  require(static_cast<int>(eligible.size()) >= cfg.test_count, "data",
          "not enough users for the requested test set");
  plan.test_users.assign(eligible.begin(), eligible.begin() + cfg.test_count);
  for (int u : plan.test_users) plan.role[u] = 99;

  std::vector<int> pool(eligible.begin() + cfg.test_count, eligible.end());
  if (cfg.train_pool > 0) {
    require(static_cast<int>(pool.size()) >= cfg.train_pool, "data",
            "not enough users for the requested train pool");
    pool.resize(cfg.train_pool);
  }
  const int n_pool = static_cast<int>(pool.size());
  const int n_probes = static_cast<int>(cfg.probes.size());
  const int main_k =
      cfg.main_count ? *cfg.main_count
                     : static_cast<int>(std::floor(cfg.main_fraction * n_pool));
  const int treat_k =
      cfg.treatment_count
          ? *cfg.treatment_count
          : static_cast<int>(std::floor(cfg.treatment_fraction * n_pool));
  require(main_k >= 1, "data", "main cohort is empty");
  require(treat_k >= 1, "data", "treatment cohorts are empty");
  require(main_k + n_probes * treat_k <= n_pool, "data",
          "train pool too small for main + treatment cohorts");

  int at = 0;
  plan.main_users.assign(pool.begin(), pool.begin() + main_k);
  at = main_k;
  for (int u : plan.main_users) plan.role[u] = 0;
  plan.treatment_users.resize(n_probes);
  for (int g = 0; g < n_probes; ++g) {
    plan.treatment_users[g].assign(pool.begin() + at, pool.begin() + at + treat_k);
    for (int u : plan.treatment_users[g]) plan.role[u] = static_cast<std::int8_t>(1 + g);
    at += treat_k;
  }

  // Sorted cohorts keep downstream iteration order independent of the draw.
  std::sort(plan.test_users.begin(), plan.test_users.end());
  std::sort(plan.main_users.begin(), plan.main_users.end());
  for (auto& g : plan.treatment_users) std::sort(g.begin(), g.end());
  return plan;
}

namespace {

struct UserSetup {
  sim::UserLatent latent;
  Eigen::VectorXd features;
};

// Candidate arrays and features for one user; beta blends the true and
// predicted rating by kappa.
UserSetup build_user(const rec::RatingsTable& table,
                     const rec::MFModel& mf,
                     const rec::SoftmaxRecommender& recsys,
                     const ExperimentConfig& cfg, int user,
                     const std::vector<int>& noncf_rows) {
  UserSetup s;
  s.latent.dyn.alpha = cfg.alpha;
  s.latent.dyn.gamma = cfg.gamma;
  s.latent.dyn.delta = cfg.delta;
  s.latent.tau = cfg.tau;
  const std::size_t n = noncf_rows.size();
  s.latent.items.resize(n);
  s.latent.psi = recsys.psi[user];
  s.latent.beta.resize(n);
  s.latent.rating.resize(n);
  double beta_eff = 0;
  for (std::size_t c = 0; c < n; ++c) {
    const rec::Rating& row = table.rows[noncf_rows[c]];
    s.latent.items[c] = row.item;
    const double r_hat = recsys.r_hat[user][c];
    s.latent.beta[c] = rec::beta_of_item(cfg.kappa, row.r, r_hat);
    s.latent.rating[c] = row.r;
    beta_eff += s.latent.psi[c] * s.latent.beta[c];
  }
  s.latent.dyn.beta = beta_eff;
  s.features = rec::build_features(mf, recsys, user);
  return s;
}

sim::SeqConfig seq_config(const ExperimentConfig& cfg) {
  sim::SeqConfig sc;
  sc.B = cfg.B;
  sc.T = cfg.T;
  sc.init_noise = cfg.init_noise;
  sc.churn_floor = cfg.churn_floor;
  sc.max_events = cfg.max_events;
  return sc;
}

double rollout(const sim::UserLatent& u, sim::BreakingPolicy& pol,
               const ExperimentConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  const sim::SeqConfig sc = seq_config(cfg);
  const sim::InteractionSequence seq =
      cfg.model == "lv" ? sim::sample_lv_sequence(u, pol, sc, rng)
                        : sim::sample_stateless_sequence(u, pol, sc, rng);
  return sim::engagement_rate(seq, 0.0);
}

// Fit points for one test user: the main-cohort prediction at p = 0 plus one
// point per probe, deduplicated by probability.
std::vector<fit::TreatmentPoint> fit_points(
    const UserSetup& s, const std::vector<pred::Regressor>& regs,
    const std::vector<double>& point_ps, bool oracle) {
  std::vector<fit::TreatmentPoint> pts;
  std::set<double> seen;
  for (std::size_t i = 0; i < point_ps.size(); ++i) {
    const double p = point_ps[i];
    if (!seen.insert(p).second) continue;
    const double f = oracle ? pred::oracle_predict(s.latent.dyn, p)
                            : pred::predict_rate(regs[i], s.features);
    pts.push_back({p, f});
  }
  return pts;
}

fit::PolicyDecision decide(const std::vector<fit::TreatmentPoint>& pts,
                           double p_max) {
  std::set<double> distinct;
  for (const auto& pt : pts) distinct.insert(pt.p);
  if (distinct.size() < 2) {
    fit::PolicyDecision d;
    d.degenerate = true;  // single cell carries no slope information
    return d;
  }
  return fit::derive_policy(fit::fit_nnls(pts), p_max);
}

double t_ci95_half(double stderr_lte, int reps) {
  if (reps < 2 || stderr_lte <= 0) return 0;
  boost::math::students_t dist(reps - 1);
  return boost::math::quantile(dist, 0.975) * stderr_lte;
}

PolicyRow finish_row(const std::string& name,
                     const std::vector<double>& per_rep) {
  PolicyRow row;
  row.name = name;
  row.per_rep = per_rep;
  const int R = static_cast<int>(per_rep.size());
  row.mean_lte = pairwise_mean(per_rep);
  if (R >= 2) {
    double ss = 0;
    for (double v : per_rep) ss += (v - row.mean_lte) * (v - row.mean_lte);
    row.stderr_lte = std::sqrt(ss / (R - 1)) / std::sqrt(static_cast<double>(R));
  }
  row.ci95_half = t_ci95_half(row.stderr_lte, R);
  return row;
}

}  // namespace

ResultsTable run_experiment(const rec::RatingsTable& table,
                            const ExperimentConfig& cfg) {
  cfg.validate();
  const int n_probes = static_cast<int>(cfg.probes.size());
  const int n_adapt = static_cast<int>(cfg.adaptive_t0.size());

  // Policy slot layout: fixed names first, then one adaptive row per t0.
  std::vector<std::string> policy_names = {"default", "safety", "best_of",
                                           "learned", "oracle"};
  for (double t0 : cfg.adaptive_t0) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "adaptive@%g", t0);
    policy_names.push_back(buf);
  }
  const int n_policies = static_cast<int>(policy_names.size());

  ResultsTable results;
  results.config_json = config_to_json(cfg);
  results.replications = cfg.replications;
  std::vector<std::vector<double>> per_rep_means(
      n_policies, std::vector<double>(cfg.replications, 0));

  // Probabilities behind the fit points: baseline 0 then the probes.
  std::vector<double> point_ps = {0};
  point_ps.insert(point_ps.end(), cfg.probes.begin(), cfg.probes.end());

  for (int rep = 0; rep < cfg.replications; ++rep) {
    Rng split_rng(stable_seed(cfg.master_seed, "split", rep));
    const SplitPlan plan = make_splits(table, cfg, split_rng);

    Rng mf_rng(stable_seed(cfg.master_seed, "mf", rep));
    const rec::RatingsTable cf = table.subset(plan.cf_rows);
    const rec::MFModel mf = rec::train_mf(cf, cfg.mf, mf_rng);
    {
      std::vector<int> eval_rows;
      for (int u = 0; u < table.n_users(); ++u)
        for (int r : plan.noncf_rows[u]) eval_rows.push_back(r);
      results.cf_rmse.push_back(rec::rmse(mf, table.subset(eval_rows)));
    }

    std::vector<std::vector<std::int32_t>> candidates(table.n_users());
    for (int u = 0; u < table.n_users(); ++u) {
      candidates[u].reserve(plan.noncf_rows[u].size());
      for (int r : plan.noncf_rows[u])
        candidates[u].push_back(table.rows[r].item);
    }
    const rec::SoftmaxRecommender recsys =
        rec::build_recommender(mf, candidates, cfg.softmax_temp);

    // Training cohorts: simulate under their assigned stationary policy.
    std::vector<std::pair<int, double>> cohort;  // (user, p)
    for (int u : plan.main_users) cohort.push_back({u, 0.0});
    for (int g = 0; g < n_probes; ++g)
      for (int u : plan.treatment_users[g]) cohort.push_back({u, cfg.probes[g]});

    std::vector<UserSetup> cohort_setup(cohort.size());
    std::vector<double> cohort_y(cohort.size());
    parallel_for(static_cast<int>(cohort.size()), cfg.threads, [&](int i) {
      const auto [u, p] = cohort[i];
      cohort_setup[i] = build_user(table, mf, recsys, cfg, u, plan.noncf_rows[u]);
      sim::StationaryPolicy pol(p);
      cohort_y[i] = rollout(cohort_setup[i].latent, pol, cfg,
                            stable_seed(cfg.master_seed, "train-sim", rep, u));
    });

    // One regressor per fit probability, trained on its cohort.
    const int fdim = cfg.mf.d + 2;
    std::vector<pred::Regressor> regs(point_ps.size());
    if (!cfg.oracle_predictions) {
      std::size_t off = 0;
      for (std::size_t j = 0; j < point_ps.size(); ++j) {
        const std::size_t n =
            j == 0 ? plan.main_users.size() : plan.treatment_users[j - 1].size();
        pred::TreatmentDataset ds;
        ds.p = point_ps[j];
        ds.X.resize(n, fdim);
        ds.y.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          ds.X.row(i) = cohort_setup[off + i].features.transpose();
          ds.y(i) = cohort_y[off + i];
        }
        regs[j] = pred::fit_ols(ds, cfg.ols_ridge);
        regs[j].horizon = cfg.T;
        off += n;
      }
    }

    // Test users: derive the individualized policy, then one rollout per arm
    // from a shared per-user stream (the arms differ only through p).
    const int n_test = static_cast<int>(plan.test_users.size());
    std::vector<std::vector<double>> lte(
        n_policies, std::vector<double>(n_test, 0));
    std::vector<double> p_hats(n_test, 0);
    std::vector<std::uint8_t> degenerate(n_test, 0);

    parallel_for(n_test, cfg.threads, [&](int i) {
      const int u = plan.test_users[i];
      const UserSetup s =
          build_user(table, mf, recsys, cfg, u, plan.noncf_rows[u]);
      const std::vector<fit::TreatmentPoint> pts =
          fit_points(s, regs, point_ps, cfg.oracle_predictions);
      const fit::PolicyDecision dec = decide(pts, cfg.p_max);
      p_hats[i] = dec.p_hat;
      degenerate[i] = dec.degenerate ? 1 : 0;

      double best_p = 0, best_f = -1;
      for (const auto& pt : pts) {
        if (pt.f > best_f) {
          best_f = pt.f;
          best_p = pt.p;
        }
      }
      const double oracle_p =
          cfg.model == "lv" ? lv::optimal_policy(s.latent.dyn).p_opt : 0.0;

      const std::uint64_t eval_seed = stable_seed(cfg.master_seed, "eval", rep, u);
      {
        sim::StationaryPolicy pol(0);
        lte[0][i] = rollout(s.latent, pol, cfg, eval_seed);
      }
      {
        sim::SafetyPolicy pol(0, cfg.safety.tau_s, cfg.safety.k,
                              cfg.safety.cooldown);
        lte[1][i] = rollout(s.latent, pol, cfg, eval_seed);
      }
      {
        sim::StationaryPolicy pol(best_p);
        lte[2][i] = rollout(s.latent, pol, cfg, eval_seed);
      }
      {
        sim::StationaryPolicy pol(dec.p_hat);
        lte[3][i] = rollout(s.latent, pol, cfg, eval_seed);
      }
      {
        sim::StationaryPolicy pol(oracle_p);
        lte[4][i] = rollout(s.latent, pol, cfg, eval_seed);
      }
      for (int a = 0; a < n_adapt; ++a) {
        // Re-deriving with the observed mean rating standing in for the
        // predicted one (the last feature coordinate).
        auto refit = [&](double mean_rating, int) {
          Eigen::VectorXd feats = s.features;
          feats(feats.size() - 1) = mean_rating;
          std::vector<fit::TreatmentPoint> pts2;
          std::set<double> seen;
          for (std::size_t jj = 0; jj < point_ps.size(); ++jj) {
            const double p = point_ps[jj];
            if (!seen.insert(p).second) continue;
            const double f = cfg.oracle_predictions
                                 ? pred::oracle_predict(s.latent.dyn, p)
                                 : pred::predict_rate(regs[jj], feats);
            pts2.push_back({p, f});
          }
          return decide(pts2, cfg.p_max).p_hat;
        };
        sim::AdaptivePolicy pol(dec.p_hat, cfg.adaptive_t0[a], cfg.collect_prob,
                                refit,
                                stable_seed(cfg.master_seed, "ratings", rep, u));
        lte[5 + a][i] = rollout(s.latent, pol, cfg, eval_seed);
      }
    });

    for (int pol = 0; pol < n_policies; ++pol)
      per_rep_means[pol][rep] = pairwise_mean(lte[pol]);
    for (int i = 0; i < n_test; ++i) {
      PerUserRecord rec_u;
      rec_u.rep = rep;
      rec_u.user_id = table.user_ids[plan.test_users[i]];
      rec_u.p_hat = p_hats[i];
      rec_u.degenerate = degenerate[i] != 0;
      rec_u.lte_learned = lte[3][i];
      rec_u.lte_default = lte[0][i];
      results.users.push_back(rec_u);
    }
    results.n_test = n_test;
  }

  for (int pol = 0; pol < n_policies; ++pol)
    results.policies.push_back(
        finish_row(policy_names[pol], per_rep_means[pol]));
  const double base = results.policies[0].mean_lte;
  for (auto& row : results.policies)
    row.gain_pct = base > 0 ? 100.0 * (row.mean_lte - base) / base : 0.0;
  return results;
}

SweepTable sweep_p1(const rec::RatingsTable& table, const ExperimentConfig& cfg,
                    const std::vector<double>& grid) {
  cfg.validate();
  require(!grid.empty(), "config", "empty sweep grid");
  SweepTable sweep;
  sweep.grid = grid;
  sweep.config_json = config_to_json(cfg);
  for (double p1 : grid) {
    ExperimentConfig sub = cfg;
    sub.probes = {p1};
    sub.adaptive_t0.clear();  // the sweep compares stationary arms only
    const ResultsTable r = run_experiment(table, sub);
    for (const auto& row : r.policies) {
      if (row.name != "learned" && row.name != "best_of") continue;
      sweep.rows.push_back({p1, row.name, row.mean_lte, row.stderr_lte});
    }
  }
  return sweep;
}

}  // namespace pacer::xp
