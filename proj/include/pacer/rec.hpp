#pragma once
#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "pacer/error.hpp"
#include "pacer/rng.hpp"

namespace pacer::rec {

struct Rating {
  std::int32_t user = 0, item = 0;  // dense indices
  double r = 0;                     // 1..5
  std::int64_t ts = 0;
};

// Rows sorted by (user, item); dense indices map back to original ids.
struct RatingsTable {
  std::vector<Rating> rows;
  std::vector<std::int32_t> user_ids, item_ids;  // dense -> original
  std::vector<std::pair<int, int>> user_span;    // per-user [begin, end) in rows

  int n_users() const { return static_cast<int>(user_ids.size()); }
  int n_items() const { return static_cast<int>(item_ids.size()); }
  // Copy holding only the given rows; id maps and dimensions are shared.
  RatingsTable subset(const std::vector<int>& row_idx) const;
  void rebuild_spans();
};

// Parses "UserID::MovieID::Rating::Timestamp" lines. Users with fewer than
// min_per_user ratings are dropped; malformed or duplicate (user,item) lines
// raise a data error naming the line.
RatingsTable load_ratings(const std::string& path, int min_per_user = 20);

struct MFConfig {
  int d = 8;
  int epochs = 20;
  double lr = 0.005;
  double reg = 0.02;
  double init_scale = 0.1;  // factor entries ~ Normal(0, init_scale/sqrt(d))
};

// Biased matrix factorization: r_hat = mu + b_u + b_i + P_u . Q_i, clipped to
// [1,5] at prediction time. mu is the training-set mean, not learned.
struct MFModel {
  int d = 0;
  double mu = 0;
  Eigen::VectorXd bu, bi;
  Eigen::MatrixXd P, Q;  // n_users x d, n_items x d
};

// Plain SGD, single-threaded, ratings visited in table order every epoch
// (order changes results, so determinism wins over shuffling).
MFModel train_mf(const RatingsTable& table, const MFConfig& cfg, Rng& rng);

double predict_rating(const MFModel& m, int user, int item);

// Held-out RMSE with clipped predictions.
double rmse(const MFModel& m, const RatingsTable& table);

void save_mf(const MFModel& m, const std::string& path);
MFModel load_mf(const std::string& path);

// Per-user candidate pool with softmax(temperature) sampling over predicted
// scores. Candidate order follows the ratings table (item index ascending).
struct SoftmaxRecommender {
  double temp = 0.5;
  std::vector<std::vector<std::int32_t>> items;  // per user, dense item idx
  std::vector<std::vector<double>> psi;          // sampling probabilities
  std::vector<std::vector<double>> r_hat;        // predicted scores
};

SoftmaxRecommender build_recommender(const MFModel& m,
                                     const std::vector<std::vector<std::int32_t>>& candidates,
                                     double temp = 0.5);

// Index into rec.items[user] (not an item id).
int recommend(const SoftmaxRecommender& rec, int user, Rng& rng);

// (P_u, b_u, rho_hat): the user's taste vector, bias, and psi-weighted mean
// predicted rating. Length d + 2.
Eigen::VectorXd build_features(const MFModel& m, const SoftmaxRecommender& rec,
                               int user);

// Item-level rate gain: ((kappa*r + (1-kappa)*r_hat)^2) / 5, in [0.2, 5] for
// ratings in [1,5].
double beta_of_item(double kappa, double r_true, double r_hat);

}  // namespace pacer::rec
