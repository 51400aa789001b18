#pragma once
#include <string>

#include "pacer/rec.hpp"

namespace pacer::rec {

// Seeded synthetic ratings table in the same shape as a MovieLens dump:
// low-rank taste structure plus user/item biases, integer ratings 1..5.
// The wide user-bias spread matters downstream; it is what creates users
// whose item quality ranges from churn-inducing to break-worthy.
struct SyntheticConfig {
  int n_users = 800;
  int n_items = 400;
  int min_per_user = 25;
  int max_per_user = 80;
  int rank = 3;
  double mean = 3.4;
  double user_bias_sd = 0.85;
  double item_bias_sd = 0.4;
  double latent_sd = 0.5;
  double noise_sd = 0.6;
  std::uint64_t seed = 42;
};

RatingsTable synthetic_ratings(const SyntheticConfig& cfg);

// "UserID::MovieID::Rating::Timestamp" lines, original ids.
void write_ratings_file(const RatingsTable& t, const std::string& path);

}  // namespace pacer::rec
