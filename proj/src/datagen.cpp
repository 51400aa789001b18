#include "pacer/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

namespace pacer::rec {

RatingsTable synthetic_ratings(const SyntheticConfig& cfg) {
  require(cfg.n_users > 0 && cfg.n_items > 0, "config", "empty table requested");
  require(cfg.min_per_user >= 1 && cfg.max_per_user >= cfg.min_per_user,
          "config", "bad per-user rating counts");
  require(cfg.max_per_user <= cfg.n_items, "config",
          "max_per_user exceeds the item count");

  Rng rng(stable_seed(cfg.seed, "synthetic-ratings"));

  std::vector<double> bu(cfg.n_users), bi(cfg.n_items);
  std::vector<std::vector<double>> au(cfg.n_users, std::vector<double>(cfg.rank));
  std::vector<std::vector<double>> ci(cfg.n_items, std::vector<double>(cfg.rank));
  for (auto& v : bu) v = cfg.user_bias_sd * rng.normal();
  for (auto& v : bi) v = cfg.item_bias_sd * rng.normal();
  for (auto& row : au)
    for (auto& v : row) v = cfg.latent_sd * rng.normal();
  for (auto& row : ci)
    for (auto& v : row) v = cfg.latent_sd * rng.normal();

  RatingsTable t;
  t.user_ids.resize(cfg.n_users);
  t.item_ids.resize(cfg.n_items);
  std::iota(t.user_ids.begin(), t.user_ids.end(), 1);
  std::iota(t.item_ids.begin(), t.item_ids.end(), 1);

  std::vector<std::int32_t> pool(cfg.n_items);
  std::iota(pool.begin(), pool.end(), 0);
  std::int64_t ts = 978300000;  // arbitrary fixed epoch, incremented per row
  for (int u = 0; u < cfg.n_users; ++u) {
    const int n_u = cfg.min_per_user +
                    static_cast<int>(rng.below(cfg.max_per_user - cfg.min_per_user + 1));
    // partial Fisher-Yates: first n_u entries become this user's items
    for (int k = 0; k < n_u; ++k) {
      const int j = k + static_cast<int>(rng.below(pool.size() - k));
      std::swap(pool[k], pool[j]);
    }
    std::vector<std::int32_t> picked(pool.begin(), pool.begin() + n_u);
    std::sort(picked.begin(), picked.end());
    for (std::int32_t item : picked) {
      double dot = 0;
      for (int k = 0; k < cfg.rank; ++k) dot += au[u][k] * ci[item][k];
      const double v = cfg.mean + bu[u] + bi[item] + dot + cfg.noise_sd * rng.normal();
      const double r = std::clamp(std::round(v), 1.0, 5.0);
      t.rows.push_back({u, item, r, ts++});
    }
  }
  t.rebuild_spans();
  return t;
}

void write_ratings_file(const RatingsTable& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("io", "cannot write " + path);
  for (const auto& r : t.rows)
    out << t.user_ids[r.user] << "::" << t.item_ids[r.item] << "::"
        << static_cast<long long>(r.r) << "::" << r.ts << "\n";
}

}  // namespace pacer::rec
