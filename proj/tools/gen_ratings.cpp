// Writes a seeded synthetic ratings table in MovieLens dump format.
#include <cstdio>

#include "CLI11.hpp"
#include "pacer/datagen.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic user::item::rating::timestamp table"};
  pacer::rec::SyntheticConfig cfg;
  std::string out = "ratings.dat";
  app.add_option("--users", cfg.n_users, "number of users");
  app.add_option("--items", cfg.n_items, "number of items");
  app.add_option("--min-per-user", cfg.min_per_user, "fewest ratings per user");
  app.add_option("--max-per-user", cfg.max_per_user, "most ratings per user");
  app.add_option("--seed", cfg.seed, "generator seed");
  app.add_option("--out", out, "output path");
  CLI11_PARSE(app, argc, argv);
  try {
    const pacer::rec::RatingsTable t = pacer::rec::synthetic_ratings(cfg);
    pacer::rec::write_ratings_file(t, out);
    std::printf("wrote %zu ratings for %d users, %d items -> %s\n",
                t.rows.size(), t.n_users(), t.n_items(), out.c_str());
  } catch (const pacer::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.kind.c_str(), e.what());
    return 2;
  }
  return 0;
}
