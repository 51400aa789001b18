#include "pacer/rec.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace pacer::rec {

using nlohmann::json;

void RatingsTable::rebuild_spans() {
  user_span.assign(user_ids.size(), {0, 0});
  int i = 0;
  const int n = static_cast<int>(rows.size());
  while (i < n) {
    int j = i;
    while (j < n && rows[j].user == rows[i].user) ++j;
    user_span[rows[i].user] = {i, j};
    i = j;
  }
}

RatingsTable RatingsTable::subset(const std::vector<int>& row_idx) const {
  RatingsTable out;
  out.user_ids = user_ids;
  out.item_ids = item_ids;
  out.rows.reserve(row_idx.size());
  for (int i : row_idx) out.rows.push_back(rows[i]);
  std::sort(out.rows.begin(), out.rows.end(), [](const Rating& a, const Rating& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  out.rebuild_spans();
  return out;
}

RatingsTable load_ratings(const std::string& path, int min_per_user) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open ratings file: " + path);

  struct Raw {
    std::int32_t user, item;
    double r;
    std::int64_t ts;
  };
  std::vector<Raw> raw;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Raw rec;
    std::size_t pos = 0;
    auto next_field = [&](bool last) -> std::string {
      const std::size_t sep = line.find("::", pos);
      if (!last && sep == std::string::npos)
        fail("data", "malformed ratings line " + std::to_string(lineno));
      std::string f = last ? line.substr(pos) : line.substr(pos, sep - pos);
      pos = last ? line.size() : sep + 2;
      return f;
    };
    auto whole = [&](const std::string& f, auto parse) {
      std::size_t used = 0;
      auto v = parse(f, &used);
      if (used != f.size() || f.empty())
        fail("data", "malformed ratings line " + std::to_string(lineno));
      return v;
    };
    try {
      rec.user = whole(next_field(false),
                       [](const std::string& s, std::size_t* n) { return std::stoi(s, n); });
      rec.item = whole(next_field(false),
                       [](const std::string& s, std::size_t* n) { return std::stoi(s, n); });
      rec.r = whole(next_field(false),
                    [](const std::string& s, std::size_t* n) { return std::stod(s, n); });
      rec.ts = whole(next_field(true),
                     [](const std::string& s, std::size_t* n) { return std::stoll(s, n); });
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail("data", "malformed ratings line " + std::to_string(lineno));
    }
    if (!(rec.r >= 1 && rec.r <= 5))
      fail("data", "rating out of [1,5] at line " + std::to_string(lineno));
    raw.push_back(rec);
  }
  if (raw.empty()) fail("data", "ratings file is empty: " + path);

  std::map<std::int32_t, int> per_user;
  for (const auto& r : raw) ++per_user[r.user];

  std::map<std::int32_t, std::int32_t> umap, imap;
  for (const auto& [uid, cnt] : per_user)
    if (cnt >= min_per_user) umap[uid] = 0;
  if (umap.empty())
    fail("data", "no user has at least " + std::to_string(min_per_user) +
                     " ratings");
  for (const auto& r : raw)
    if (umap.count(r.user)) imap[r.item] = 0;

  RatingsTable t;
  for (auto& [uid, dense] : umap) {
    dense = static_cast<std::int32_t>(t.user_ids.size());
    t.user_ids.push_back(uid);
  }
  for (auto& [iid, dense] : imap) {
    dense = static_cast<std::int32_t>(t.item_ids.size());
    t.item_ids.push_back(iid);
  }
  t.rows.reserve(raw.size());
  for (const auto& r : raw) {
    auto it = umap.find(r.user);
    if (it == umap.end()) continue;
    t.rows.push_back({it->second, imap.at(r.item), r.r, r.ts});
  }
  std::sort(t.rows.begin(), t.rows.end(), [](const Rating& a, const Rating& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (t.rows[i].user == t.rows[i - 1].user &&
        t.rows[i].item == t.rows[i - 1].item)
      fail("data", "duplicate (user,item) pair: user " +
                       std::to_string(t.user_ids[t.rows[i].user]) + ", item " +
                       std::to_string(t.item_ids[t.rows[i].item]));
  }
  t.rebuild_spans();
  return t;
}

MFModel train_mf(const RatingsTable& table, const MFConfig& cfg, Rng& rng) {
  require(cfg.d > 0 && cfg.epochs > 0 && cfg.lr > 0 && cfg.reg >= 0, "config",
          "bad factorization config");
  require(!table.rows.empty(), "data", "cannot factorize an empty table");

  MFModel m;
  m.d = cfg.d;
  const int nu = table.n_users(), ni = table.n_items();
  double sum = 0;
  for (const auto& r : table.rows) sum += r.r;
  m.mu = sum / static_cast<double>(table.rows.size());
  m.bu = Eigen::VectorXd::Zero(nu);
  m.bi = Eigen::VectorXd::Zero(ni);
  m.P.resize(nu, cfg.d);
  m.Q.resize(ni, cfg.d);
  const double sd = cfg.init_scale / std::sqrt(static_cast<double>(cfg.d));
  for (int u = 0; u < nu; ++u)
    for (int k = 0; k < cfg.d; ++k) m.P(u, k) = sd * rng.normal();
  for (int i = 0; i < ni; ++i)
    for (int k = 0; k < cfg.d; ++k) m.Q(i, k) = sd * rng.normal();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sse = 0;
    for (const auto& r : table.rows) {
      const double pred =
          m.mu + m.bu(r.user) + m.bi(r.item) + m.P.row(r.user).dot(m.Q.row(r.item));
      const double e = r.r - pred;
      sse += e * e;
      m.bu(r.user) += cfg.lr * (e - cfg.reg * m.bu(r.user));
      m.bi(r.item) += cfg.lr * (e - cfg.reg * m.bi(r.item));
      for (int k = 0; k < cfg.d; ++k) {
        const double pu = m.P(r.user, k);
        m.P(r.user, k) += cfg.lr * (e * m.Q(r.item, k) - cfg.reg * pu);
        m.Q(r.item, k) += cfg.lr * (e * pu - cfg.reg * m.Q(r.item, k));
      }
    }
    if (!std::isfinite(sse))
      fail("numeric",
           "factorization diverged at epoch " + std::to_string(epoch));
  }
  return m;
}

double predict_rating(const MFModel& m, int user, int item) {
  require(user >= 0 && user < m.bu.size() && item >= 0 && item < m.bi.size(),
          "domain", "user or item index out of range");
  const double v = m.mu + m.bu(user) + m.bi(item) + m.P.row(user).dot(m.Q.row(item));
  return std::clamp(v, 1.0, 5.0);
}

double rmse(const MFModel& m, const RatingsTable& table) {
  require(!table.rows.empty(), "data", "empty evaluation table");
  double sse = 0;
  for (const auto& r : table.rows) {
    const double e = r.r - predict_rating(m, r.user, r.item);
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(table.rows.size()));
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Eigen::VectorXd vec_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

Eigen::MatrixXd mat_from_json(const json& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  return m;
}

}  // namespace

void save_mf(const MFModel& m, const std::string& path) {
  json j;
  j["format"] = "pacer-mf";
  j["version"] = 1;
  j["d"] = m.d;
  j["mu"] = m.mu;
  j["bu"] = vec_to_json(m.bu);
  j["bi"] = vec_to_json(m.bi);
  j["P"] = mat_to_json(m.P);
  j["Q"] = mat_to_json(m.Q);
  std::ofstream out(path);
  if (!out) fail("io", "cannot write " + path);
  out << j.dump(2) << "\n";
}

MFModel load_mf(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("data", "bad factorization checkpoint: " + std::string(e.what()));
  }
  if (j.value("format", "") != "pacer-mf" || j.value("version", 0) != 1)
    fail("data", "unrecognized factorization checkpoint format");
  MFModel m;
  m.d = j.at("d").get<int>();
  m.mu = j.at("mu").get<double>();
  m.bu = vec_from_json(j.at("bu"));
  m.bi = vec_from_json(j.at("bi"));
  m.P = mat_from_json(j.at("P"));
  m.Q = mat_from_json(j.at("Q"));
  return m;
}

SoftmaxRecommender build_recommender(
    const MFModel& m, const std::vector<std::vector<std::int32_t>>& candidates,
    double temp) {
  require(temp > 0, "config", "softmax temperature must be positive");
  SoftmaxRecommender rec;
  rec.temp = temp;
  rec.items = candidates;
  rec.psi.resize(candidates.size());
  rec.r_hat.resize(candidates.size());
  for (std::size_t u = 0; u < candidates.size(); ++u) {
    const auto& cand = candidates[u];
    if (cand.empty()) continue;
    auto& scores = rec.r_hat[u];
    scores.resize(cand.size());
    double mx = -1e300;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      scores[c] = predict_rating(m, static_cast<int>(u), cand[c]);
      mx = std::max(mx, scores[c] / temp);
    }
    auto& p = rec.psi[u];
    p.resize(cand.size());
    double z = 0;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      p[c] = std::exp(scores[c] / temp - mx);
      z += p[c];
    }
    for (auto& v : p) v /= z;
  }
  return rec;
}

int recommend(const SoftmaxRecommender& rec, int user, Rng& rng) {
  require(user >= 0 && user < static_cast<int>(rec.items.size()), "domain",
          "user index out of range");
  const auto& p = rec.psi[user];
  require(!p.empty(), "domain", "user has no candidate items");
  const double u = rng.uniform();
  double acc = 0;
  for (std::size_t c = 0; c + 1 < p.size(); ++c) {
    acc += p[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(p.size()) - 1;
}

Eigen::VectorXd build_features(const MFModel& m, const SoftmaxRecommender& rec,
                               int user) {
  require(user >= 0 && user < static_cast<int>(rec.items.size()), "domain",
          "user index out of range");
  const auto& p = rec.psi[user];
  require(!p.empty(), "domain", "user has no candidate items");
  Eigen::VectorXd f(m.d + 2);
  f.head(m.d) = m.P.row(user).transpose();
  f(m.d) = m.bu(user);
  double rho = 0;
  for (std::size_t c = 0; c < p.size(); ++c) rho += p[c] * rec.r_hat[user][c];
  f(m.d + 1) = rho;
  return f;
}

double beta_of_item(double kappa, double r_true, double r_hat) {
  require(kappa >= 0 && kappa <= 1, "domain", "kappa must lie in [0,1]");
  const double r = kappa * r_true + (1.0 - kappa) * r_hat;
  return r * r / 5.0;
}

}  // namespace pacer::rec
