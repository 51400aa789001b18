#include "pacer/predict.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"

namespace pacer::pred {

using nlohmann::json;

Regressor fit_ols(const TreatmentDataset& data, double ridge) {
  const int n = static_cast<int>(data.X.rows());
  const int d = static_cast<int>(data.X.cols());
  require(n > 0 && d > 0, "data", "empty regression dataset");
  require(data.y.size() == n, "data", "X and y row counts disagree");
  require(n >= d + 1, "data",
          "need at least " + std::to_string(d + 1) + " rows, got " +
              std::to_string(n));
  require(ridge >= 0, "config", "ridge must be nonnegative");

  Eigen::MatrixXd Xa(n, d + 1);
  Xa.leftCols(d) = data.X;
  Xa.col(d).setOnes();
  Eigen::MatrixXd G = Xa.transpose() * Xa;
  G.diagonal().array() += ridge;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success)
    fail("numeric", "singular normal equations; increase ridge");
  Regressor reg;
  reg.w = ldlt.solve(Xa.transpose() * data.y);
  if (!reg.w.allFinite())
    fail("numeric", "singular normal equations; increase ridge");
  reg.p = data.p;
  return reg;
}

double predict_rate(const Regressor& reg, const Eigen::VectorXd& features) {
  require(features.size() + 1 == reg.w.size(), "domain",
          "feature length does not match the regressor");
  const double v = reg.w.head(features.size()).dot(features) + reg.w(reg.w.size() - 1);
  return v > 0 ? v : 0;
}

double rmse(const Regressor& reg, const TreatmentDataset& data) {
  require(data.X.rows() > 0, "data", "empty evaluation dataset");
  double sse = 0;
  for (int i = 0; i < data.X.rows(); ++i) {
    const double e = data.y(i) - predict_rate(reg, data.X.row(i).transpose());
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(data.X.rows()));
}

double oracle_predict(const lv::Params& user_dynamics, double p) {
  return lv::equilibrium(user_dynamics, p).lam;
}

void save_regressor(const Regressor& reg, const std::string& path) {
  json j;
  j["format"] = "pacer-regressor";
  j["version"] = reg.version;
  j["p"] = reg.p;
  j["horizon"] = reg.horizon;
  json w = json::array();
  for (int i = 0; i < reg.w.size(); ++i) w.push_back(reg.w(i));
  j["w"] = w;
  std::ofstream out(path);
  if (!out) fail("io", "cannot write " + path);
  out << j.dump(2) << "\n";
}

Regressor load_regressor(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("data", "bad regressor checkpoint: " + std::string(e.what()));
  }
  if (j.value("format", "") != "pacer-regressor" || j.value("version", 0) != 1)
    fail("data", "unrecognized regressor checkpoint format");
  Regressor reg;
  reg.p = j.at("p").get<double>();
  reg.horizon = j.at("horizon").get<double>();
  const auto& w = j.at("w");
  reg.w.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) reg.w(i) = w[i].get<double>();
  return reg;
}

}  // namespace pacer::pred
