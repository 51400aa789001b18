#pragma once
#include <Eigen/Dense>
#include <string>

#include "pacer/error.hpp"
#include "pacer/lv.hpp"

namespace pacer::pred {

// Feature rows (one per simulated user) with their observed long-term
// engagement rates, all under the same treatment probability p.
struct TreatmentDataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double p = 0;
};

// Linear rate predictor for one treatment cell; w holds the feature weights
// with the intercept last.
struct Regressor {
  Eigen::VectorXd w;
  double p = 0;
  double horizon = 0;
  int version = 1;
};

// Normal equations with a symmetric solve and a small ridge for conditioning.
// Needs at least as many rows as unknowns (features + intercept).
Regressor fit_ols(const TreatmentDataset& data, double ridge = 1e-8);

// Predicted engagement rate, floored at 0 (rates are nonnegative).
double predict_rate(const Regressor& reg, const Eigen::VectorXd& features);

double rmse(const Regressor& reg, const TreatmentDataset& data);

// What a predictor would say with perfect knowledge of the user's dynamics:
// the stationary rate of (alpha, beta_eff, gamma, delta) under p.
double oracle_predict(const lv::Params& user_dynamics, double p);

void save_regressor(const Regressor& reg, const std::string& path);
Regressor load_regressor(const std::string& path);

}  // namespace pacer::pred
