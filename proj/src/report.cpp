#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "pacer/harness.hpp"

namespace pacer::xp {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) fail("io", "cannot write " + path);
  out << content;
}

// Fixed-width bins over p_hat; 0.08 matches the policy histogram granularity.
double bin_of(double p_hat) { return std::floor(p_hat / 0.08) * 0.08; }

}  // namespace

std::string results_to_json(const ResultsTable& results) {
  json j;
  j["format"] = "pacer-results";
  j["version"] = 1;
  j["config"] = json::parse(results.config_json);
  j["replications"] = results.replications;
  j["n_test"] = results.n_test;
  j["cf_rmse"] = results.cf_rmse;
  json pols = json::array();
  for (const auto& row : results.policies) {
    json p;
    p["name"] = row.name;
    p["mean_lte"] = row.mean_lte;
    p["stderr"] = row.stderr_lte;
    p["ci95_half"] = row.ci95_half;
    p["gain_pct"] = row.gain_pct;
    p["per_rep"] = row.per_rep;
    pols.push_back(std::move(p));
  }
  j["policies"] = std::move(pols);
  json users = json::array();
  for (const auto& u : results.users) {
    json r;
    r["rep"] = u.rep;
    r["user"] = u.user_id;
    r["p_hat"] = u.p_hat;
    r["degenerate"] = u.degenerate;
    r["lte_learned"] = u.lte_learned;
    r["lte_default"] = u.lte_default;
    users.push_back(std::move(r));
  }
  j["users"] = std::move(users);
  return j.dump(2);
}

ResultsTable results_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    fail("data", "bad results JSON: " + std::string(e.what()));
  }
  if (j.value("format", "") != "pacer-results" || j.value("version", 0) != 1)
    fail("data", "unrecognized results format");
  ResultsTable r;
  r.config_json = j.at("config").dump(2);
  r.replications = j.at("replications").get<int>();
  r.n_test = j.at("n_test").get<int>();
  r.cf_rmse = j.at("cf_rmse").get<std::vector<double>>();
  for (const auto& p : j.at("policies")) {
    PolicyRow row;
    row.name = p.at("name").get<std::string>();
    row.mean_lte = p.at("mean_lte").get<double>();
    row.stderr_lte = p.at("stderr").get<double>();
    row.ci95_half = p.at("ci95_half").get<double>();
    row.gain_pct = p.at("gain_pct").get<double>();
    row.per_rep = p.at("per_rep").get<std::vector<double>>();
    r.policies.push_back(std::move(row));
  }
  for (const auto& u : j.at("users")) {
    PerUserRecord rec;
    rec.rep = u.at("rep").get<int>();
    rec.user_id = u.at("user").get<std::int32_t>();
    rec.p_hat = u.at("p_hat").get<double>();
    rec.degenerate = u.at("degenerate").get<bool>();
    rec.lte_learned = u.at("lte_learned").get<double>();
    rec.lte_default = u.at("lte_default").get<double>();
    r.users.push_back(rec);
  }
  return r;
}

ResultsTable load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return results_from_json(text);
}

void write_report(const ResultsTable& results, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail("io", "cannot create directory " + out_dir);

  std::string summary = "policy,mean_lte,gain_pct,stderr,ci95_half\n";
  for (const auto& row : results.policies) {
    summary += row.name + "," + num(row.mean_lte) + "," + num(row.gain_pct) +
               "," + num(row.stderr_lte) + "," + num(row.ci95_half) + "\n";
  }
  write_file(out_dir + "/summary.csv", summary);

  std::string per_user =
      "rep,user,p_hat,p_hat_bin,degenerate,lte_learned,lte_default,gain_pct\n";
  for (const auto& u : results.users) {
    const double gain = u.lte_default > 0
                            ? 100.0 * (u.lte_learned - u.lte_default) / u.lte_default
                            : 0.0;
    char bin[16];
    std::snprintf(bin, sizeof bin, "%.2f", bin_of(u.p_hat));
    per_user += std::to_string(u.rep) + "," + std::to_string(u.user_id) + "," +
                num(u.p_hat) + "," + bin + "," +
                (u.degenerate ? "1" : "0") + "," + num(u.lte_learned) + "," +
                num(u.lte_default) + "," + num(gain) + "\n";
  }
  write_file(out_dir + "/per_user.csv", per_user);

  // Adaptive arms against the plain learned policy.
  const PolicyRow* learned = nullptr;
  for (const auto& row : results.policies)
    if (row.name == "learned") learned = &row;
  std::string adaptive = "t0,mean_lte,stderr,ci95_half,gain_vs_learned_pct\n";
  bool any_adaptive = false;
  for (const auto& row : results.policies) {
    if (row.name.rfind("adaptive@", 0) != 0) continue;
    any_adaptive = true;
    const double gain =
        learned && learned->mean_lte > 0
            ? 100.0 * (row.mean_lte - learned->mean_lte) / learned->mean_lte
            : 0.0;
    adaptive += row.name.substr(9) + "," + num(row.mean_lte) + "," +
                num(row.stderr_lte) + "," + num(row.ci95_half) + "," +
                num(gain) + "\n";
  }
  if (any_adaptive) write_file(out_dir + "/adaptive.csv", adaptive);

  write_file(out_dir + "/results.json", results_to_json(results) + "\n");
}

std::string sweep_to_json(const SweepTable& sweep) {
  json j;
  j["format"] = "pacer-sweep";
  j["version"] = 1;
  j["config"] = json::parse(sweep.config_json);
  j["grid"] = sweep.grid;
  json rows = json::array();
  for (const auto& r : sweep.rows) {
    json row;
    row["p1"] = r.p1;
    row["policy"] = r.policy;
    row["mean_lte"] = r.mean_lte;
    row["stderr"] = r.stderr_lte;
    rows.push_back(std::move(row));
  }
  j["rows"] = std::move(rows);
  return j.dump(2);
}

void write_sweep(const SweepTable& sweep, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail("io", "cannot create directory " + out_dir);
  std::string csv = "p1,policy,mean_lte,stderr\n";
  for (const auto& r : sweep.rows)
    csv += num(r.p1) + "," + r.policy + "," + num(r.mean_lte) + "," +
           num(r.stderr_lte) + "\n";
  write_file(out_dir + "/sweep.csv", csv);
  write_file(out_dir + "/sweep.json", sweep_to_json(sweep) + "\n");
}

}  // namespace pacer::xp
