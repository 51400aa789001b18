#include "pacer/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace pacer::sim {

using nlohmann::json;

SafetyPolicy::SafetyPolicy(double p_base, double tau_s, int k, double cooldown)
    : p_base_(p_base), tau_s_(tau_s), cooldown_(cooldown), k_(k) {
  require(p_base >= 0 && p_base <= 1, "domain", "p_base outside [0,1]");
  require(tau_s > 0 && k >= 1 && cooldown >= 0, "config",
          "bad safety-policy parameters");
}

double SafetyPolicy::next_p() {
  if (pending_break_) {
    pending_break_ = false;
    return 1.0;
  }
  return p_base_;
}

void SafetyPolicy::observe(const Event& e, const UserLatent&) {
  if (have_last_) {
    gaps_.push_back(e.t - last_t_);
    if (static_cast<int>(gaps_.size()) > k_) gaps_.pop_front();
    if (static_cast<int>(gaps_.size()) == k_ && e.t >= cooldown_until_) {
      double mean = 0;
      for (double g : gaps_) mean += g;
      mean /= k_;
      if (mean > 0 && 1.0 / mean > tau_s_) {
        pending_break_ = true;
        cooldown_until_ = e.t + cooldown_;
      }
    }
  }
  last_t_ = e.t;
  have_last_ = true;
}

void SafetyPolicy::reset() {
  gaps_.clear();
  have_last_ = false;
  pending_break_ = false;
  cooldown_until_ = 0;
  last_t_ = 0;
}

AdaptivePolicy::AdaptivePolicy(double p_init, double t0, double collect_prob,
                               Refit refit, std::uint64_t ratings_seed)
    : p_init_(p_init),
      t0_(t0),
      collect_prob_(collect_prob),
      current_p_(p_init),
      refit_(std::move(refit)),
      ratings_seed_(ratings_seed),
      ratings_rng_(ratings_seed) {
  require(p_init >= 0 && p_init <= 1, "domain", "p_init outside [0,1]");
  require(collect_prob >= 0 && collect_prob <= 1, "domain",
          "collect_prob outside [0,1]");
  require(t0 >= 0, "domain", "t0 must be nonnegative");
}

void AdaptivePolicy::observe(const Event& e, const UserLatent& u) {
  if (updated_) return;
  if (e.t >= t0_) {
    // One-shot update from whatever was observed strictly before t0.
    if (rating_n_ > 0 && refit_)
      current_p_ = refit_(rating_sum_ / rating_n_, rating_n_);
    updated_ = true;
    return;
  }
  for (std::size_t k = 0; k < e.indicators.size(); ++k) {
    if (e.indicators[k] && ratings_rng_.bernoulli(collect_prob_)) {
      rating_sum_ += u.rating[e.items[k]];
      ++rating_n_;
    }
  }
}

void AdaptivePolicy::reset() {
  current_p_ = p_init_;
  ratings_rng_ = Rng(ratings_seed_);
  rating_sum_ = 0;
  rating_n_ = 0;
  updated_ = false;
}

namespace {

void check_user(const UserLatent& u, bool need_dyn) {
  require(!u.items.empty(), "domain", "user has no candidate items");
  require(u.psi.size() == u.items.size() && u.beta.size() == u.items.size() &&
              u.rating.size() == u.items.size(),
          "domain", "user candidate arrays disagree in length");
  if (need_dyn) u.dyn.validate();
}

void check_config(const SeqConfig& cfg) {
  require(cfg.B >= 1, "config", "batch size must be at least 1");
  require(cfg.T > 0, "config", "horizon must be positive");
  require(cfg.init_noise >= 0 && cfg.init_noise < 1, "config",
          "init_noise must lie in [0,1)");
  require(cfg.churn_floor >= 0, "config", "churn floor must be nonnegative");
}

// Candidate index from the inverse CDF of psi.
int draw_item(const UserLatent& u, Rng& rng) {
  const double x = rng.uniform();
  double acc = 0;
  for (std::size_t c = 0; c + 1 < u.psi.size(); ++c) {
    acc += u.psi[c];
    if (x < acc) return static_cast<int>(c);
  }
  return static_cast<int>(u.psi.size()) - 1;
}

Event draw_batch(const UserLatent& u, double p, int B, double t, Rng& rng) {
  Event e;
  e.t = t;
  e.items.resize(B);
  e.indicators.resize(B);
  for (int k = 0; k < B; ++k) {
    e.indicators[k] = rng.bernoulli(1.0 - p) ? 1 : 0;
    e.items[k] = draw_item(u, rng);
  }
  return e;
}

}  // namespace

InteractionSequence sample_lv_sequence(const UserLatent& u, BreakingPolicy& pol,
                                       const SeqConfig& cfg, Rng& rng) {
  check_user(u, true);
  check_config(cfg);
  pol.reset();

  InteractionSequence seq;
  seq.horizon = cfg.T;
  seq.B = cfg.B;

  double lam, q;
  if (cfg.init_override) {
    lam = cfg.init_override->lam;
    q = cfg.init_override->q;
    require(lam >= 0 && q >= 0 && q <= 1, "domain",
            "initial state outside lam >= 0, q in [0,1]");
  } else {
    const lv::Equilibrium eq = lv::equilibrium(u.dyn, pol.initial_p());
    lam = eq.lam * (1.0 + rng.uniform(-cfg.init_noise, cfg.init_noise));
    q = eq.q * (1.0 + rng.uniform(-cfg.init_noise, cfg.init_noise));
    q = std::clamp(q, 0.0, 1.0);
  }

  double t = 0;
  while (t < cfg.T) {
    if (!std::isfinite(lam) || lam <= cfg.churn_floor) {
      seq.churned = true;
      break;
    }
    if (static_cast<long>(seq.events.size()) >= cfg.max_events)
      fail("numeric", "event cap exceeded; rate runaway?");
    const double p = pol.next_p();
    Event e = draw_batch(u, p, cfg.B, t, rng);

    double consumed_beta = 0;
    int consumed = 0;
    for (int k = 0; k < cfg.B; ++k) {
      if (e.indicators[k]) {
        consumed_beta += u.beta[e.items[k]];
        ++consumed;
      }
    }
    consumed_beta /= cfg.B;
    const double consumed_delta = u.dyn.delta * consumed / cfg.B;

    // Euler step over one inter-event interval dt = 1/lam; the lam factor in
    // the drift cancels against dt, q is clamped to its range.
    const double lam_next = lam + (-u.dyn.alpha + consumed_beta * q);
    double q_next = q + (u.dyn.gamma * (1.0 - q) - consumed_delta * lam) * q / lam;
    q_next = std::clamp(q_next, 0.0, 1.0);

    seq.events.push_back(std::move(e));
    pol.observe(seq.events.back(), u);

    if (!std::isfinite(lam_next) || lam_next <= cfg.churn_floor) {
      seq.churned = true;
      break;
    }
    t += 1.0 / lam_next;
    lam = lam_next;
    q = q_next;
  }
  return seq;
}

InteractionSequence sample_stateless_sequence(const UserLatent& u,
                                              BreakingPolicy& pol,
                                              const SeqConfig& cfg, Rng& rng) {
  check_user(u, false);
  check_config(cfg);
  require(u.tau > 0, "config", "stateless rate scale tau must be positive");
  pol.reset();

  InteractionSequence seq;
  seq.horizon = cfg.T;
  seq.B = cfg.B;

  double t = 0;
  while (t < cfg.T) {
    if (static_cast<long>(seq.events.size()) >= cfg.max_events)
      fail("numeric", "event cap exceeded; rate runaway?");
    const double p = pol.next_p();
    Event e = draw_batch(u, p, cfg.B, t, rng);

    double consumed_rating = 0;
    for (int k = 0; k < cfg.B; ++k)
      if (e.indicators[k]) consumed_rating += u.rating[e.items[k]];
    consumed_rating /= cfg.B;

    seq.events.push_back(std::move(e));
    pol.observe(seq.events.back(), u);

    if (consumed_rating <= 0) break;  // all breaks: the stream stalls forever
    t += 1.0 / (u.tau * consumed_rating);
  }
  return seq;
}

double engagement_rate(const InteractionSequence& seq, double window_start) {
  require(window_start >= 0 && window_start < seq.horizon, "domain",
          "window start must lie inside the horizon");
  long n = 0;
  for (const auto& e : seq.events)
    if (e.t >= window_start) ++n;
  return static_cast<double>(n) / (seq.horizon - window_start);
}

namespace {

std::string fmt_t(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", t);
  return buf;
}

template <typename T>
std::string join_pipe(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(static_cast<long long>(v[i]));
  }
  return out;
}

}  // namespace

std::string sequence_csv(const InteractionSequence& seq) {
  std::string out = "t,item_ids,indicators\n";
  for (const auto& e : seq.events) {
    out += fmt_t(e.t);
    out += ',';
    out += join_pipe(e.items);
    out += ',';
    out += join_pipe(e.indicators);
    out += '\n';
  }
  return out;
}

void write_sequence_csv(const InteractionSequence& seq, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("io", "cannot write " + path);
  out << sequence_csv(seq);
}

void write_sequence_json(const InteractionSequence& seq,
                         const std::string& config_echo,
                         const std::string& path) {
  json j;
  j["format"] = "pacer-sequence";
  j["version"] = 1;
  j["horizon"] = seq.horizon;
  j["B"] = seq.B;
  j["churned"] = seq.churned;
  if (!config_echo.empty()) j["config"] = json::parse(config_echo);
  json events = json::array();
  for (const auto& e : seq.events) {
    json je;
    je["t"] = e.t;
    je["items"] = e.items;
    je["indicators"] = e.indicators;
    events.push_back(std::move(je));
  }
  j["events"] = std::move(events);
  std::ofstream out(path);
  if (!out) fail("io", "cannot write " + path);
  out << j.dump(2) << "\n";
}

InteractionSequence read_sequence_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("io", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail("data", "bad sequence file: " + std::string(e.what()));
  }
  if (j.value("format", "") != "pacer-sequence" || j.value("version", 0) != 1)
    fail("data", "unrecognized sequence format");
  InteractionSequence seq;
  seq.horizon = j.at("horizon").get<double>();
  seq.B = j.at("B").get<int>();
  seq.churned = j.at("churned").get<bool>();
  for (const auto& je : j.at("events")) {
    Event e;
    e.t = je.at("t").get<double>();
    e.items = je.at("items").get<std::vector<std::int32_t>>();
    e.indicators = je.at("indicators").get<std::vector<std::uint8_t>>();
    seq.events.push_back(std::move(e));
  }
  return seq;
}

}  // namespace pacer::sim
