#pragma once
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pacer/error.hpp"
#include "pacer/lv.hpp"
#include "pacer/rng.hpp"

namespace pacer::sim {

// Everything the samplers need to know about one user: dynamics constants
// (beta is the psi-weighted effective item gain), the candidate pool with its
// sampling distribution, per-candidate rate gains and true ratings.
struct UserLatent {
  lv::Params dyn;
  std::vector<std::int32_t> items;  // candidate ids, parallel arrays below
  std::vector<double> psi;
  std::vector<double> beta;    // blended per-candidate gain
  std::vector<double> rating;  // true rating, drives the stateless model
  double tau = 4;              // stateless rate scale
};

// One batch of B slots shown at time t. indicator[k] = 1 means slot k held a
// recommendation (candidate index item[k]); 0 means it was a break. Items are
// drawn for every slot so that policies with different p consume identical
// randomness.
struct Event {
  double t = 0;
  std::vector<std::int32_t> items;       // candidate indices
  std::vector<std::uint8_t> indicators;  // 1 = consumed
};

struct SeqConfig {
  int B = 10;
  double T = 100;
  double init_noise = 0.1;    // +-10% around the starting equilibrium
  double churn_floor = 1e-6;  // rate at or below this means the user is gone
  long max_events = 1000000;
  std::optional<lv::State> init_override;  // test hook: exact starting state
};

struct InteractionSequence {
  std::vector<Event> events;
  bool churned = false;
  double horizon = 0;
  int B = 0;
};

// Breaking policies choose p for the next batch and watch events go by.
class BreakingPolicy {
 public:
  virtual ~BreakingPolicy() = default;
  virtual double initial_p() const = 0;  // determines the starting equilibrium
  virtual double next_p() = 0;
  virtual void observe(const Event& e, const UserLatent& u) { (void)e; (void)u; }
  virtual void reset() {}
};

class StationaryPolicy : public BreakingPolicy {
 public:
  explicit StationaryPolicy(double p) : p_(p) {
    require(p >= 0 && p <= 1, "domain", "breaking probability outside [0,1]");
  }
  double initial_p() const override { return p_; }
  double next_p() override { return p_; }

 private:
  double p_;
};

// Deterministic rate-triggered pauses on top of a base probability: when the
// trailing mean of the last k inter-event gaps implies a rate above tau_s,
// the next batch is a full break; further triggers are suppressed for
// cooldown time units.
class SafetyPolicy : public BreakingPolicy {
 public:
  SafetyPolicy(double p_base, double tau_s, int k, double cooldown);
  double initial_p() const override { return p_base_; }
  double next_p() override;
  void observe(const Event& e, const UserLatent& u) override;
  void reset() override;

 private:
  double p_base_, tau_s_, cooldown_;
  int k_;
  std::deque<double> gaps_;
  double last_t_ = 0;
  bool have_last_ = false;
  bool pending_break_ = false;
  double cooldown_until_ = 0;
};

// Recomputes the recommendation once: applies p_init while collecting each
// consumed item's true rating with probability collect_prob (from its own
// stream, so the event randomness is untouched); at the first event at or
// after t0 the handle is asked for a new p given the mean observed rating.
// With no observations the policy keeps p_init. t0 at or past the horizon
// never triggers, reproducing the plain stationary rollout bit for bit.
class AdaptivePolicy : public BreakingPolicy {
 public:
  using Refit = std::function<double(double mean_rating, int n_ratings)>;
  AdaptivePolicy(double p_init, double t0, double collect_prob, Refit refit,
                 std::uint64_t ratings_seed);
  double initial_p() const override { return p_init_; }
  double next_p() override { return current_p_; }
  void observe(const Event& e, const UserLatent& u) override;
  void reset() override;
  bool updated() const { return updated_; }
  double current_p() const { return current_p_; }

 private:
  double p_init_, t0_, collect_prob_, current_p_;
  Refit refit_;
  std::uint64_t ratings_seed_;
  Rng ratings_rng_;
  double rating_sum_ = 0;
  int rating_n_ = 0;
  bool updated_ = false;
};

// Discrete controlled-dynamics sampler. Batches arrive at the reciprocal of
// the current rate; each batch nudges (lam, q) by an Euler step of the
// dynamics driven by the consumed slots. The sequence ends at the horizon or
// when the rate hits the churn floor (churned = true).
InteractionSequence sample_lv_sequence(const UserLatent& u, BreakingPolicy& pol,
                                       const SeqConfig& cfg, Rng& rng);

// Memoryless alternative: inter-event time is 1/(tau * mean consumed rating);
// a batch of all breaks stalls the stream forever (ends, churned = false).
InteractionSequence sample_stateless_sequence(const UserLatent& u,
                                              BreakingPolicy& pol,
                                              const SeqConfig& cfg, Rng& rng);

// Events per unit time from window_start to the horizon.
double engagement_rate(const InteractionSequence& seq, double window_start);

// CSV: "t,item_ids,indicators" with pipe-joined lists, t at 17 significant
// digits so replays compare bit for bit.
void write_sequence_csv(const InteractionSequence& seq, const std::string& path);
std::string sequence_csv(const InteractionSequence& seq);

// JSON carries the config echo and the churn flag alongside the events.
void write_sequence_json(const InteractionSequence& seq,
                         const std::string& config_echo,
                         const std::string& path);
InteractionSequence read_sequence_json(const std::string& path);

}  // namespace pacer::sim
