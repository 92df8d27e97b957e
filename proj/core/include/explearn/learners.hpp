#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "explearn/core.hpp"

// The online-learning algorithm catalog. Every learner implements one
// contract: init(space, config, seed), predict(k) -> Prediction,
// observe(step). Observation is teacher-forced: the step carries the
// decision-maker's actual choice and reward, which the learner folds into
// its internal state regardless of what it predicted.
//
// The update rules are exposed as free functions over PolicyState so they
// can be checked against independent oracles; the Learner classes wire them
// to the trace-walking contract.

namespace explearn::learners {

struct LearnerConfig {
  double alpha = 0.1;        // learning rate
  double beta = 0.1;         // negative-reward rate (Bush-Mosteller)
  double gamma_discount = 0.9;
  double epsilon0 = 0.1;     // initial exploration rate
  double decay = 1.0;        // multiplicative epsilon decay per observation
  double epsilon_min = 0.001;
  double sigma = 0.1;        // forgetting (Roth-Erev)
  std::int64_t adapt_l = 10; // adaptive-epsilon interval (observations)
  double adapt_f = 1.0;      // adaptive-epsilon scaling
  double aspiration = 0.0;   // reward threshold for Bush-Mosteller sign
  double win_threshold = 0.0;  // WSLS: reward > threshold counts as a win
  double mortal_lifetime = 10.0;  // expected budget L (budgeted death)
  double mortal_p = 0.1;     // per-selection death probability (timed death)
  std::int64_t mortal_n = 1; // trial pulls for a fresh arm
  double mortal_keep = 0.5;  // keep an arm whose trial mean reaches this
  bool mortal_timed = false; // timed death instead of budgeted
  double eta = 0.1;          // combinatorial step size
  double gamma_mix = 0.1;    // combinatorial mixing coefficient
  double alpha_v = 0.1;      // critic rate

  void validate() const;  // throws UsageError when a rate is out of range
};

// Roth-Erev propensities are clamped at this floor so the selection
// probabilities stay a valid distribution.
inline constexpr double kPropensityFloor = 1e-6;

// Per-arm mortal-bandit bookkeeping. A dead arm re-enters as a fresh arm
// with reset statistics, so the pool size stays constant; `generation`
// counts rebirths.
struct ArmLife {
  std::int64_t budget = 0;      // remaining selections (budgeted death)
  std::int64_t pulls = 0;       // selections in the current generation
  double reward_sum = 0.0;
  bool kept = false;            // passed the n-pull trial
  bool abandoned = false;       // failed the n-pull trial
  std::int64_t generation = 0;
};

// Mutable internals shared by the catalog. Each learner uses the fields its
// rule needs; the rest stay empty.
struct PolicyState {
  std::vector<double> probs;                    // P over options
  std::map<std::string, std::vector<double>> q_table;  // state -> Q(s, .)
  std::map<std::string, double> v_table;        // state -> V(s)
  std::vector<double> propensity;               // Roth-Erev S
  std::map<std::string, std::vector<double>> logits;   // state -> logits(s, .)
  std::vector<double> subset_weights;           // w-bar over subsets
  double subset_weight_total = 0.0;             // W-bar
  std::vector<double> mean_reward;              // per-option empirical mean
  std::vector<std::int64_t> pull_count;
  std::vector<ArmLife> lifetimes;
  std::optional<std::pair<std::size_t, double>> last;  // (option, reward)
  std::vector<std::size_t> last_items;          // last observed item subset
  double epsilon_now = 0.0;
  // adaptive-epsilon window bookkeeping
  double window_sum = 0.0;
  std::int64_t window_n = 0;
  double prev_window_mean = 0.0;
  // contextual tables: context -> per-option statistics
  std::map<std::string, std::vector<double>> ctx_mean;
  std::map<std::string, std::vector<std::int64_t>> ctx_count;
};

// Inputs available to a prediction before the step is revealed: the current
// MDP state and/or the observed context. Never carries the target.
struct Query {
  std::optional<std::string> state;
  std::optional<std::string> context;
};

// ---------------------------------------------------------------------------
// Selection rules (pure: read state, draw from rng)
// ---------------------------------------------------------------------------

// Uniformly random ranking over the space's options.
Prediction random_select(const ActionSpace& space, Rng& rng, std::size_t k = 1);

// Repeat the last winning choice; otherwise switch uniformly to the others.
Prediction wsls_step(const PolicyState& st, const ActionSpace& space,
                     const LearnerConfig& cfg, Rng& rng, std::size_t k = 1);

// Rank by empirical mean reward; unobserved options count as mean 0.
Prediction greedy_select(const PolicyState& st, const ActionSpace& space,
                         Rng& rng, std::size_t k = 1);

// With probability epsilon_now rank uniformly at random, else greedily.
// epsilon == 0 consumes no randomness for the branch choice, so it is
// trace-identical to greedy_select under the same rng.
Prediction epsilon_greedy_select(const PolicyState& st, const ActionSpace& space,
                                 const LearnerConfig& cfg, Rng& rng,
                                 std::size_t k = 1);

// Epsilon-greedy over per-(context, option) means; an unseen context falls
// back to the context-free means.
Prediction contextual_select(const PolicyState& st,
                             const std::optional<std::string>& context,
                             const ActionSpace& space, const LearnerConfig& cfg,
                             Rng& rng, std::size_t k = 1);

// ---------------------------------------------------------------------------
// Update rules
// ---------------------------------------------------------------------------

// epsilon_now <- sigmoid((current window mean - previous window mean) * f).
// Called every adapt_l observations; the first window compares against 0.
void adaptive_epsilon_update(PolicyState& st, const LearnerConfig& cfg);

// Probability-matching update. Non-negative effective reward
// (reward - aspiration >= 0) moves mass toward the chosen option and
// preserves the sum exactly; the negative branch breaks normalization for
// n > 2 options and is followed by renormalization.
void bush_mosteller_update(PolicyState& st, std::size_t chosen, double reward,
                           const LearnerConfig& cfg);

// S_chosen <- S_chosen * (1 - sigma) + reward; selection probabilities are
// S_j / sum(S). Propensities are clamped at kPropensityFloor.
void roth_erev_update(PolicyState& st, std::size_t chosen, double reward,
                      const LearnerConfig& cfg);

// Q(s,a) += alpha * [r + gamma * max_a' Q(s',a') - Q(s,a)]; terminal steps
// use 0 for the bootstrap term.
void qlearning_update(PolicyState& st, const std::string& s, std::size_t a,
                      double r, const std::string& s_next, bool terminal,
                      const LearnerConfig& cfg, std::size_t n_actions);

// Q(s,a) += alpha * [r + gamma * Q(s',a') - Q(s,a)] with a' the action
// actually taken in s'.
void sarsa_update(PolicyState& st, const std::string& s, std::size_t a,
                  double r, const std::string& s_next, std::size_t a_next,
                  bool terminal, const LearnerConfig& cfg,
                  std::size_t n_actions);

struct EpisodeStep {
  std::string state;
  std::size_t action = 0;
  double reward = 0.0;
};

// Monte-Carlo policy-gradient update over a complete episode:
// logits(s_t, a) += alpha * gamma^t * G_t * (1{a == a_t} - pi(a | s_t)).
void reinforce_update(PolicyState& st, std::span<const EpisodeStep> episode,
                      const LearnerConfig& cfg, std::size_t n_actions);

// One-step actor-critic update:
// delta = r + gamma * V(s') * (1 - terminal) - V(s);
// V(s) += alpha_v * delta;
// logits(s, a') += alpha * delta * (1{a' == a} - pi(a' | s)).
void actor_critic_update(PolicyState& st, const std::string& s, std::size_t a,
                         double r, const std::string& s_next, bool terminal,
                         const LearnerConfig& cfg, std::size_t n_actions);

// Softmax policy over a state's logits (absent state -> uniform).
std::vector<double> policy_probabilities(const PolicyState& st,
                                         const std::string& state,
                                         std::size_t n_actions);

// Mortal-bandit selection: exploit a kept arm if one is alive, otherwise
// trial the freshest arm. Read-only; lifetime bookkeeping happens in
// mortal_observe.
Prediction mortal_select(const PolicyState& st, const ActionSpace& space,
                         const LearnerConfig& cfg, Rng& rng, std::size_t k = 1);

// Record a selection of `chosen`: update trial statistics, apply the
// keep/abandon rule after mortal_n pulls, and kill/respawn the arm per the
// configured death model.
void mortal_observe(PolicyState& st, std::size_t chosen, double reward,
                    const LearnerConfig& cfg, Rng& rng);

// ---------------------------------------------------------------------------
// Combinatorial bandit over fixed-size subsets
// ---------------------------------------------------------------------------

// Lexicographically ordered size-k subsets of {0, ..., n-1}.
std::vector<std::vector<std::size_t>> enumerate_subsets(std::size_t n,
                                                        std::size_t k);

// Sampling distribution p = (1 - gamma_mix) * q + gamma_mix * mu with
// q = w / W and mu uniform over all subsets.
std::vector<double> combinatorial_distribution(const PolicyState& st,
                                               const LearnerConfig& cfg);

// Exponential-weights update with importance-weighted pseudo-loss:
// w(K_t) *= exp(-eta * cost / p(K_t)); cost must lie in [0, 1].
void combinatorial_update(PolicyState& st, std::size_t subset_index,
                          double cost, const LearnerConfig& cfg);

// ---------------------------------------------------------------------------
// Learner contract
// ---------------------------------------------------------------------------

class Learner {
 public:
  virtual ~Learner() = default;

  void init(const ActionSpace& space, const LearnerConfig& cfg,
            std::uint64_t seed);

  // Side-effect free: repeated calls with the same internal state return the
  // identical Prediction. Randomness is drawn from an ephemeral generator
  // derived from (seed, observation count).
  Prediction predict(std::size_t k, const Query& query = {}) const;

  void observe(const Step& step);

  // Signals that the training prefix is complete. Episodic learners flush
  // their buffered episode here; everything else ignores it.
  virtual void end_training() {}

  // Signals the end of the session (terminal flush for bootstrapped rules).
  virtual void finish_episode() {}

  virtual std::string_view name() const = 0;

  const PolicyState& policy_state() const { return state_; }
  const LearnerConfig& config() const { return cfg_; }

 protected:
  virtual void reset() = 0;
  virtual Prediction do_predict(std::size_t k, const Query& query,
                                Rng& rng) const = 0;
  virtual void do_observe(const Step& step, Rng& rng) = 0;

  // Option index for a discrete step's action; throws ValidationError if the
  // id is unknown to the space.
  std::size_t action_index(const Step& step) const;
  // Option indices of a subset step's items (unknown ids rejected).
  std::vector<std::size_t> item_indices(const Step& step) const;

  const ActionSpace& space() const { return *space_; }

  const ActionSpace* space_ = nullptr;
  LearnerConfig cfg_;
  PolicyState state_;
  std::uint64_t seed_ = 0;
  std::uint64_t observe_count_ = 0;
};

// Catalog ids, in canonical order: random, wsls, greedy, egreedy,
// egreedy_decay, adaptive_egreedy, bush_mosteller, roth_erev, qlearn, sarsa,
// reinforce, actor_critic, mortal, mortal_timed, contextual, cmab.
std::vector<std::string> learner_ids();

// Instantiate a learner by catalog id (not yet initialized). Throws
// UsageError for unknown ids.
std::unique_ptr<Learner> make_learner(std::string_view id);

// Default hyperparameter overrides a catalog id carries (e.g. egreedy_decay
// sets decay = 0.99); applied before any grid point.
LearnerConfig default_config(std::string_view id);

}  // namespace explearn::learners
