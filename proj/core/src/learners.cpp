#include "explearn/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace explearn::learners {

namespace {

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw UsageError(std::string(name) + " must lie in [0, 1]");
  }
}

// Ranking helper: indices sorted by score descending, ties broken uniformly
// at random. Returns a full permutation of 0..n-1.
std::vector<std::size_t> rank_indices(std::span<const double> scores,
                                      Rng& rng) {
  std::vector<std::pair<double, std::uint64_t>> keys(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    keys[i] = {scores[i], rng.next_u64()};
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (keys[a].first != keys[b].first) return keys[a].first > keys[b].first;
    return keys[a].second < keys[b].second;
  });
  return order;
}

Prediction from_order(const ActionSpace& space,
                      const std::vector<std::size_t>& order,
                      std::span<const double> scores, std::size_t k) {
  const auto& opts = space.options();
  if (k == 0 || k > opts.size()) {
    throw UsageError("predict: k must lie in [1, n_options]");
  }
  Prediction p;
  p.k = k;
  p.ranked.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    p.ranked.emplace_back(opts[order[i]], scores[order[i]]);
  }
  return p;
}

// Position-based scores for permutation rankings (non-increasing by rank).
std::vector<double> positional_scores(const std::vector<std::size_t>& order) {
  const double n = static_cast<double>(order.size());
  std::vector<double> s(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    s[order[pos]] = (n - static_cast<double>(pos)) / n;
  }
  return s;
}

std::vector<double> means_or_zero(const PolicyState& st, std::size_t n) {
  if (st.mean_reward.size() == n) return st.mean_reward;
  return std::vector<double>(n, 0.0);
}

Prediction rank_by(const ActionSpace& space, std::span<const double> scores,
                   Rng& rng, std::size_t k) {
  auto order = rank_indices(scores, rng);
  return from_order(space, order, scores, k);
}

Prediction uniform_ranking(const ActionSpace& space, Rng& rng, std::size_t k) {
  std::vector<std::size_t> order(space.n_options());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  auto scores = positional_scores(order);
  return from_order(space, order, scores, k);
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void ensure_option_stats(PolicyState& st, std::size_t n) {
  if (st.mean_reward.size() != n) st.mean_reward.assign(n, 0.0);
  if (st.pull_count.size() != n) st.pull_count.assign(n, 0);
}

void update_mean(PolicyState& st, std::size_t idx, double reward) {
  st.pull_count[idx] += 1;
  const double c = static_cast<double>(st.pull_count[idx]);
  st.mean_reward[idx] += (reward - st.mean_reward[idx]) / c;
}

std::vector<double>& state_row(std::map<std::string, std::vector<double>>& tbl,
                               const std::string& s, std::size_t n) {
  auto& row = tbl[s];
  if (row.size() != n) row.assign(n, 0.0);
  return row;
}

}  // namespace

void LearnerConfig::validate() const {
  check_rate(alpha, "alpha");
  check_rate(beta, "beta");
  check_rate(gamma_discount, "gamma_discount");
  check_rate(epsilon0, "epsilon0");
  check_rate(epsilon_min, "epsilon_min");
  check_rate(sigma, "sigma");
  check_rate(alpha_v, "alpha_v");
  check_rate(gamma_mix, "gamma_mix");
  if (!(decay > 0.0 && decay <= 1.0)) {
    throw UsageError("decay must lie in (0, 1]");
  }
  if (adapt_l <= 0) throw UsageError("adapt_l must be positive");
  if (!(adapt_f > 0.0)) throw UsageError("adapt_f must be positive");
  if (!(mortal_lifetime >= 1.0)) {
    throw UsageError("mortal_lifetime must be >= 1");
  }
  if (!(mortal_p > 0.0 && mortal_p <= 1.0)) {
    throw UsageError("mortal_p must lie in (0, 1]");
  }
  if (mortal_n <= 0) throw UsageError("mortal_n must be positive");
  if (!(eta > 0.0)) throw UsageError("eta must be positive");
}

// ---------------------------------------------------------------------------
// Selection rules
// ---------------------------------------------------------------------------

Prediction random_select(const ActionSpace& space, Rng& rng, std::size_t k) {
  return uniform_ranking(space, rng, k);
}

Prediction wsls_step(const PolicyState& st, const ActionSpace& space,
                     const LearnerConfig& cfg, Rng& rng, std::size_t k) {
  const std::size_t n = space.n_options();
  if (!st.last.has_value()) {
    return uniform_ranking(space, rng, k);
  }
  const double last_reward = st.last->second;
  const bool won = last_reward > cfg.win_threshold;

  std::vector<char> was_last(n, 0);
  if (!st.last_items.empty()) {
    for (std::size_t i : st.last_items) was_last[i] = 1;
  } else {
    was_last[st.last->first] = 1;
  }

  std::vector<std::size_t> last_set, others;
  for (std::size_t i = 0; i < n; ++i) {
    (was_last[i] ? last_set : others).push_back(i);
  }
  rng.shuffle(last_set);
  rng.shuffle(others);

  std::vector<std::size_t> order;
  order.reserve(n);
  if (won) {
    order.insert(order.end(), last_set.begin(), last_set.end());
    order.insert(order.end(), others.begin(), others.end());
  } else {
    order.insert(order.end(), others.begin(), others.end());
    order.insert(order.end(), last_set.begin(), last_set.end());
  }
  auto scores = positional_scores(order);
  return from_order(space, order, scores, k);
}

Prediction greedy_select(const PolicyState& st, const ActionSpace& space,
                         Rng& rng, std::size_t k) {
  auto means = means_or_zero(st, space.n_options());
  return rank_by(space, means, rng, k);
}

Prediction epsilon_greedy_select(const PolicyState& st,
                                 const ActionSpace& space,
                                 const LearnerConfig& cfg, Rng& rng,
                                 std::size_t k) {
  (void)cfg;
  const double eps = st.epsilon_now;
  if (eps > 0.0 && rng.uniform() < eps) {
    return uniform_ranking(space, rng, k);
  }
  return greedy_select(st, space, rng, k);
}

Prediction contextual_select(const PolicyState& st,
                             const std::optional<std::string>& context,
                             const ActionSpace& space, const LearnerConfig& cfg,
                             Rng& rng, std::size_t k) {
  (void)cfg;
  const std::size_t n = space.n_options();
  const double eps = st.epsilon_now;
  if (eps > 0.0 && rng.uniform() < eps) {
    return uniform_ranking(space, rng, k);
  }
  if (context.has_value()) {
    auto it = st.ctx_mean.find(*context);
    if (it != st.ctx_mean.end() && it->second.size() == n) {
      return rank_by(space, it->second, rng, k);
    }
  }
  return rank_by(space, means_or_zero(st, n), rng, k);
}

// ---------------------------------------------------------------------------
// Update rules
// ---------------------------------------------------------------------------

void adaptive_epsilon_update(PolicyState& st, const LearnerConfig& cfg) {
  const double current =
      st.window_n > 0 ? st.window_sum / static_cast<double>(st.window_n) : 0.0;
  const double delta = (current - st.prev_window_mean) * cfg.adapt_f;
  st.epsilon_now = sigmoid(delta);
  st.prev_window_mean = current;
  st.window_sum = 0.0;
  st.window_n = 0;
}

void bush_mosteller_update(PolicyState& st, std::size_t chosen, double reward,
                           const LearnerConfig& cfg) {
  const std::size_t n = st.probs.size();
  if (chosen >= n) throw UsageError("bush_mosteller_update: bad option index");
  const double r_eff = reward - cfg.aspiration;
  if (r_eff >= 0.0) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == chosen) {
        st.probs[j] += cfg.alpha * (1.0 - st.probs[j]);
      } else {
        st.probs[j] -= cfg.alpha * st.probs[j];
      }
    }
    // sum preserved exactly: (1 - alpha) * sum + alpha
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == chosen) {
        st.probs[j] -= cfg.beta * st.probs[j];
      } else {
        st.probs[j] += cfg.beta * (1.0 - st.probs[j]);
      }
    }
    // the negative branch inflates the sum for n > 2; renormalize
    const double sum = std::accumulate(st.probs.begin(), st.probs.end(), 0.0);
    if (sum > 0.0) {
      for (double& p : st.probs) p /= sum;
    }
  }
}

void roth_erev_update(PolicyState& st, std::size_t chosen, double reward,
                      const LearnerConfig& cfg) {
  if (chosen >= st.propensity.size()) {
    throw UsageError("roth_erev_update: bad option index");
  }
  double s = st.propensity[chosen] * (1.0 - cfg.sigma) + reward;
  if (s < kPropensityFloor) s = kPropensityFloor;
  st.propensity[chosen] = s;
}

void qlearning_update(PolicyState& st, const std::string& s, std::size_t a,
                      double r, const std::string& s_next, bool terminal,
                      const LearnerConfig& cfg, std::size_t n_actions) {
  auto& row = state_row(st.q_table, s, n_actions);
  double best_next = 0.0;
  if (!terminal) {
    const auto& next = state_row(st.q_table, s_next, n_actions);
    best_next = *std::max_element(next.begin(), next.end());
  }
  row[a] += cfg.alpha * (r + cfg.gamma_discount * best_next - row[a]);
}

void sarsa_update(PolicyState& st, const std::string& s, std::size_t a,
                  double r, const std::string& s_next, std::size_t a_next,
                  bool terminal, const LearnerConfig& cfg,
                  std::size_t n_actions) {
  auto& row = state_row(st.q_table, s, n_actions);
  double q_next = 0.0;
  if (!terminal) {
    q_next = state_row(st.q_table, s_next, n_actions)[a_next];
  }
  row[a] += cfg.alpha * (r + cfg.gamma_discount * q_next - row[a]);
}

std::vector<double> policy_probabilities(const PolicyState& st,
                                         const std::string& state,
                                         std::size_t n_actions) {
  auto it = st.logits.find(state);
  if (it == st.logits.end() || it->second.size() != n_actions) {
    return std::vector<double>(n_actions, 1.0 / static_cast<double>(n_actions));
  }
  return softmax(it->second);
}

void reinforce_update(PolicyState& st, std::span<const EpisodeStep> episode,
                      const LearnerConfig& cfg, std::size_t n_actions) {
  if (episode.empty()) return;
  // discounted returns G_t, computed backward
  std::vector<double> returns(episode.size());
  double g = 0.0;
  for (std::size_t i = episode.size(); i-- > 0;) {
    g = episode[i].reward + cfg.gamma_discount * g;
    returns[i] = g;
  }
  double discount = 1.0;  // gamma^t
  for (std::size_t t = 0; t < episode.size(); ++t) {
    const EpisodeStep& step = episode[t];
    auto& row = state_row(st.logits, step.state, n_actions);
    const auto pi = softmax(row);
    const double weight = cfg.alpha * discount * returns[t];
    for (std::size_t a = 0; a < n_actions; ++a) {
      const double indicator = (a == step.action) ? 1.0 : 0.0;
      row[a] += weight * (indicator - pi[a]);
    }
    discount *= cfg.gamma_discount;
  }
}

void actor_critic_update(PolicyState& st, const std::string& s, std::size_t a,
                         double r, const std::string& s_next, bool terminal,
                         const LearnerConfig& cfg, std::size_t n_actions) {
  const double v_next = terminal ? 0.0 : st.v_table[s_next];
  const double delta = r + cfg.gamma_discount * v_next - st.v_table[s];
  st.v_table[s] += cfg.alpha_v * delta;
  auto& row = state_row(st.logits, s, n_actions);
  const auto pi = softmax(row);
  for (std::size_t j = 0; j < n_actions; ++j) {
    const double indicator = (j == a) ? 1.0 : 0.0;
    row[j] += cfg.alpha * delta * (indicator - pi[j]);
  }
}

Prediction mortal_select(const PolicyState& st, const ActionSpace& space,
                         const LearnerConfig& cfg, Rng& rng, std::size_t k) {
  (void)cfg;
  const std::size_t n = space.n_options();
  if (st.lifetimes.size() != n) {
    return uniform_ranking(space, rng, k);
  }
  // exploit: kept arms ranked by trial mean
  std::vector<double> scores(n, 0.0);
  bool any_kept = false;
  bool any_fresh = false;
  for (std::size_t i = 0; i < n; ++i) {
    const ArmLife& al = st.lifetimes[i];
    if (al.kept) any_kept = true;
    if (!al.kept && !al.abandoned) any_fresh = true;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const ArmLife& al = st.lifetimes[i];
    const double mean =
        al.pulls > 0 ? al.reward_sum / static_cast<double>(al.pulls) : 0.0;
    if (any_kept) {
      scores[i] = al.kept ? 2.0 + mean : mean;
    } else if (any_fresh) {
      // trial: prefer fresh arms, favoring the least pulled
      scores[i] = (!al.kept && !al.abandoned)
                      ? 2.0 - static_cast<double>(al.pulls) * 1e-3
                      : mean;
    } else {
      // everything abandoned: fall back to empirical means (re-trial)
      scores[i] = mean;
    }
  }
  return rank_by(space, scores, rng, k);
}

void mortal_observe(PolicyState& st, std::size_t chosen, double reward,
                    const LearnerConfig& cfg, Rng& rng) {
  if (chosen >= st.lifetimes.size()) {
    throw UsageError("mortal_observe: bad option index");
  }
  ArmLife& al = st.lifetimes[chosen];
  al.pulls += 1;
  al.reward_sum += reward;
  if (!al.kept && !al.abandoned && al.pulls >= cfg.mortal_n) {
    const double mean = al.reward_sum / static_cast<double>(al.pulls);
    if (mean >= cfg.mortal_keep) {
      al.kept = true;
    } else {
      al.abandoned = true;
    }
  }
  bool dies = false;
  if (cfg.mortal_timed) {
    dies = rng.bernoulli(cfg.mortal_p);
  } else {
    dies = al.pulls >= al.budget;
  }
  if (dies) {
    // the arm re-enters as a fresh arm with reset statistics
    ArmLife fresh;
    fresh.generation = al.generation + 1;
    fresh.budget =
        cfg.mortal_timed ? 0 : rng.geometric(1.0 / cfg.mortal_lifetime);
    al = fresh;
  }
}

std::vector<std::vector<std::size_t>> enumerate_subsets(std::size_t n,
                                                        std::size_t k) {
  std::vector<std::vector<std::size_t>> out;
  if (k == 0 || k > n) return out;
  std::vector<std::size_t> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    // advance to the next lexicographic combination
    std::size_t i = k;
    while (i-- > 0) {
      if (cur[i] != i + n - k) {
        ++cur[i];
        for (std::size_t j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
        break;
      }
      if (i == 0) return out;
    }
  }
}

std::vector<double> combinatorial_distribution(const PolicyState& st,
                                               const LearnerConfig& cfg) {
  const std::size_t c = st.subset_weights.size();
  if (c == 0) throw UsageError("combinatorial_distribution: no subsets");
  const double total = st.subset_weight_total;
  std::vector<double> p(c);
  const double uniform = 1.0 / static_cast<double>(c);
  for (std::size_t i = 0; i < c; ++i) {
    const double q = total > 0.0 ? st.subset_weights[i] / total : uniform;
    p[i] = (1.0 - cfg.gamma_mix) * q + cfg.gamma_mix * uniform;
  }
  return p;
}

void combinatorial_update(PolicyState& st, std::size_t subset_index,
                          double cost, const LearnerConfig& cfg) {
  if (subset_index >= st.subset_weights.size()) {
    throw UsageError("combinatorial_update: bad subset index");
  }
  if (!(cost >= 0.0 && cost <= 1.0)) {
    throw UsageError("combinatorial_update: cost must lie in [0, 1]");
  }
  const auto p = combinatorial_distribution(st, cfg);
  const double pk = p[subset_index];
  if (!(pk > 0.0)) {
    throw std::logic_error(
        "combinatorial_update: sampled subset has zero probability");
  }
  const double pseudo_loss = cost / pk;
  st.subset_weights[subset_index] *= std::exp(-cfg.eta * pseudo_loss);
  double total = 0.0;
  double mx = 0.0;
  for (double w : st.subset_weights) {
    total += w;
    mx = std::max(mx, w);
  }
  // rescale when the weights underflow toward zero; q = w / W is unchanged
  if (mx > 0.0 && mx < 1e-100) {
    const double scale = 1.0 / mx;
    total = 0.0;
    for (double& w : st.subset_weights) {
      w *= scale;
      total += w;
    }
  }
  st.subset_weight_total = total;
}

// ---------------------------------------------------------------------------
// Learner base
// ---------------------------------------------------------------------------

void Learner::init(const ActionSpace& space, const LearnerConfig& cfg,
                   std::uint64_t seed) {
  cfg.validate();
  space_ = &space;
  cfg_ = cfg;
  seed_ = seed;
  observe_count_ = 0;
  state_ = PolicyState{};
  state_.epsilon_now = cfg.epsilon0;
  ensure_option_stats(state_, space.n_options());
  reset();
}

Prediction Learner::predict(std::size_t k, const Query& query) const {
  if (space_ == nullptr) throw UsageError("learner used before init()");
  Rng rng(Rng::derive(seed_, 2 * observe_count_));
  return do_predict(k, query, rng);
}

void Learner::observe(const Step& step) {
  if (space_ == nullptr) throw UsageError("learner used before init()");
  ++observe_count_;
  Rng rng(Rng::derive(seed_, 2 * observe_count_ + 1));
  do_observe(step, rng);
}

std::size_t Learner::action_index(const Step& step) const {
  auto idx = space_->index_of(step.action);
  if (!idx.has_value()) {
    throw ValidationError("unknown action id: " + step.action);
  }
  return *idx;
}

std::vector<std::size_t> Learner::item_indices(const Step& step) const {
  std::vector<std::size_t> out;
  if (step.items.has_value()) {
    out.reserve(step.items->size());
    for (const auto& id : *step.items) {
      auto idx = space_->index_of(id);
      if (!idx.has_value()) {
        throw ValidationError("unknown item id: " + id);
      }
      out.push_back(*idx);
    }
  } else if (!step.action.empty()) {
    out.push_back(action_index(step));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

namespace {

class RandomLearner final : public Learner {
 public:
  std::string_view name() const override { return "random"; }

 protected:
  void reset() override {}
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return random_select(space(), rng, k);
  }
  void do_observe(const Step&, Rng&) override {}
};

class WslsLearner final : public Learner {
 public:
  std::string_view name() const override { return "wsls"; }

 protected:
  void reset() override {}
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return wsls_step(state_, space(), cfg_, rng, k);
  }
  void do_observe(const Step& step, Rng&) override {
    auto chosen = item_indices(step);
    if (chosen.empty()) return;
    state_.last = std::make_pair(chosen.front(), step.reward);
    state_.last_items = chosen.size() > 1 ? chosen
                                          : std::vector<std::size_t>{};
  }
};

class GreedyLearner final : public Learner {
 public:
  std::string_view name() const override { return "greedy"; }

 protected:
  void reset() override {}
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return greedy_select(state_, space(), rng, k);
  }
  void do_observe(const Step& step, Rng&) override {
    for (std::size_t i : item_indices(step)) {
      update_mean(state_, i, step.reward);
    }
  }
};

class EpsilonGreedyLearner final : public Learner {
 public:
  std::string_view name() const override { return "egreedy"; }

 protected:
  void reset() override {}
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return epsilon_greedy_select(state_, space(), cfg_, rng, k);
  }
  void do_observe(const Step& step, Rng&) override {
    for (std::size_t i : item_indices(step)) {
      update_mean(state_, i, step.reward);
    }
    state_.epsilon_now =
        std::max(cfg_.epsilon_min, state_.epsilon_now * cfg_.decay);
  }
};

class AdaptiveEpsilonGreedyLearner final : public Learner {
 public:
  std::string_view name() const override { return "adaptive_egreedy"; }

 protected:
  void reset() override {}
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return epsilon_greedy_select(state_, space(), cfg_, rng, k);
  }
  void do_observe(const Step& step, Rng&) override {
    for (std::size_t i : item_indices(step)) {
      update_mean(state_, i, step.reward);
    }
    state_.window_sum += step.reward;
    state_.window_n += 1;
    if (state_.window_n >= cfg_.adapt_l) {
      adaptive_epsilon_update(state_, cfg_);
    }
  }
};

class BushMostellerLearner final : public Learner {
 public:
  std::string_view name() const override { return "bush_mosteller"; }

 protected:
  void reset() override {
    state_.probs.assign(space().n_options(),
                        1.0 / static_cast<double>(space().n_options()));
  }
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return rank_by(space(), state_.probs, rng, k);
  }
  void do_observe(const Step& step, Rng&) override {
    for (std::size_t i : item_indices(step)) {
      bush_mosteller_update(state_, i, step.reward, cfg_);
    }
  }
};

class RothErevLearner final : public Learner {
 public:
  std::string_view name() const override { return "roth_erev"; }

 protected:
  void reset() override {
    state_.propensity.assign(space().n_options(), 1.0);
  }
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return rank_by(space(), state_.propensity, rng, k);
  }
  void do_observe(const Step& step, Rng&) override {
    for (std::size_t i : item_indices(step)) {
      roth_erev_update(state_, i, step.reward, cfg_);
    }
  }
};

// Shared walk logic for the bootstrapped value learners: observations are
// buffered one step so the update can see the successor state. Stateless
// steps use a single implicit state, which reduces these rules to their
// bandit form.
class TdLearnerBase : public Learner {
 public:
  void finish_episode() override {
    if (pending_.has_value()) {
      flush(*pending_, "", 0, true);
      pending_.reset();
    }
  }

 protected:
  struct Pending {
    std::string state;
    std::size_t action = 0;
    double reward = 0.0;
  };

  void reset() override { pending_.reset(); }

  Prediction do_predict(std::size_t k, const Query& query,
                        Rng& rng) const override {
    const auto scores = state_scores(query.state.value_or(""));
    const double eps = state_.epsilon_now;
    if (eps > 0.0 && rng.uniform() < eps) {
      return uniform_ranking(space(), rng, k);
    }
    return rank_by(space(), scores, rng, k);
  }

  void do_observe(const Step& step, Rng&) override {
    const std::string state = step.state.value_or("");
    const std::size_t a = action_index(step);
    if (pending_.has_value()) {
      flush(*pending_, state, a, false);
    }
    pending_ = Pending{state, a, step.reward};
  }

  virtual void flush(const Pending& p, const std::string& s_next,
                     std::size_t a_next, bool terminal) = 0;
  virtual std::vector<double> state_scores(const std::string& s) const = 0;

  std::vector<double> q_row_or_zero(const std::string& s) const {
    auto it = state_.q_table.find(s);
    if (it != state_.q_table.end() && it->second.size() == space().n_options())
      return it->second;
    return std::vector<double>(space().n_options(), 0.0);
  }

  std::optional<Pending> pending_;
};

class QLearnLearner final : public TdLearnerBase {
 public:
  std::string_view name() const override { return "qlearn"; }

 protected:
  void flush(const Pending& p, const std::string& s_next, std::size_t,
             bool terminal) override {
    qlearning_update(state_, p.state, p.action, p.reward, s_next, terminal,
                     cfg_, space().n_options());
  }
  std::vector<double> state_scores(const std::string& s) const override {
    return q_row_or_zero(s);
  }
};

class SarsaLearner final : public TdLearnerBase {
 public:
  std::string_view name() const override { return "sarsa"; }

 protected:
  void flush(const Pending& p, const std::string& s_next, std::size_t a_next,
             bool terminal) override {
    sarsa_update(state_, p.state, p.action, p.reward, s_next, a_next, terminal,
                 cfg_, space().n_options());
  }
  std::vector<double> state_scores(const std::string& s) const override {
    return q_row_or_zero(s);
  }
};

class ReinforceLearner final : public Learner {
 public:
  std::string_view name() const override { return "reinforce"; }

  void end_training() override { flush(); }
  void finish_episode() override { flush(); }

 protected:
  void reset() override { episode_.clear(); }

  Prediction do_predict(std::size_t k, const Query& query,
                        Rng& rng) const override {
    const auto pi = policy_probabilities(state_, query.state.value_or(""),
                                         space().n_options());
    return rank_by(space(), pi, rng, k);
  }

  void do_observe(const Step& step, Rng&) override {
    episode_.push_back(
        {step.state.value_or(""), action_index(step), step.reward});
  }

 private:
  void flush() {
    reinforce_update(state_, episode_, cfg_, space().n_options());
    episode_.clear();
  }

  std::vector<EpisodeStep> episode_;
};

class ActorCriticLearner final : public Learner {
 public:
  std::string_view name() const override { return "actor_critic"; }

  void finish_episode() override {
    if (pending_.has_value()) {
      actor_critic_update(state_, pending_->state, pending_->action,
                          pending_->reward, "", true, cfg_,
                          space().n_options());
      pending_.reset();
    }
  }

 protected:
  void reset() override { pending_.reset(); }

  Prediction do_predict(std::size_t k, const Query& query,
                        Rng& rng) const override {
    const auto pi = policy_probabilities(state_, query.state.value_or(""),
                                         space().n_options());
    return rank_by(space(), pi, rng, k);
  }

  void do_observe(const Step& step, Rng&) override {
    const std::string state = step.state.value_or("");
    const std::size_t a = action_index(step);
    if (pending_.has_value()) {
      actor_critic_update(state_, pending_->state, pending_->action,
                          pending_->reward, state, false, cfg_,
                          space().n_options());
    }
    pending_ = EpisodeStep{state, a, step.reward};
  }

 private:
  std::optional<EpisodeStep> pending_;
};

class MortalLearner final : public Learner {
 public:
  std::string_view name() const override { return "mortal"; }

 protected:
  void reset() override {
    Rng rng(Rng::derive(seed_, 0x6d6f7274616cull));  // birth lifetimes
    state_.lifetimes.assign(space().n_options(), ArmLife{});
    for (auto& al : state_.lifetimes) {
      al.budget =
          cfg_.mortal_timed ? 0 : rng.geometric(1.0 / cfg_.mortal_lifetime);
    }
  }
  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    return mortal_select(state_, space(), cfg_, rng, k);
  }
  void do_observe(const Step& step, Rng& rng) override {
    for (std::size_t i : item_indices(step)) {
      update_mean(state_, i, step.reward);
      mortal_observe(state_, i, step.reward, cfg_, rng);
    }
  }
};

class ContextualLearner final : public Learner {
 public:
  std::string_view name() const override { return "contextual"; }

 protected:
  void reset() override {}
  Prediction do_predict(std::size_t k, const Query& query,
                        Rng& rng) const override {
    return contextual_select(state_, query.context, space(), cfg_, rng, k);
  }
  void do_observe(const Step& step, Rng&) override {
    const std::size_t n = space().n_options();
    for (std::size_t i : item_indices(step)) {
      update_mean(state_, i, step.reward);
      if (step.context.has_value()) {
        auto& mean = state_.ctx_mean[*step.context];
        auto& count = state_.ctx_count[*step.context];
        if (mean.size() != n) mean.assign(n, 0.0);
        if (count.size() != n) count.assign(n, 0);
        count[i] += 1;
        mean[i] += (step.reward - mean[i]) / static_cast<double>(count[i]);
      }
    }
  }
};

class CombinatorialLearner final : public Learner {
 public:
  std::string_view name() const override { return "cmab"; }

 protected:
  void reset() override {
    if (space().kind != ActionSpace::Kind::subset) {
      throw UsageError("cmab requires a subset action space");
    }
    if (space().item_universe.size() < space().subset_size) {
      throw UsageError("cmab: item universe smaller than subset size");
    }
    subsets_ = enumerate_subsets(space().item_universe.size(),
                                 space().subset_size);
    index_of_.clear();
    for (std::size_t i = 0; i < subsets_.size(); ++i) {
      index_of_[subsets_[i]] = i;
    }
    state_.subset_weights.assign(subsets_.size(), 1.0);
    state_.subset_weight_total = static_cast<double>(subsets_.size());
  }

  Prediction do_predict(std::size_t k, const Query&, Rng& rng) const override {
    const std::size_t ss = space().subset_size;
    if (k > ss) {
      throw UsageError("cmab predicts at most subset_size items");
    }
    const auto p = combinatorial_distribution(state_, cfg_);
    double u = rng.uniform();
    std::size_t pick = p.size() - 1;
    for (std::size_t i = 0; i < p.size(); ++i) {
      u -= p[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    Prediction pred;
    pred.k = k;
    for (std::size_t j = 0; j < k; ++j) {
      pred.ranked.emplace_back(space().item_universe[subsets_[pick][j]],
                               p[pick]);
    }
    return pred;
  }

  void do_observe(const Step& step, Rng&) override {
    auto chosen = item_indices(step);
    const std::size_t ss = space().subset_size;
    if (chosen.size() < ss) return;  // no size-ss proxy subset to credit
    std::sort(chosen.begin(), chosen.end());
    chosen.resize(ss);
    auto it = index_of_.find(chosen);
    if (it == index_of_.end()) return;
    const double capped =
        std::clamp(step.reward, 0.0, static_cast<double>(ss));
    const double cost = 1.0 - capped / static_cast<double>(ss);
    combinatorial_update(state_, it->second, cost, cfg_);
  }

 private:
  std::vector<std::vector<std::size_t>> subsets_;
  std::map<std::vector<std::size_t>, std::size_t> index_of_;
};

}  // namespace

std::vector<std::string> learner_ids() {
  return {"random",       "wsls",         "greedy",
          "egreedy",      "egreedy_decay", "adaptive_egreedy",
          "bush_mosteller", "roth_erev",  "qlearn",
          "sarsa",        "reinforce",    "actor_critic",
          "mortal",       "mortal_timed", "contextual",
          "cmab"};
}

std::unique_ptr<Learner> make_learner(std::string_view id) {
  if (id == "random") return std::make_unique<RandomLearner>();
  if (id == "wsls") return std::make_unique<WslsLearner>();
  if (id == "greedy") return std::make_unique<GreedyLearner>();
  if (id == "egreedy" || id == "egreedy_decay") {
    return std::make_unique<EpsilonGreedyLearner>();
  }
  if (id == "adaptive_egreedy") {
    return std::make_unique<AdaptiveEpsilonGreedyLearner>();
  }
  if (id == "bush_mosteller") return std::make_unique<BushMostellerLearner>();
  if (id == "roth_erev") return std::make_unique<RothErevLearner>();
  if (id == "qlearn") return std::make_unique<QLearnLearner>();
  if (id == "sarsa") return std::make_unique<SarsaLearner>();
  if (id == "reinforce") return std::make_unique<ReinforceLearner>();
  if (id == "actor_critic") return std::make_unique<ActorCriticLearner>();
  if (id == "mortal" || id == "mortal_timed") {
    return std::make_unique<MortalLearner>();
  }
  if (id == "contextual") return std::make_unique<ContextualLearner>();
  if (id == "cmab") return std::make_unique<CombinatorialLearner>();
  throw UsageError("unknown learner id: " + std::string(id));
}

LearnerConfig default_config(std::string_view id) {
  LearnerConfig cfg;
  if (id == "egreedy_decay") cfg.decay = 0.99;
  if (id == "mortal_timed") cfg.mortal_timed = true;
  return cfg;
}

}  // namespace explearn::learners
