#include <doctest.h>

#include <cmath>
#include <map>
#include <set>

#include "explearn/learners.hpp"

using namespace explearn;
using namespace explearn::learners;

namespace {

ActionSpace arms(std::size_t k) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back("arm" + std::to_string(i));
  return ActionSpace::discrete(ids);
}

Step arm_step(const ActionSpace& space, std::size_t idx, double reward) {
  Step s;
  s.action = space.options()[idx];
  s.reward = reward;
  return s;
}

std::map<std::string, double> top1_frequencies(const ActionSpace& space,
                                               Rng& rng, int draws,
                                               auto&& select) {
  std::map<std::string, double> freq;
  for (int i = 0; i < draws; ++i) {
    Prediction p = select(rng);
    freq[p.top()] += 1.0;
  }
  for (auto& [id, f] : freq) f /= draws;
  return freq;
}

}  // namespace

TEST_CASE("random_select is uniform and returns distinct ids") {
  auto space = arms(4);
  Rng rng(17);
  auto freq = top1_frequencies(space, rng, 10000, [&](Rng& r) {
    return random_select(space, r);
  });
  for (const auto& id : space.actions) {
    CHECK(std::fabs(freq[id] - 0.25) < 0.02);
  }

  auto one = ActionSpace::discrete({"only"});
  Rng rng2(3);
  for (int i = 0; i < 20; ++i) CHECK(random_select(one, rng2).top() == "only");

  Prediction three = random_select(space, rng, 3);
  std::set<std::string> distinct;
  for (const auto& [id, score] : three.ranked) distinct.insert(id);
  CHECK(distinct.size() == 3);
  CHECK(three.k == 3);
}

TEST_CASE("wsls repeats wins and switches uniformly on losses") {
  auto space = arms(3);
  LearnerConfig cfg;

  PolicyState won;
  won.last = {2, 1.0};
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    CHECK(wsls_step(won, space, cfg, rng).top() == "arm2");
  }

  PolicyState lost;
  lost.last = {0, 0.0};
  auto freq = top1_frequencies(space, rng, 10000, [&](Rng& r) {
    return wsls_step(lost, space, cfg, r);
  });
  CHECK(freq["arm0"] == 0.0);
  CHECK(std::fabs(freq["arm1"] - 0.5) < 0.02);
  CHECK(std::fabs(freq["arm2"] - 0.5) < 0.02);

  PolicyState fresh;
  auto space5 = arms(5);
  auto uf = top1_frequencies(space5, rng, 10000, [&](Rng& r) {
    return wsls_step(fresh, space5, cfg, r);
  });
  for (const auto& id : space5.actions) CHECK(std::fabs(uf[id] - 0.2) < 0.02);
}

TEST_CASE("greedy ranks by empirical means with uniform tie-break") {
  auto space = arms(3);
  PolicyState st;
  st.mean_reward = {0.2, 0.7, 0.7};
  Rng rng(23);
  auto freq = top1_frequencies(space, rng, 10000, [&](Rng& r) {
    return greedy_select(st, space, r);
  });
  CHECK(freq["arm0"] == 0.0);
  CHECK(std::fabs(freq["arm1"] - 0.5) < 0.02);
  CHECK(std::fabs(freq["arm2"] - 0.5) < 0.02);

  PolicyState fresh;  // all unobserved -> uniform
  auto uf = top1_frequencies(space, rng, 10000, [&](Rng& r) {
    return greedy_select(fresh, space, r);
  });
  for (const auto& id : space.actions) {
    CHECK(std::fabs(uf[id] - 1.0 / 3.0) < 0.02);
  }

  PolicyState sure;
  sure.mean_reward = {1.0, 0.0, 0.0};
  for (int i = 0; i < 50; ++i) {
    CHECK(greedy_select(sure, space, rng).top() == "arm0");
  }
}

TEST_CASE("epsilon-greedy limits") {
  auto space = arms(4);
  LearnerConfig cfg;

  PolicyState st;
  st.mean_reward = {0.0, 0.9, 0.0, 0.0};
  st.epsilon_now = 0.1;
  Rng rng(41);
  auto freq = top1_frequencies(space, rng, 10000, [&](Rng& r) {
    return epsilon_greedy_select(st, space, cfg, r);
  });
  CHECK(std::fabs(freq["arm1"] - 0.925) < 0.01);

  st.epsilon_now = 1.0;
  auto uf = top1_frequencies(space, rng, 10000, [&](Rng& r) {
    return epsilon_greedy_select(st, space, cfg, r);
  });
  for (const auto& id : space.actions) CHECK(std::fabs(uf[id] - 0.25) < 0.02);
}

TEST_CASE("epsilon = 0 is trace-identical to greedy") {
  auto space = arms(4);
  auto greedy = make_learner("greedy");
  auto egreedy = make_learner("egreedy");
  LearnerConfig cfg;
  cfg.epsilon0 = 0.0;
  cfg.epsilon_min = 0.0;
  greedy->init(space, cfg, 555);
  egreedy->init(space, cfg, 555);

  Rng rewards(77);
  for (int i = 0; i < 200; ++i) {
    auto a = greedy->predict(1);
    auto b = egreedy->predict(1);
    REQUIRE(a.top() == b.top());
    Step s = arm_step(space, rewards.uniform_index(4),
                      rewards.uniform() < 0.4 ? 1.0 : 0.0);
    greedy->observe(s);
    egreedy->observe(s);
  }
}

TEST_CASE("epsilon decay is multiplicative with a floor") {
  auto space = arms(2);
  auto learner = make_learner("egreedy_decay");
  LearnerConfig cfg = default_config("egreedy_decay");
  cfg.epsilon0 = 0.5;
  cfg.decay = 0.5;
  cfg.epsilon_min = 0.05;
  learner->init(space, cfg, 1);
  const double expected[] = {0.25, 0.125, 0.0625, 0.05, 0.05};
  for (int i = 0; i < 5; ++i) {
    learner->observe(arm_step(space, 0, 1.0));
    CHECK(learner->policy_state().epsilon_now ==
          doctest::Approx(expected[i]).epsilon(1e-12));
  }
}

TEST_CASE("adaptive epsilon follows the sigmoid of the window delta") {
  LearnerConfig cfg;
  cfg.adapt_f = 4.0;

  PolicyState st;
  st.window_sum = 0.0;
  st.window_n = 4;
  st.prev_window_mean = 0.0;
  adaptive_epsilon_update(st, cfg);
  CHECK(st.epsilon_now == doctest::Approx(0.5).epsilon(1e-12));

  st.window_sum = 0.8 * 5;
  st.window_n = 5;
  st.prev_window_mean = 0.3;
  adaptive_epsilon_update(st, cfg);
  CHECK(st.epsilon_now == doctest::Approx(0.88079707797788).epsilon(1e-9));
  CHECK(st.prev_window_mean == doctest::Approx(0.8));

  st.window_sum = 0.3 * 5;
  st.window_n = 5;
  st.prev_window_mean = 0.8;
  adaptive_epsilon_update(st, cfg);
  CHECK(st.epsilon_now == doctest::Approx(0.11920292202212).epsilon(1e-9));
}

TEST_CASE("adaptive learner's first window compares against zero") {
  auto space = arms(2);
  auto learner = make_learner("adaptive_egreedy");
  LearnerConfig cfg;
  cfg.adapt_l = 4;
  cfg.adapt_f = 1.0;
  learner->init(space, cfg, 5);
  for (int i = 0; i < 3; ++i) {
    learner->observe(arm_step(space, 0, 1.0));
    CHECK(learner->policy_state().epsilon_now ==
          doctest::Approx(cfg.epsilon0));  // untouched until the window ends
  }
  learner->observe(arm_step(space, 0, 1.0));
  // delta = (1.0 - 0.0) * f
  CHECK(learner->policy_state().epsilon_now ==
        doctest::Approx(1.0 / (1.0 + std::exp(-1.0))).epsilon(1e-12));
}

TEST_CASE("bush-mosteller hand examples") {
  LearnerConfig cfg;
  cfg.alpha = 0.1;
  cfg.beta = 0.2;
  PolicyState st;
  st.probs = {0.5, 0.5};
  bush_mosteller_update(st, 0, 0.2, cfg);
  CHECK(st.probs[0] == doctest::Approx(0.55).epsilon(1e-12));
  CHECK(st.probs[1] == doctest::Approx(0.45).epsilon(1e-12));

  LearnerConfig off;
  off.alpha = 0.0;
  off.beta = 0.0;
  PolicyState st2;
  st2.probs = {0.3, 0.7};
  bush_mosteller_update(st2, 0, 1.0, off);
  bush_mosteller_update(st2, 1, -1.0, off);
  CHECK(st2.probs[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(st2.probs[1] == doctest::Approx(0.7).epsilon(1e-12));

  PolicyState st3;
  st3.probs = {0.5, 0.5};
  bush_mosteller_update(st3, 0, -1.0, cfg);
  CHECK(st3.probs[0] == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(st3.probs[1] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("bush-mosteller keeps a distribution after negative updates") {
  LearnerConfig cfg;
  cfg.alpha = 0.3;
  cfg.beta = 0.25;
  PolicyState st;
  st.probs = {0.25, 0.25, 0.25, 0.25};
  Rng rng(8);
  for (int i = 0; i < 2000; ++i) {
    bush_mosteller_update(st, rng.uniform_index(4), rng.uniform() - 0.5, cfg);
    double sum = 0.0;
    for (double p : st.probs) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("roth-erev hand examples") {
  LearnerConfig cfg;
  cfg.sigma = 0.1;
  PolicyState st;
  st.propensity = {1.0, 1.0};
  roth_erev_update(st, 0, 1.0, cfg);
  CHECK(st.propensity[0] == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(st.propensity[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.propensity[0] / (st.propensity[0] + st.propensity[1]) ==
        doctest::Approx(1.9 / 2.9).epsilon(1e-12));

  LearnerConfig frozen;
  frozen.sigma = 0.0;
  PolicyState st2;
  st2.propensity = {2.0, 1.0};
  roth_erev_update(st2, 0, 0.0, frozen);
  CHECK(st2.propensity[0] == doctest::Approx(2.0).epsilon(1e-12));

  LearnerConfig half;
  half.sigma = 0.5;
  PolicyState st3;
  st3.propensity = {2.0, 1.0, 1.0};
  roth_erev_update(st3, 1, 0.5, half);
  CHECK(st3.propensity == std::vector<double>{2.0, 1.0, 1.0});
}

TEST_CASE("roth-erev propensities stay a valid distribution") {
  LearnerConfig cfg;
  cfg.sigma = 0.4;
  PolicyState st;
  st.propensity = {1.0, 1.0, 1.0};
  Rng rng(12);
  for (int i = 0; i < 5000; ++i) {
    roth_erev_update(st, rng.uniform_index(3), rng.uniform() * 2.0 - 1.0, cfg);
    double sum = 0.0;
    for (double s : st.propensity) {
      CHECK(s >= kPropensityFloor);
      sum += s;
    }
    CHECK(sum > 0.0);
  }
}

TEST_CASE("q-learning hand examples") {
  LearnerConfig cfg;
  cfg.alpha = 0.5;
  cfg.gamma_discount = 0.9;
  PolicyState st;
  qlearning_update(st, "s", 0, 1.0, "s2", false, cfg, 2);
  CHECK(st.q_table["s"][0] == doctest::Approx(0.5).epsilon(1e-12));

  LearnerConfig off;
  off.alpha = 0.0;
  PolicyState st2;
  st2.q_table["s"] = {0.7, 0.0};
  qlearning_update(st2, "s", 0, 5.0, "s2", false, off, 2);
  CHECK(st2.q_table["s"][0] == doctest::Approx(0.7).epsilon(1e-12));

  PolicyState st3;
  st3.q_table["s"] = {0.5, 0.0};
  st3.q_table["s2"] = {0.5, 0.1};
  qlearning_update(st3, "s", 0, 0.0, "s2", false, cfg, 2);
  CHECK(st3.q_table["s"][0] == doctest::Approx(0.475).epsilon(1e-12));
}

TEST_CASE("sarsa hand examples") {
  LearnerConfig cfg;
  cfg.alpha = 0.5;
  cfg.gamma_discount = 0.9;
  PolicyState st;
  sarsa_update(st, "s", 0, 1.0, "s2", 1, false, cfg, 2);
  CHECK(st.q_table["s"][0] == doctest::Approx(0.5).epsilon(1e-12));

  LearnerConfig full;
  full.alpha = 1.0;
  full.gamma_discount = 0.9;
  PolicyState st2;
  st2.q_table["s2"] = {0.0, 1.0};
  sarsa_update(st2, "s", 0, 0.0, "s2", 1, false, full, 2);
  CHECK(st2.q_table["s"][0] == doctest::Approx(0.9).epsilon(1e-12));

  LearnerConfig off;
  off.alpha = 0.0;
  PolicyState st3;
  sarsa_update(st3, "s", 0, 9.0, "s2", 0, false, off, 2);
  CHECK(st3.q_table["s"][0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("reinforce hand example and no-op cases") {
  LearnerConfig cfg;
  cfg.alpha = 0.1;
  cfg.gamma_discount = 1.0;
  PolicyState st;
  std::vector<EpisodeStep> episode{{"s", 0, 1.0}};
  reinforce_update(st, episode, cfg, 2);
  CHECK(st.logits["s"][0] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(st.logits["s"][1] == doctest::Approx(-0.05).epsilon(1e-12));

  PolicyState st2;
  std::vector<EpisodeStep> zeros{{"s", 0, 0.0}, {"s", 1, 0.0}};
  reinforce_update(st2, zeros, cfg, 2);
  CHECK(st2.logits["s"][0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(st2.logits["s"][1] == doctest::Approx(0.0).epsilon(1e-15));

  PolicyState st3;
  reinforce_update(st3, {}, cfg, 2);  // empty episode: no-op
  CHECK(st3.logits.empty());
}

TEST_CASE("reinforce gradient matches central finite differences") {
  LearnerConfig cfg;
  cfg.alpha = 0.1;
  cfg.gamma_discount = 1.0;
  Rng rng(314);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(3);
    std::vector<double> logits(n);
    for (double& v : logits) v = rng.uniform() * 2.0 - 1.0;
    const std::size_t a = rng.uniform_index(n);
    const double g = rng.uniform() * 2.0 - 1.0;

    PolicyState st;
    st.logits["s"] = logits;
    std::vector<EpisodeStep> episode{{"s", a, g}};
    reinforce_update(st, episode, cfg, n);

    const double h = 1e-6;
    for (std::size_t j = 0; j < n; ++j) {
      auto up = logits, dn = logits;
      up[j] += h;
      dn[j] -= h;
      const double fd =
          (std::log(softmax(up)[a]) - std::log(softmax(dn)[a])) / (2.0 * h);
      const double applied = st.logits["s"][j] - logits[j];
      CHECK(std::fabs(applied - cfg.alpha * g * fd) < 1e-6);
    }
  }
}

TEST_CASE("actor-critic hand examples") {
  LearnerConfig cfg;
  cfg.alpha = 0.1;
  cfg.alpha_v = 0.5;
  cfg.gamma_discount = 0.9;

  PolicyState st;
  actor_critic_update(st, "s", 0, 1.0, "", true, cfg, 2);
  CHECK(st.v_table["s"] == doctest::Approx(0.5).epsilon(1e-12));
  // delta was 1 with a uniform policy: logits move +-alpha/2
  CHECK(st.logits["s"][0] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(st.logits["s"][1] == doctest::Approx(-0.05).epsilon(1e-12));

  // delta = 0: nothing moves
  PolicyState st2;
  st2.v_table["s"] = 0.5;
  st2.v_table["s2"] = 0.0;
  LearnerConfig g0 = cfg;
  g0.gamma_discount = 0.0;
  actor_critic_update(st2, "s", 0, 0.5, "s2", false, g0, 2);
  CHECK(st2.v_table["s"] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(st2.logits["s"][0] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("mortal bandit lifetimes") {
  auto space = arms(3);

  SUBCASE("budgeted death after the drawn number of selections") {
    auto learner = make_learner("mortal");
    LearnerConfig cfg;
    cfg.mortal_lifetime = 3.0;
    cfg.mortal_n = 1;
    cfg.mortal_keep = 0.5;
    learner->init(space, cfg, 99);
    const auto budget = learner->policy_state().lifetimes[0].budget;
    REQUIRE(budget >= 1);
    for (std::int64_t i = 0; i < budget - 1; ++i) {
      learner->observe(arm_step(space, 0, 1.0));
      CHECK(learner->policy_state().lifetimes[0].generation == 0);
    }
    learner->observe(arm_step(space, 0, 1.0));
    CHECK(learner->policy_state().lifetimes[0].generation == 1);
    CHECK(learner->policy_state().lifetimes[0].pulls == 0);  // fresh stats
    CHECK(learner->policy_state().lifetimes.size() == 3);    // constant pool
  }

  SUBCASE("timed death with p = 1 kills after every selection") {
    auto learner = make_learner("mortal_timed");
    LearnerConfig cfg = default_config("mortal_timed");
    cfg.mortal_p = 1.0;
    learner->init(space, cfg, 7);
    for (int i = 1; i <= 5; ++i) {
      learner->observe(arm_step(space, 1, 0.0));
      CHECK(learner->policy_state().lifetimes[1].generation == i);
    }
  }

  SUBCASE("keep rule retains a good arm after its trial") {
    auto learner = make_learner("mortal");
    LearnerConfig cfg;
    cfg.mortal_lifetime = 100.0;
    cfg.mortal_n = 2;
    cfg.mortal_keep = 0.5;
    learner->init(space, cfg, 3);
    learner->observe(arm_step(space, 2, 1.0));
    CHECK_FALSE(learner->policy_state().lifetimes[2].kept);
    learner->observe(arm_step(space, 2, 1.0));
    CHECK(learner->policy_state().lifetimes[2].kept);
    CHECK(learner->predict(1).top() == "arm2");
  }
}

TEST_CASE("contextual selection with fallback") {
  auto space = arms(2);
  LearnerConfig cfg;

  PolicyState st;
  st.mean_reward = {0.1, 0.9};
  st.ctx_mean["pan"] = {0.9, 0.1};
  st.ctx_count["pan"] = {100, 100};
  st.epsilon_now = 0.0;
  Rng rng(21);
  CHECK(contextual_select(st, std::string("pan"), space, cfg, rng).top() ==
        "arm0");
  CHECK(contextual_select(st, std::string("zoom"), space, cfg, rng).top() ==
        "arm1");  // unseen context: context-free means
  CHECK(contextual_select(st, std::nullopt, space, cfg, rng).top() == "arm1");

  st.epsilon_now = 1.0;
  auto freq = top1_frequencies(space, rng, 10000, [&](Rng& r) {
    return contextual_select(st, std::string("pan"), space, cfg, r);
  });
  CHECK(std::fabs(freq["arm0"] - 0.5) < 0.02);
}

TEST_CASE("combinatorial subsets and updates") {
  auto subsets = enumerate_subsets(4, 3);
  REQUIRE(subsets.size() == 4);
  CHECK(subsets[0] == std::vector<std::size_t>{0, 1, 2});
  CHECK(subsets[3] == std::vector<std::size_t>{1, 2, 3});

  LearnerConfig cfg;
  cfg.eta = 0.1;
  cfg.gamma_mix = 0.0;

  PolicyState st;
  st.subset_weights = {1, 1, 1, 1};
  st.subset_weight_total = 4;

  SUBCASE("zero cost leaves weights unchanged") {
    combinatorial_update(st, 2, 0.0, cfg);
    CHECK(st.subset_weights == std::vector<double>{1, 1, 1, 1});
    combinatorial_update(st, 0, 0.0, cfg);
    auto p = combinatorial_distribution(st, cfg);
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("unit cost under uniform p scales the chosen weight") {
    // p uniform over C=4: pseudo-loss = 1 / (1/4) = 4
    combinatorial_update(st, 1, 1.0, cfg);
    CHECK(st.subset_weights[1] ==
          doctest::Approx(std::exp(-0.1 * 4.0)).epsilon(1e-12));
    CHECK(st.subset_weight_total ==
          doctest::Approx(3.0 + std::exp(-0.4)).epsilon(1e-12));
  }

  SUBCASE("gamma_mix = 1 degenerates to the uniform prior") {
    LearnerConfig mixed = cfg;
    mixed.gamma_mix = 1.0;
    st.subset_weights = {5, 1, 1, 1};
    st.subset_weight_total = 8;
    auto p = combinatorial_distribution(st, mixed);
    for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));
  }

  SUBCASE("mixture formula") {
    LearnerConfig mixed = cfg;
    mixed.gamma_mix = 0.2;
    st.subset_weights = {2, 1, 1, 1};
    st.subset_weight_total = 5;
    auto p = combinatorial_distribution(st, mixed);
    CHECK(p[0] == doctest::Approx(0.8 * 2.0 / 5.0 + 0.2 * 0.25).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.8 * 1.0 / 5.0 + 0.2 * 0.25).epsilon(1e-12));
  }
}

TEST_CASE("cmab learner samples from the mixture and needs a subset space") {
  auto space = ActionSpace::subset({"a", "b", "c", "d", "e"}, 3);
  auto learner = make_learner("cmab");
  LearnerConfig cfg;
  cfg.gamma_mix = 0.3;
  cfg.eta = 0.2;
  learner->init(space, cfg, 11);

  // a couple of real updates so the weights are not uniform
  Step s1;
  s1.items = std::vector<std::string>{"a", "b", "c"};
  s1.reward = 0.0;  // cost 1
  learner->observe(s1);
  Step s2;
  s2.items = std::vector<std::string>{"a", "b", "d"};
  s2.reward = 1.0;
  learner->observe(s2);

  const auto p = combinatorial_distribution(learner->policy_state(), cfg);
  const auto subsets = enumerate_subsets(5, 3);

  // no-op observation (reward == subset size -> cost 0) advances the
  // prediction stream without moving the weights
  Step noop;
  noop.items = std::vector<std::string>{"a", "b", "c"};
  noop.reward = 3.0;

  std::map<std::string, int> counts;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    Prediction pred = learner->predict(3);
    std::set<std::string> ids;
    for (const auto& [id, score] : pred.ranked) ids.insert(id);
    REQUIRE(ids.size() == 3);
    std::string key;
    for (const auto& id : ids) key += id;
    counts[key] += 1;
    learner->observe(noop);
  }
  double tv = 0.0;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    std::string key;
    for (std::size_t idx : subsets[i]) key += space.item_universe[idx];
    const double emp = static_cast<double>(counts[key]) / draws;
    tv += std::fabs(emp - p[i]);
  }
  CHECK(tv / 2.0 < 0.02);

  auto bad = make_learner("cmab");
  auto discrete = arms(3);
  CHECK_THROWS_AS(bad->init(discrete, cfg, 1), UsageError);
  // a universe smaller than the subset size is a configuration error
  CHECK_THROWS_AS(ActionSpace::subset({"a", "b"}, 3), UsageError);
}

TEST_CASE("predict is side-effect free and repeatable") {
  for (const auto& id : learner_ids()) {
    auto space = id == "cmab" ? ActionSpace::subset({"a", "b", "c", "d"}, 3)
                              : arms(4);
    auto learner = make_learner(id);
    LearnerConfig cfg = default_config(id);
    learner->init(space, cfg, 2024);
    learners::Query q;
    q.state = "s0";
    q.context = "pan";
    const std::size_t k = id == "cmab" ? 3 : 1;
    auto a = learner->predict(k, q);
    auto b = learner->predict(k, q);
    REQUIRE(a.ranked.size() == b.ranked.size());
    for (std::size_t i = 0; i < a.ranked.size(); ++i) {
      CHECK(a.ranked[i].first == b.ranked[i].first);
      CHECK(a.ranked[i].second == b.ranked[i].second);
    }
  }
}

TEST_CASE("prediction scores are non-increasing with distinct ids") {
  Rng seeds(86);
  for (const auto& id : learner_ids()) {
    auto space = id == "cmab" ? ActionSpace::subset({"a", "b", "c", "d"}, 3)
                              : arms(4);
    auto learner = make_learner(id);
    learner->init(space, default_config(id), seeds.next_u64());
    Step step;
    if (id == "cmab") {
      step.items = std::vector<std::string>{"a", "b", "c"};
    } else {
      step.action = "arm0";
    }
    step.state = "s0";
    step.context = "pan";
    step.reward = 1.0;
    learner->observe(step);
    learners::Query q;
    q.state = "s0";
    const std::size_t k = id == "cmab" ? 3 : 3;
    auto pred = learner->predict(k, q);
    REQUIRE(pred.ranked.size() == k);
    std::set<std::string> distinct;
    for (std::size_t i = 0; i < pred.ranked.size(); ++i) {
      distinct.insert(pred.ranked[i].first);
      if (i > 0) CHECK(pred.ranked[i].second <= pred.ranked[i - 1].second);
    }
    CHECK(distinct.size() == k);
  }
}

TEST_CASE("learner config validation") {
  LearnerConfig bad;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  LearnerConfig bad2;
  bad2.decay = 0.0;
  CHECK_THROWS_AS(bad2.validate(), UsageError);
  LearnerConfig bad3;
  bad3.mortal_n = 0;
  CHECK_THROWS_AS(bad3.validate(), UsageError);
  CHECK_THROWS_AS(make_learner("nope"), UsageError);
}
