#pragma once

#include <string>
#include <vector>

#include "explearn/core.hpp"
#include "explearn/learners.hpp"

// Synthetic user generators and regret instrumentation. Simulated sessions
// conform to the declared study's event schema, so they flow through
// ingest and the environment mappers unchanged. The generators are
// policy-parameterized ground truth for tests, not cognitive models.

namespace explearn::sim {

enum class ScenarioKind {
  stationary_bandit,
  switching_bandit,
  mdp_policy,
  mdp_policy_switch,
  tableau_synthetic,
};

std::string_view to_string(ScenarioKind k);
std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s);

struct ArmSpec {
  std::string id;
  double mean_pre = 0.5;   // Bernoulli reward mean before the switch point
  double mean_post = 0.5;  // and after it (equal for stationary kinds)
};

struct SimScenario {
  ScenarioKind kind = ScenarioKind::stationary_bandit;
  std::size_t horizon = 200;
  std::size_t users = 1;
  std::uint64_t seed = 0;
  double switch_point = 0.5;  // fraction of the horizon

  // bandit kinds
  std::vector<ArmSpec> arms;
  // probability the generating policy picks its preferred option (the
  // best-mean arm of the current phase); the rest is spread uniformly
  double pick_prob = 0.95;

  // mdp kinds
  double maintain_prob_pre = 0.6;
  double maintain_prob_post = 0.6;
  double forage_bias_pre = 0.5;  // P(a Navigation visit exits to Foraging)
  double forage_bias_post = 0.5;
  int coarse_threshold = 3;
  int max_zoom = 6;

  // tableau kind
  std::size_t n_attributes = 22;
  std::size_t set_size = 1;
  std::string preferred_pre;   // default: first attribute
  std::string preferred_post;  // default: last attribute

  void validate() const;
};

SimScenario scenario_from_json(const nlohmann::ordered_json& j);

// Generate one session per user in the scenario's study schema. Switching
// kinds change the generating policy exactly at ceil(switch_point * T).
std::vector<Session> simulate(const SimScenario& scenario);

struct RegretRecord {
  std::vector<double> cumulative;  // rho after each step
  std::vector<double> mu_star;     // optimal expected reward per step
};

// Drive an (uninitialized) learner through a bandit scenario: each step it
// predicts an arm, draws a Bernoulli reward, observes it, and accrues
// regret mu*_t - E[reward of the chosen arm]. mu* is analytic, never
// estimated. Usage error for kinds without a known per-step optimum.
RegretRecord measure_regret(learners::Learner& learner,
                            const SimScenario& scenario,
                            const learners::LearnerConfig& config,
                            std::uint64_t seed);

}  // namespace explearn::sim
