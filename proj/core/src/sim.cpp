#include "explearn/sim.hpp"

#include <algorithm>
#include <cmath>

namespace explearn::sim {

namespace {

using nlohmann::ordered_json;

std::string pad2(std::size_t n) {
  std::string s = std::to_string(n);
  return s.size() < 2 ? "0" + s : s;
}

std::size_t best_arm(const SimScenario& scn, bool post) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < scn.arms.size(); ++i) {
    const double cur = post ? scn.arms[i].mean_post : scn.arms[i].mean_pre;
    const double top = post ? scn.arms[best].mean_post : scn.arms[best].mean_pre;
    if (cur > top) best = i;
  }
  return best;
}

Event base_event(const std::string& uid, Study study, std::int64_t index,
                 std::string raw_action) {
  Event e;
  e.session_id = uid;
  e.user_id = uid;
  e.study = study;
  e.index = index;
  e.raw_action = std::move(raw_action);
  return e;
}

std::vector<Event> simulate_bandit_user(const SimScenario& scn,
                                        const std::string& uid, Rng& rng) {
  const std::size_t switch_at = static_cast<std::size_t>(
      std::ceil(scn.switch_point * static_cast<double>(scn.horizon)));
  std::vector<Event> events;
  events.reserve(scn.horizon);
  for (std::size_t t = 0; t < scn.horizon; ++t) {
    const bool post =
        scn.kind == ScenarioKind::switching_bandit && t >= switch_at;
    const std::size_t preferred = best_arm(scn, post);
    std::size_t arm = preferred;
    if (!rng.bernoulli(scn.pick_prob)) {
      // uniform over the other arms
      std::size_t other = rng.uniform_index(scn.arms.size() - 1);
      arm = other >= preferred ? other + 1 : other;
    }
    const double mean = post ? scn.arms[arm].mean_post : scn.arms[arm].mean_pre;
    const bool rewarded = rng.bernoulli(mean);
    Event e = base_event(uid, Study::immens, static_cast<std::int64_t>(t),
                         "select");
    e.params["visualization"] = scn.arms[arm].id;
    e.annotation = rewarded ? Annotation::insight : Annotation::none;
    events.push_back(std::move(e));
  }
  return events;
}

// Exploration-stage walk with explicit zoom mechanics: pans keep the zoom
// level, zoom events move it one step, and a stage exit from Navigation is
// taken only once the level is on the right side of the coarse threshold.
std::vector<Event> simulate_mdp_user(const SimScenario& scn,
                                     const std::string& uid, Rng& rng) {
  const std::size_t switch_at = static_cast<std::size_t>(
      std::ceil(scn.switch_point * static_cast<double>(scn.horizon)));
  enum class Stage { forage, navigate, sense };
  Stage stage = Stage::forage;
  int zoom = scn.coarse_threshold;
  bool target_forage = true;

  std::vector<Event> events;
  events.reserve(scn.horizon);
  for (std::size_t t = 0; t < scn.horizon; ++t) {
    const bool post =
        scn.kind == ScenarioKind::mdp_policy_switch && t >= switch_at;
    const double maintain =
        post ? scn.maintain_prob_post : scn.maintain_prob_pre;
    const double forage_bias =
        post ? scn.forage_bias_post : scn.forage_bias_pre;

    std::string raw_action;
    if (stage == Stage::navigate) {
      // move one zoom step toward the target side, wandering inside it
      int next_zoom;
      if (target_forage) {
        if (zoom > scn.coarse_threshold) next_zoom = zoom - 1;
        else if (zoom == 0) next_zoom = zoom + 1;
        else next_zoom = zoom - 1;
      } else {
        if (zoom <= scn.coarse_threshold) next_zoom = zoom + 1;
        else if (zoom == scn.max_zoom) next_zoom = zoom - 1;
        else next_zoom = zoom + 1;
      }
      if (!target_forage && next_zoom <= scn.coarse_threshold) {
        next_zoom = zoom + 1;  // never undershoot the fine side
      }
      raw_action = next_zoom > zoom ? "zoom_in" : "zoom_out";
      zoom = next_zoom;
    } else {
      raw_action = "pan";
    }

    Event e =
        base_event(uid, Study::forecache, static_cast<std::int64_t>(t),
                   raw_action);
    e.params["zoom_level"] = zoom;
    e.params["snow_level"] =
        std::round(rng.uniform() * 1000.0) / 1000.0;
    events.push_back(std::move(e));

    // choose the next stage
    switch (stage) {
      case Stage::forage:
        if (!rng.bernoulli(maintain)) {
          stage = Stage::navigate;
          target_forage = rng.bernoulli(forage_bias);
        }
        break;
      case Stage::sense:
        if (!rng.bernoulli(maintain)) {
          stage = Stage::navigate;
          target_forage = rng.bernoulli(forage_bias);
        }
        break;
      case Stage::navigate: {
        const bool feasible = target_forage ? zoom <= scn.coarse_threshold
                                            : zoom > scn.coarse_threshold;
        if (feasible && !rng.bernoulli(maintain)) {
          stage = target_forage ? Stage::forage : Stage::sense;
        }
        break;
      }
    }
  }
  return events;
}

std::vector<Event> simulate_tableau_user(const SimScenario& scn,
                                         const std::string& uid, Rng& rng,
                                         const std::vector<std::string>& attrs) {
  const std::size_t switch_at = static_cast<std::size_t>(
      std::ceil(scn.switch_point * static_cast<double>(scn.horizon)));
  const std::string pre =
      scn.preferred_pre.empty() ? attrs.front() : scn.preferred_pre;
  const std::string post =
      scn.preferred_post.empty() ? attrs.back() : scn.preferred_post;

  std::vector<Event> events;
  events.reserve(scn.horizon);
  for (std::size_t t = 0; t < scn.horizon; ++t) {
    const std::string& preferred = t >= switch_at ? post : pre;
    std::set<std::string> chosen;
    if (rng.bernoulli(scn.pick_prob)) chosen.insert(preferred);
    while (chosen.size() < scn.set_size) {
      chosen.insert(attrs[rng.uniform_index(attrs.size())]);
    }
    Event e = base_event(uid, Study::tableau, static_cast<std::int64_t>(t),
                         "select_attributes");
    e.params["attributes"] = std::vector<std::string>(chosen.begin(),
                                                      chosen.end());
    events.push_back(std::move(e));
  }
  return events;
}

}  // namespace

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::stationary_bandit: return "stationary_bandit";
    case ScenarioKind::switching_bandit: return "switching_bandit";
    case ScenarioKind::mdp_policy: return "mdp_policy";
    case ScenarioKind::mdp_policy_switch: return "mdp_policy_switch";
    case ScenarioKind::tableau_synthetic: return "tableau_synthetic";
  }
  return "stationary_bandit";
}

std::optional<ScenarioKind> scenario_kind_from_string(std::string_view s) {
  if (s == "stationary_bandit") return ScenarioKind::stationary_bandit;
  if (s == "switching_bandit") return ScenarioKind::switching_bandit;
  if (s == "mdp_policy") return ScenarioKind::mdp_policy;
  if (s == "mdp_policy_switch") return ScenarioKind::mdp_policy_switch;
  if (s == "tableau_synthetic") return ScenarioKind::tableau_synthetic;
  return std::nullopt;
}

void SimScenario::validate() const {
  if (horizon < 10) throw UsageError("scenario horizon must be >= 10");
  if (users == 0) throw UsageError("scenario needs at least one user");
  if (kind == ScenarioKind::switching_bandit ||
      kind == ScenarioKind::mdp_policy_switch) {
    if (!(switch_point > 0.0 && switch_point < 1.0)) {
      throw UsageError("switch_point must lie in (0, 1)");
    }
  }
  if (kind == ScenarioKind::stationary_bandit ||
      kind == ScenarioKind::switching_bandit) {
    if (arms.size() < 2) throw UsageError("bandit scenarios need >= 2 arms");
    for (const ArmSpec& a : arms) {
      if (a.mean_pre < 0.0 || a.mean_pre > 1.0 || a.mean_post < 0.0 ||
          a.mean_post > 1.0) {
        throw UsageError("arm means must lie in [0, 1]");
      }
    }
  }
  if (kind == ScenarioKind::tableau_synthetic) {
    if (n_attributes < 2) throw UsageError("need >= 2 attributes");
    if (set_size == 0 || set_size > n_attributes) {
      throw UsageError("set_size must lie in [1, n_attributes]");
    }
  }
  if (!(pick_prob >= 0.0 && pick_prob <= 1.0)) {
    throw UsageError("pick_prob must lie in [0, 1]");
  }
}

SimScenario scenario_from_json(const ordered_json& j) {
  SimScenario s;
  if (!j.is_object()) throw UsageError("scenario: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "kind") {
      auto k = scenario_kind_from_string(value.get<std::string>());
      if (!k.has_value()) {
        throw UsageError("scenario: unknown kind \"" +
                         value.get<std::string>() + "\"");
      }
      s.kind = *k;
    } else if (key == "horizon") {
      s.horizon = value.get<std::size_t>();
    } else if (key == "users") {
      s.users = value.get<std::size_t>();
    } else if (key == "seed") {
      s.seed = value.get<std::uint64_t>();
    } else if (key == "switch_point") {
      s.switch_point = value.get<double>();
    } else if (key == "arms") {
      for (const auto& arm : value) {
        ArmSpec spec;
        spec.id = arm.at("id").get<std::string>();
        spec.mean_pre = arm.at("mean").get<double>();
        spec.mean_post = arm.value("mean_post", spec.mean_pre);
        s.arms.push_back(std::move(spec));
      }
    } else if (key == "pick_prob") {
      s.pick_prob = value.get<double>();
    } else if (key == "maintain_prob") {
      s.maintain_prob_pre = s.maintain_prob_post = value.get<double>();
    } else if (key == "maintain_prob_post") {
      s.maintain_prob_post = value.get<double>();
    } else if (key == "forage_bias") {
      s.forage_bias_pre = s.forage_bias_post = value.get<double>();
    } else if (key == "forage_bias_post") {
      s.forage_bias_post = value.get<double>();
    } else if (key == "coarse_threshold") {
      s.coarse_threshold = value.get<int>();
    } else if (key == "max_zoom") {
      s.max_zoom = value.get<int>();
    } else if (key == "n_attributes") {
      s.n_attributes = value.get<std::size_t>();
    } else if (key == "set_size") {
      s.set_size = value.get<std::size_t>();
    } else if (key == "preferred_pre") {
      s.preferred_pre = value.get<std::string>();
    } else if (key == "preferred_post") {
      s.preferred_post = value.get<std::string>();
    } else {
      throw UsageError("scenario: unknown key \"" + key + "\"");
    }
  }
  s.validate();
  return s;
}

std::vector<Session> simulate(const SimScenario& scenario) {
  scenario.validate();
  std::vector<std::string> attrs;
  if (scenario.kind == ScenarioKind::tableau_synthetic) {
    attrs.reserve(scenario.n_attributes);
    for (std::size_t i = 0; i < scenario.n_attributes; ++i) {
      attrs.push_back("attr" + pad2(i + 1));
    }
  }
  std::vector<Session> sessions;
  sessions.reserve(scenario.users);
  for (std::size_t u = 0; u < scenario.users; ++u) {
    // per-user stream: population output is independent of scheduling
    Rng rng(Rng::derive(scenario.seed, u));
    const std::string uid = "sim-u" + pad2(u);
    std::vector<Event> events;
    switch (scenario.kind) {
      case ScenarioKind::stationary_bandit:
      case ScenarioKind::switching_bandit:
        events = simulate_bandit_user(scenario, uid, rng);
        break;
      case ScenarioKind::mdp_policy:
      case ScenarioKind::mdp_policy_switch:
        events = simulate_mdp_user(scenario, uid, rng);
        break;
      case ScenarioKind::tableau_synthetic:
        events = simulate_tableau_user(scenario, uid, rng, attrs);
        break;
    }
    std::map<std::string, std::string> meta{{"dataset", "synthetic"},
                                            {"task", "sim"}};
    sessions.push_back(Session::make(std::move(events), std::move(meta)));
  }
  return sessions;
}

RegretRecord measure_regret(learners::Learner& learner,
                            const SimScenario& scenario,
                            const learners::LearnerConfig& config,
                            std::uint64_t seed) {
  scenario.validate();
  if (scenario.kind != ScenarioKind::stationary_bandit &&
      scenario.kind != ScenarioKind::switching_bandit) {
    throw UsageError("measure_regret: scenario has no analytic optimum");
  }
  std::vector<std::string> arm_ids;
  arm_ids.reserve(scenario.arms.size());
  for (const ArmSpec& a : scenario.arms) arm_ids.push_back(a.id);
  const ActionSpace space = ActionSpace::discrete(arm_ids);
  learner.init(space, config, seed);

  Rng rng(Rng::derive(seed, 0x7265677265ull));
  const std::size_t switch_at = static_cast<std::size_t>(
      std::ceil(scenario.switch_point * static_cast<double>(scenario.horizon)));

  RegretRecord record;
  record.cumulative.reserve(scenario.horizon);
  record.mu_star.reserve(scenario.horizon);
  double cum = 0.0;
  for (std::size_t t = 0; t < scenario.horizon; ++t) {
    const bool post =
        scenario.kind == ScenarioKind::switching_bandit && t >= switch_at;
    double mu_star = 0.0;
    for (const ArmSpec& a : scenario.arms) {
      mu_star = std::max(mu_star, post ? a.mean_post : a.mean_pre);
    }
    const Prediction pred = learner.predict(1);
    const std::size_t arm = *space.index_of(pred.top());
    const double mean = post ? scenario.arms[arm].mean_post
                             : scenario.arms[arm].mean_pre;
    Step step;
    step.action = pred.top();
    step.reward = rng.bernoulli(mean) ? 1.0 : 0.0;
    learner.observe(step);
    cum += mu_star - mean;
    record.cumulative.push_back(cum);
    record.mu_star.push_back(mu_star);
  }
  return record;
}

}  // namespace explearn::sim
