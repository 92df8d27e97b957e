#include "explearn/environments.hpp"

#include <algorithm>
#include <cmath>

namespace explearn::env {

namespace {

double require_number(const Event& e, const char* field) {
  auto it = e.params.find(field);
  if (it == e.params.end() || !it->is_number()) {
    throw ValidationError("missing field: " + std::string(field) +
                          " @ index " + std::to_string(e.index));
  }
  return it->get<double>();
}

std::string require_string(const Event& e, const char* field) {
  auto it = e.params.find(field);
  if (it == e.params.end() || !it->is_string()) {
    throw ValidationError("missing field: " + std::string(field) +
                          " @ index " + std::to_string(e.index));
  }
  return it->get<std::string>();
}

bool is_zoom_action(const std::string& a) {
  return a == "zoom_in" || a == "zoom_out" || a == "zoom";
}

}  // namespace

std::string_view to_string(MdpState s) {
  switch (s) {
    case MdpState::foraging: return "foraging";
    case MdpState::navigation: return "navigation";
    case MdpState::sensemaking: return "sensemaking";
  }
  return "foraging";
}

std::string_view to_string(MdpAction a) {
  switch (a) {
    case MdpAction::maintain: return "maintain";
    case MdpAction::switch_stage: return "switch";
    case MdpAction::switch_forage: return "switch_forage";
    case MdpAction::switch_sense: return "switch_sense";
  }
  return "maintain";
}

std::string_view to_string(MetaAction a) {
  switch (a) {
    case MetaAction::keep: return "keep";
    case MetaAction::add: return "add";
    case MetaAction::drop: return "drop";
    case MetaAction::reset: return "reset";
  }
  return "keep";
}

ActionSpace mdp_action_space() {
  return ActionSpace::discrete(
      {"maintain", "switch", "switch_forage", "switch_sense"});
}

MdpTrace map_forecache(const Session& session, int coarse_threshold,
                       int max_zoom) {
  std::vector<MdpState> stages;
  std::vector<double> rewards;
  stages.reserve(session.size());
  rewards.reserve(session.size());

  for (const Event& e : session.events()) {
    const double zoom = require_number(e, "zoom_level");
    const double snow = require_number(e, "snow_level");
    if (zoom < 0 || zoom > max_zoom || zoom != std::floor(zoom)) {
      throw ValidationError("zoom_level out of range @ index " +
                            std::to_string(e.index));
    }
    if (snow < 0.0 || snow > 1.0) {
      throw ValidationError("snow_level out of range @ index " +
                            std::to_string(e.index));
    }
    MdpState stage;
    if (is_zoom_action(e.raw_action)) {
      stage = MdpState::navigation;
    } else if (e.raw_action == "pan") {
      stage = zoom <= coarse_threshold ? MdpState::foraging
                                       : MdpState::sensemaking;
    } else {
      throw ValidationError("unknown raw_action '" + e.raw_action +
                            "' @ index " + std::to_string(e.index));
    }
    stages.push_back(stage);
    rewards.push_back(snow * zoom);
  }

  MdpTrace trace;
  trace.user_id = session.user_id();
  for (std::size_t i = 0; i + 1 < stages.size(); ++i) {
    const MdpState from = stages[i];
    const MdpState to = stages[i + 1];
    MdpAction action;
    if (from == to) {
      action = MdpAction::maintain;
    } else if (to == MdpState::navigation) {
      action = MdpAction::switch_stage;
    } else if (from == MdpState::navigation) {
      action = to == MdpState::foraging ? MdpAction::switch_forage
                                        : MdpAction::switch_sense;
    } else {
      throw ValidationError(
          "impossible direct foraging<->sensemaking transition @ index " +
          std::to_string(session.events()[i + 1].index));
    }
    // the reward is the feedback from the view the action produced
    trace.steps.push_back({from, action, rewards[i + 1]});
  }
  return trace;
}

double annotation_reward(Annotation a) {
  switch (a) {
    case Annotation::insight:
    case Annotation::hypothesis:
    case Annotation::answer:
    case Annotation::generalization:
    case Annotation::confirmation:
      return 1.0;
    case Annotation::observation:
      return 0.1;
    case Annotation::none:
    case Annotation::config:
      return 0.0;
  }
  return 0.0;
}

BanditTrace map_immens(const Session& session,
                       const std::vector<std::string>& arm_set) {
  BanditTrace trace;
  trace.user_id = session.user_id();
  trace.arm_set = arm_set;
  std::optional<std::string> prev_action;
  for (const Event& e : session.events()) {
    const std::string arm = require_string(e, "visualization");
    if (std::find(arm_set.begin(), arm_set.end(), arm) == arm_set.end()) {
      throw ValidationError("visualization '" + arm +
                            "' outside the arm set @ index " +
                            std::to_string(e.index));
    }
    BanditStep step;
    step.arm = arm;
    step.reward = annotation_reward(e.annotation);
    step.context = prev_action;
    trace.steps.push_back(std::move(step));
    prev_action = e.raw_action;
  }
  return trace;
}

GroundTruth::GroundTruth(std::map<std::string, std::set<std::string>> tasks)
    : tasks_(std::move(tasks)) {
  for (const auto& [task, attrs] : tasks_) {
    if (attrs.empty()) {
      throw ValidationError("ground truth for task '" + task + "' is empty");
    }
  }
}

const std::set<std::string>& GroundTruth::for_task(
    const std::string& task) const {
  auto it = tasks_.find(task);
  if (it == tasks_.end()) {
    throw ValidationError("no ground truth configured for task '" + task +
                          "'");
  }
  return it->second;
}

std::set<std::string> consolidate(const std::vector<std::string>& raw,
                                  const ConsolidationMap& map) {
  std::set<std::string> out;
  for (const std::string& label : raw) {
    auto it = map.find(label);
    if (it == map.end()) {
      throw ValidationError("attribute not in consolidation map: " + label);
    }
    out.insert(it->second);
  }
  return out;
}

CmabTrace map_tableau(const Session& session, const ConsolidationMap& map,
                      const GroundTruth& truth) {
  auto task_it = session.meta().find("task");
  if (task_it == session.meta().end()) {
    throw ValidationError("session " + session.session_id() +
                          " has no task label in its meta");
  }
  const std::set<std::string>& goal = truth.for_task(task_it->second);

  CmabTrace trace;
  trace.user_id = session.user_id();
  std::set<std::string> universe;
  for (const auto& [raw, high] : map) universe.insert(high);
  trace.item_universe.assign(universe.begin(), universe.end());

  std::set<std::string> prev;
  for (const Event& e : session.events()) {
    auto attrs_it = e.params.find("attributes");
    if (attrs_it == e.params.end() || !attrs_it->is_array()) {
      throw ValidationError("missing field: attributes @ index " +
                            std::to_string(e.index));
    }
    std::vector<std::string> raw;
    for (const auto& v : *attrs_it) {
      if (!v.is_string()) {
        throw ValidationError("attributes must be labels @ index " +
                              std::to_string(e.index));
      }
      raw.push_back(v.get<std::string>());
    }
    CmabStep step;
    step.items = consolidate(raw, map);
    std::set_difference(step.items.begin(), step.items.end(), prev.begin(),
                        prev.end(),
                        std::inserter(step.added, step.added.end()));
    std::set_difference(prev.begin(), prev.end(), step.items.begin(),
                        step.items.end(),
                        std::inserter(step.dropped, step.dropped.end()));
    if (step.added.empty() && step.dropped.empty()) {
      step.meta_action = MetaAction::keep;
    } else if (step.items.empty() && !prev.empty()) {
      step.meta_action = MetaAction::reset;
    } else if (step.dropped.empty()) {
      step.meta_action = MetaAction::add;
    } else if (step.added.empty()) {
      step.meta_action = MetaAction::drop;
    } else {
      step.meta_action = MetaAction::add;  // mixed interactions read as Add
    }
    std::vector<std::string> hits;
    std::set_intersection(step.items.begin(), step.items.end(), goal.begin(),
                          goal.end(), std::back_inserter(hits));
    step.reward = static_cast<double>(hits.size());
    prev = step.items;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

Trace to_trace(const MdpTrace& t) {
  Trace out;
  out.user_id = t.user_id;
  out.space = mdp_action_space();
  for (const MdpStep& s : t.steps) {
    Step step;
    step.state = std::string(to_string(s.state));
    step.action = std::string(to_string(s.action));
    step.reward = s.reward;
    out.steps.push_back(std::move(step));
  }
  return out;
}

Trace to_trace(const BanditTrace& t) {
  Trace out;
  out.user_id = t.user_id;
  out.space = ActionSpace::discrete(t.arm_set);
  for (const BanditStep& s : t.steps) {
    Step step;
    step.action = s.arm;
    step.reward = s.reward;
    step.context = s.context;
    out.steps.push_back(std::move(step));
  }
  return out;
}

Trace to_trace(const CmabTrace& t, std::size_t subset_size) {
  Trace out;
  out.user_id = t.user_id;
  out.space = ActionSpace::subset(t.item_universe, subset_size);
  for (const CmabStep& s : t.steps) {
    Step step;
    step.action = std::string(to_string(s.meta_action));
    step.items = std::vector<std::string>(s.items.begin(), s.items.end());
    step.reward = s.reward;
    out.steps.push_back(std::move(step));
  }
  return out;
}

std::vector<std::vector<std::string>> label_sets(const Trace& t) {
  std::vector<std::vector<std::string>> out;
  out.reserve(t.steps.size());
  for (const Step& s : t.steps) {
    if (s.state.has_value()) {
      out.push_back({*s.state});
    } else if (s.items.has_value()) {
      out.push_back(*s.items);
    } else {
      out.push_back({s.action});
    }
  }
  return out;
}

}  // namespace explearn::env
