#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "explearn/core.hpp"

// Maps parsed sessions into the three decision-problem formalizations:
// an exploration-stage MDP trace, a visualization bandit trace, and a
// combinatorial attribute-subset trace, each with its study's reward
// assignment. All mappers are pure functions over immutable sessions.

namespace explearn::env {

// ---------------------------------------------------------------------------
// Exploration-stage MDP (pan/zoom logs)
// ---------------------------------------------------------------------------

enum class MdpState { foraging, navigation, sensemaking };
enum class MdpAction { maintain, switch_stage, switch_forage, switch_sense };

std::string_view to_string(MdpState s);
std::string_view to_string(MdpAction a);

struct MdpStep {
  MdpState state = MdpState::foraging;
  MdpAction action = MdpAction::maintain;
  double reward = 0.0;  // snow_level * zoom_level of the resulting view
};

struct MdpTrace {
  std::string user_id;
  std::vector<MdpStep> steps;
};

// Stage assignment: pans at zoom <= coarse_threshold are Foraging, pans
// above it are Sensemaking, zoom operations are Navigation. Actions derive
// from consecutive stage pairs; a direct Foraging<->Sensemaking transition
// is impossible under the interface and raises ValidationError. The split
// between coarse and fine pans is not fixed by the source studies, so
// coarse_threshold is explicit configuration (default 3).
MdpTrace map_forecache(const Session& session, int coarse_threshold = 3,
                       int max_zoom = 6);

// ---------------------------------------------------------------------------
// Visualization bandit
// ---------------------------------------------------------------------------

struct BanditStep {
  std::string arm;  // visualization id
  double reward = 0.0;  // in {0, 0.1, 1}
  std::optional<std::string> context;  // preceding raw interaction
};

struct BanditTrace {
  std::string user_id;
  std::vector<std::string> arm_set;
  std::vector<BanditStep> steps;
};

// Annotation-driven rewards: insight/hypothesis/answer/generalization/
// confirmation -> 1, observation -> 0.1, config or none -> 0. The context of
// step t is the raw interaction of step t-1 (observable before the choice).
BanditTrace map_immens(const Session& session,
                       const std::vector<std::string>& arm_set);

double annotation_reward(Annotation a);

// ---------------------------------------------------------------------------
// Combinatorial attribute-subset model
// ---------------------------------------------------------------------------

enum class MetaAction { keep, add, drop, reset };

std::string_view to_string(MetaAction a);

struct CmabStep {
  std::set<std::string> items;  // consolidated attribute set X_t
  MetaAction meta_action = MetaAction::keep;
  double reward = 0.0;  // |X_t intersect G(task)|
  std::set<std::string> added;    // X_t \ X_{t-1}
  std::set<std::string> dropped;  // X_{t-1} \ X_t
};

struct CmabTrace {
  std::string user_id;
  std::vector<std::string> item_universe;  // consolidated vocabulary, sorted
  std::vector<CmabStep> steps;
};

// raw attribute label -> consolidated attribute label; must be total on the
// dataset's vocabulary.
using ConsolidationMap = std::map<std::string, std::string>;

// task id -> set of essential consolidated attributes.
class GroundTruth {
 public:
  GroundTruth() = default;
  explicit GroundTruth(std::map<std::string, std::set<std::string>> tasks);

  const std::set<std::string>& for_task(const std::string& task) const;
  bool empty() const { return tasks_.empty(); }
  const std::map<std::string, std::set<std::string>>& tasks() const {
    return tasks_;
  }

 private:
  std::map<std::string, std::set<std::string>> tasks_;
};

// Image of the raw labels under the consolidation map, deduplicated.
// Throws ValidationError listing any unmapped label.
std::set<std::string> consolidate(const std::vector<std::string>& raw,
                                  const ConsolidationMap& map);

// Meta-action classification against the previous set: equality -> Keep,
// emptied from non-empty -> Reset, additions only -> Add, removals only ->
// Drop. Mixed add+drop interactions classify as Add; the raw add/drop sets
// stay on the step for auditability. The session's meta must name the task
// used for the ground-truth lookup.
CmabTrace map_tableau(const Session& session, const ConsolidationMap& map,
                      const GroundTruth& truth);

// ---------------------------------------------------------------------------
// Unified decision trace for the evaluation protocol
// ---------------------------------------------------------------------------

struct Trace {
  std::string user_id;
  ActionSpace space;
  std::vector<Step> steps;
};

Trace to_trace(const MdpTrace& t);
Trace to_trace(const BanditTrace& t);
Trace to_trace(const CmabTrace& t, std::size_t subset_size = 3);

// The per-step label sets used by the non-stationarity batteries: the MDP
// state when present, else the step's items, else its action.
std::vector<std::vector<std::string>> label_sets(const Trace& t);

// The four MDP action ids in canonical order.
ActionSpace mdp_action_space();

}  // namespace explearn::env
