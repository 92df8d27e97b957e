#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "explearn/environments.hpp"
#include "explearn/ingest.hpp"
#include "explearn/stats.hpp"

// Command-line surface: ingest, nonstat, eval, simulate, report. Every
// command records a run manifest (seed, config hash, version) alongside its
// outputs, never mutates its inputs, and exits 0 on success, 1 on
// data/validation failure, 2 on usage errors.

namespace explearn::cli {

inline constexpr std::string_view kVersion = "0.1.0";

// Study-mapping settings loaded from the --config JSON file. Every field is
// optional: thresholds default as documented, the imMens arm set derives
// from the data, and the consolidation map defaults to the identity over
// observed attributes. Tableau evaluation requires ground_truth.
struct EnvSettings {
  int coarse_threshold = 3;
  int max_zoom = 6;
  std::vector<std::string> immens_arms;
  env::ConsolidationMap consolidation;
  env::GroundTruth truth;
  std::size_t cmab_subset_size = 3;
};

EnvSettings env_settings_from_json(const nlohmann::ordered_json& j);
EnvSettings load_env_settings(const std::filesystem::path& path);

// Decision traces for the evaluation protocol (rewards included).
std::vector<env::Trace> traces_for_study(const std::vector<Session>& sessions,
                                         Study study,
                                         const EnvSettings& settings);

// Per-user label sequences for the non-stationarity batteries (no rewards
// or ground truth needed).
std::vector<stats::UserSequence> sequences_for_study(
    const std::vector<Session>& sessions, Study study,
    const EnvSettings& settings);

// Entry point used by the binary and by tests; argv excludes the program
// name. Returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace explearn::cli
