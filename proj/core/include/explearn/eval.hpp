#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "explearn/environments.hpp"
#include "explearn/learners.hpp"

// The evaluation protocol: per (user, algorithm, threshold) cell, tune
// hyperparameters on the training prefix, train on it, then walk the
// remaining steps sequentially -- predict top-k, score against the actual
// step, and only then reveal it. Cells are independent and the report is
// assembled by deterministic merge, so worker count never changes output.

namespace explearn::eval {

// Hyperparameter axes in declared order; grid points enumerate the
// cartesian product with the last axis varying fastest.
struct ParamGrid {
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  bool empty() const { return axes.empty(); }
};

struct GridPoint {
  std::vector<std::pair<std::string, double>> params;
};

struct EvalPlan {
  std::vector<std::string> algorithms;
  std::vector<double> thresholds = {0.05, 0.1, 0.2, 0.3, 0.4,
                                    0.5,  0.6, 0.7, 0.8, 0.9};
  std::map<std::string, ParamGrid> grid;  // per algorithm; absent -> default
  std::size_t top_k = 0;                  // 0 = 1 for discrete, subset_size
  bool online_update_in_test = true;
  std::uint64_t seed = 0;
  std::size_t workers = 0;  // 0 = $EXPLEARN_WORKERS or hardware concurrency
};

struct EvalRow {
  std::string algorithm;
  std::string user;
  double threshold = 0.0;
  std::string metric;
  double value = 0.0;
  std::string hyperparameters;  // canonical key=value;... (sorted keys)
};

struct AggregateRow {
  std::string algorithm;
  double threshold = 0.0;
  std::string metric;
  double mean_value = 0.0;
  std::size_t n_users = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<std::string> diagnostics;  // skipped cells etc.
};

// hits / total; total must be positive.
double accuracy(std::size_t hits, std::size_t total);

// |predicted intersect actual| / |actual|; actual must be non-empty.
double recall_at_k(const std::vector<std::string>& predicted,
                   const std::vector<std::string>& actual);

// The stock hyperparameter grid for a catalog id (empty for the
// parameter-free heuristics).
ParamGrid default_grid(std::string_view algorithm);

// Grid in declared-order cartesian expansion.
std::vector<GridPoint> grid_points(const ParamGrid& grid);

// Apply named parameters on top of a base config. Unknown names raise
// UsageError.
learners::LearnerConfig apply_params(learners::LearnerConfig base,
                                     const GridPoint& point);

// Canonical key=value encoding with keys sorted alphabetically.
std::string format_params(const GridPoint& point);

// Exhaustive search: every grid point is scored by one-step-ahead
// teacher-forced prediction accuracy over the prefix; ties keep the first
// point in grid order. Deterministic given the seed.
GridPoint grid_search(const env::Trace& trace, std::size_t prefix_len,
                      const std::string& algorithm, const ParamGrid& grid,
                      std::uint64_t seed);

EvalReport run_eval(const std::vector<env::Trace>& traces,
                    const EvalPlan& plan);

// Byte-stable CSV emission. Column order is part of the contract:
// algorithm,user,threshold,metric,value,hyperparameters
std::string report_csv(const EvalReport& report);
// algorithm,threshold,metric,mean_value,n_users
std::string aggregate_csv(const EvalReport& report);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

enum class ReportFormat { csv, json };

// Write report files under `base` (base.csv + base_aggregate.csv, or
// base.json). Returns the written paths.
std::vector<std::filesystem::path> emit_report(const EvalReport& report,
                                               const std::filesystem::path& base,
                                               ReportFormat format);

// Plan (de)serialization; unknown keys raise UsageError naming the key.
EvalPlan plan_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json plan_to_json(const EvalPlan& plan);

}  // namespace explearn::eval
