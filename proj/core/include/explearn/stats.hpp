#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "explearn/core.hpp"

// Non-stationarity analysis: session splitting, preference-series
// extraction, and the Wilcoxon signed-rank / Mann-Whitney U tests with both
// exact (enumeration-equivalent) and normal-approximation p-values.

namespace explearn::stats {

enum class TestKind { wilcoxon_signed_rank, mann_whitney_u };
enum class Method { exact, normal_approx };

std::string_view to_string(TestKind t);
std::string_view to_string(Method m);

struct TestResult {
  TestKind test = TestKind::wilcoxon_signed_rank;
  double statistic = 0.0;
  double p_value = 1.0;
  std::pair<std::size_t, std::size_t> n{0, 0};  // sample sizes (n2=0 paired)
  Method method = Method::exact;
  bool degenerate = false;  // no usable signal (all-zero diffs, all ties)
};

struct TestOptions {
  // Effective-n ceiling for the exact Wilcoxon null distribution.
  std::size_t wilcoxon_exact_limit = 20;
  // Combined-n ceiling for the exact Mann-Whitney null (ties force the
  // approximation regardless).
  std::size_t mann_whitney_exact_limit = 12;
  // Force one method instead of the size-based choice.
  std::optional<Method> force_method;
};

// Split preserving order: |S1| = round(fraction * T) with half-up rounding.
// Throws UsageError unless fraction is in (0,1) and the sequence has at
// least 2 elements.
std::pair<std::size_t, std::size_t> split_sizes(std::size_t length,
                                                double fraction);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split_session(
    const std::vector<T>& seq, double fraction) {
  auto [n1, n2] = split_sizes(seq.size(), fraction);
  return {std::vector<T>(seq.begin(), seq.begin() + n1),
          std::vector<T>(seq.begin() + n1, seq.end())};
}

// Fraction of steps whose label set contains the target.
double preference_probability(
    std::span<const std::vector<std::string>> segment,
    const std::string& target);

// Sliding-window indicator means of length (|segment| - w + 1).
std::vector<double> preference_series(
    std::span<const std::vector<std::string>> segment,
    const std::string& target, std::size_t window);

// Paired two-sided test on differences x - y. Zero differences are dropped;
// ties in |d| receive mid-ranks. The statistic is min(W+, W-). Exact
// p-values come from the full sign-assignment null distribution; above the
// exact limit a normal approximation with continuity and tie correction is
// used. All differences zero yields a degenerate result with p = 1.
TestResult wilcoxon_signed_rank(std::span<const double> x,
                                std::span<const double> y,
                                const TestOptions& opts = {});

// Two-sample two-sided test. U is computed from joint mid-ranks and
// reported as min(U1, U2). Exact p-values come from the group-assignment
// null distribution when the combined size is within the limit and there
// are no ties; otherwise a normal approximation with continuity and tie
// correction is used.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          const TestOptions& opts = {});

// ---------------------------------------------------------------------------
// Test batteries over user cohorts
// ---------------------------------------------------------------------------

// One user's per-step label sets (MDP states, chosen arms, or attribute
// sets), in session order.
struct UserSequence {
  std::string user_id;
  std::vector<std::vector<std::string>> labels;
};

struct BatteryRow {
  std::string scope;  // "cohort" or a user id
  std::string target;
  TestResult result;
};

// Cohort-level Wilcoxon battery: one (pref(S1), pref(S2)) pair per user and
// one signed-rank test per target.
std::vector<BatteryRow> wilcoxon_battery(
    const std::vector<UserSequence>& users,
    const std::vector<std::string>& targets, double split,
    const TestOptions& opts = {});

// Per-user Mann-Whitney battery: windowed preference series on each half,
// one test per (user, target). Users whose halves are shorter than the
// window are skipped.
std::vector<BatteryRow> mann_whitney_battery(
    const std::vector<UserSequence>& users,
    const std::vector<std::string>& targets, double split, std::size_t window,
    const TestOptions& opts = {});

// Distinct labels across all users, sorted.
std::vector<std::string> battery_targets(const std::vector<UserSequence>& users);

}  // namespace explearn::stats
