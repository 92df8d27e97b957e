#include "explearn/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace explearn::stats {

namespace {

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Mid-ranks (1-based) plus the tie-group sizes needed for variance
// correction.
struct Ranked {
  std::vector<double> ranks;        // aligned with input order
  std::vector<std::size_t> ties;    // sizes of tie groups > 1
  bool has_ties = false;
};

Ranked midranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  Ranked out;
  out.ranks.assign(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) out.ranks[order[k]] = rank;
    if (j > i) {
      out.ties.push_back(j - i + 1);
      out.has_ties = true;
    }
    i = j + 1;
  }
  return out;
}

double tie_sum_cubed(const std::vector<std::size_t>& ties) {
  double s = 0.0;
  for (std::size_t t : ties) {
    const double td = static_cast<double>(t);
    s += td * td * td - td;
  }
  return s;
}

// Null distribution of the doubled positive-rank sum over all 2^n sign
// assignments (counts are exact in double for n <= 52).
std::vector<double> signed_rank_counts(const std::vector<std::int64_t>& r2) {
  std::int64_t total = std::accumulate(r2.begin(), r2.end(), std::int64_t{0});
  std::vector<double> cnt(static_cast<std::size_t>(total) + 1, 0.0);
  cnt[0] = 1.0;
  std::int64_t reach = 0;
  for (std::int64_t r : r2) {
    reach += r;
    for (std::int64_t s = reach; s >= r; --s) {
      cnt[static_cast<std::size_t>(s)] += cnt[static_cast<std::size_t>(s - r)];
    }
  }
  return cnt;
}

double two_sided_tail(const std::vector<double>& cnt, double total_mass,
                      std::int64_t lo, std::int64_t hi) {
  double p_lo = 0.0, p_hi = 0.0;
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(cnt.size()); ++s) {
    if (s <= lo) p_lo += cnt[static_cast<std::size_t>(s)];
    if (s >= hi) p_hi += cnt[static_cast<std::size_t>(s)];
  }
  return std::min(1.0, (p_lo + p_hi) / total_mass);
}

}  // namespace

std::string_view to_string(TestKind t) {
  return t == TestKind::wilcoxon_signed_rank ? "wilcoxon_signed_rank"
                                             : "mann_whitney_u";
}

std::string_view to_string(Method m) {
  return m == Method::exact ? "exact" : "normal_approx";
}

std::pair<std::size_t, std::size_t> split_sizes(std::size_t length,
                                                double fraction) {
  if (length < 2) throw UsageError("split requires at least 2 steps");
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw UsageError("split fraction must lie in (0, 1)");
  }
  // round half up, then keep both partitions non-empty
  auto n1 = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(length) + 0.5));
  n1 = std::clamp<std::size_t>(n1, 1, length - 1);
  return {n1, length - n1};
}

double preference_probability(
    std::span<const std::vector<std::string>> segment,
    const std::string& target) {
  if (segment.empty()) throw UsageError("preference over an empty segment");
  std::size_t hits = 0;
  for (const auto& labels : segment) {
    if (std::find(labels.begin(), labels.end(), target) != labels.end()) {
      ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(segment.size());
}

std::vector<double> preference_series(
    std::span<const std::vector<std::string>> segment,
    const std::string& target, std::size_t window) {
  if (window < 1) throw UsageError("window must be >= 1");
  if (segment.size() < window) {
    throw UsageError("segment shorter than the window");
  }
  std::vector<double> indicator(segment.size());
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const auto& labels = segment[i];
    indicator[i] =
        std::find(labels.begin(), labels.end(), target) != labels.end() ? 1.0
                                                                        : 0.0;
  }
  std::vector<double> out;
  out.reserve(segment.size() - window + 1);
  double sum = std::accumulate(indicator.begin(),
                               indicator.begin() + window, 0.0);
  out.push_back(sum / static_cast<double>(window));
  for (std::size_t i = window; i < indicator.size(); ++i) {
    sum += indicator[i] - indicator[i - window];
    out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

TestResult wilcoxon_signed_rank(std::span<const double> x,
                                std::span<const double> y,
                                const TestOptions& opts) {
  if (x.empty() || x.size() != y.size()) {
    throw UsageError("wilcoxon_signed_rank requires paired samples, n >= 1");
  }
  std::vector<double> diffs;
  diffs.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }
  TestResult res;
  res.test = TestKind::wilcoxon_signed_rank;
  res.n = {diffs.size(), 0};
  if (diffs.empty()) {
    res.degenerate = true;
    res.statistic = 0.0;
    res.p_value = 1.0;
    return res;
  }

  std::vector<double> abs_d(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) abs_d[i] = std::fabs(diffs[i]);
  const Ranked ranked = midranks(abs_d);

  double wplus = 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    total += ranked.ranks[i];
    if (diffs[i] > 0.0) wplus += ranked.ranks[i];
  }
  const double wminus = total - wplus;
  res.statistic = std::min(wplus, wminus);

  const std::size_t n = diffs.size();
  bool exact = n <= opts.wilcoxon_exact_limit;
  if (opts.force_method.has_value()) {
    exact = *opts.force_method == Method::exact;
  }
  if (n > 62) exact = false;  // counts no longer exact in double

  if (exact) {
    res.method = Method::exact;
    std::vector<std::int64_t> r2(n);
    for (std::size_t i = 0; i < n; ++i) {
      r2[i] = std::llround(2.0 * ranked.ranks[i]);
    }
    const auto cnt = signed_rank_counts(r2);
    const double mass = std::pow(2.0, static_cast<double>(n));
    const auto lo = std::llround(2.0 * std::min(wplus, wminus));
    const auto hi = std::llround(2.0 * std::max(wplus, wminus));
    res.p_value = two_sided_tail(cnt, mass, lo, hi);
  } else {
    res.method = Method::normal_approx;
    const double nd = static_cast<double>(n);
    const double mean = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 -
                       tie_sum_cubed(ranked.ties) / 48.0;
    if (var <= 0.0) {
      res.degenerate = true;
      res.p_value = 1.0;
      return res;
    }
    const double z =
        std::max(0.0, std::fabs(wplus - mean) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * normal_sf(z));
  }
  return res;
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y,
                          const TestOptions& opts) {
  if (x.empty() || y.empty()) {
    throw UsageError("mann_whitney_u requires two non-empty samples");
  }
  const std::size_t n1 = x.size();
  const std::size_t n2 = y.size();
  const std::size_t total_n = n1 + n2;

  std::vector<double> joint(x.begin(), x.end());
  joint.insert(joint.end(), y.begin(), y.end());
  const Ranked ranked = midranks(joint);

  double r1 = 0.0;
  for (std::size_t i = 0; i < n1; ++i) r1 += ranked.ranks[i];
  const double n1d = static_cast<double>(n1);
  const double n2d = static_cast<double>(n2);
  const double u1 = r1 - n1d * (n1d + 1.0) / 2.0;
  const double u2 = n1d * n2d - u1;

  TestResult res;
  res.test = TestKind::mann_whitney_u;
  res.n = {n1, n2};
  res.statistic = std::min(u1, u2);

  bool exact = total_n <= opts.mann_whitney_exact_limit && !ranked.has_ties;
  if (opts.force_method.has_value()) {
    exact = *opts.force_method == Method::exact;
  }

  if (exact) {
    res.method = Method::exact;
    // distribution of the doubled group-1 rank sum over all C(N, n1)
    // assignments, by subset-sum DP
    std::vector<std::int64_t> r2(total_n);
    std::int64_t total2 = 0;
    for (std::size_t i = 0; i < total_n; ++i) {
      r2[i] = std::llround(2.0 * ranked.ranks[i]);
      total2 += r2[i];
    }
    std::vector<std::vector<double>> dp(
        n1 + 1, std::vector<double>(static_cast<std::size_t>(total2) + 1, 0.0));
    dp[0][0] = 1.0;
    for (std::size_t i = 0; i < total_n; ++i) {
      for (std::size_t j = std::min(i + 1, n1); j >= 1; --j) {
        for (std::int64_t s = total2; s >= r2[i]; --s) {
          dp[j][static_cast<std::size_t>(s)] +=
              dp[j - 1][static_cast<std::size_t>(s - r2[i])];
        }
      }
    }
    // doubled U from the doubled rank sum
    const std::int64_t base = std::llround(n1d * (n1d + 1.0));
    const std::int64_t u_lo = std::llround(2.0 * std::min(u1, u2));
    const std::int64_t u_hi = std::llround(2.0 * std::max(u1, u2));
    double mass = 0.0, p_lo = 0.0, p_hi = 0.0;
    const auto& row = dp[n1];
    for (std::int64_t s = 0; s <= total2; ++s) {
      const double c = row[static_cast<std::size_t>(s)];
      if (c == 0.0) continue;
      mass += c;
      const std::int64_t u_doubled = s - base;
      if (u_doubled <= u_lo) p_lo += c;
      if (u_doubled >= u_hi) p_hi += c;
    }
    res.p_value = std::min(1.0, (p_lo + p_hi) / mass);
  } else {
    res.method = Method::normal_approx;
    const double nd = static_cast<double>(total_n);
    const double mean = n1d * n2d / 2.0;
    double var = n1d * n2d / 12.0 *
                 ((nd + 1.0) - tie_sum_cubed(ranked.ties) / (nd * (nd - 1.0)));
    if (var <= 0.0) {
      res.degenerate = true;
      res.p_value = 1.0;
      return res;
    }
    const double z =
        std::max(0.0, std::fabs(u1 - mean) - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * normal_sf(z));
  }
  return res;
}

std::vector<std::string> battery_targets(
    const std::vector<UserSequence>& users) {
  std::set<std::string> labels;
  for (const auto& u : users) {
    for (const auto& step : u.labels) {
      labels.insert(step.begin(), step.end());
    }
  }
  return {labels.begin(), labels.end()};
}

std::vector<BatteryRow> wilcoxon_battery(
    const std::vector<UserSequence>& users,
    const std::vector<std::string>& targets, double split,
    const TestOptions& opts) {
  std::vector<BatteryRow> rows;
  for (const std::string& target : targets) {
    std::vector<double> s1, s2;
    for (const auto& u : users) {
      if (u.labels.size() < 2) continue;
      const auto [n1, n2] = split_sizes(u.labels.size(), split);
      std::span<const std::vector<std::string>> all(u.labels);
      s1.push_back(preference_probability(all.subspan(0, n1), target));
      s2.push_back(preference_probability(all.subspan(n1), target));
    }
    if (s1.empty()) continue;
    rows.push_back({"cohort", target, wilcoxon_signed_rank(s1, s2, opts)});
  }
  return rows;
}

std::vector<BatteryRow> mann_whitney_battery(
    const std::vector<UserSequence>& users,
    const std::vector<std::string>& targets, double split, std::size_t window,
    const TestOptions& opts) {
  std::vector<BatteryRow> rows;
  for (const auto& u : users) {
    if (u.labels.size() < 2) continue;
    const auto [n1, n2] = split_sizes(u.labels.size(), split);
    if (n1 < window || n2 < window) continue;
    std::span<const std::vector<std::string>> all(u.labels);
    for (const std::string& target : targets) {
      const auto x = preference_series(all.subspan(0, n1), target, window);
      const auto y = preference_series(all.subspan(n1), target, window);
      rows.push_back({u.user_id, target, mann_whitney_u(x, y, opts)});
    }
  }
  return rows;
}

}  // namespace explearn::stats
