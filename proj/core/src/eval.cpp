#include "explearn/eval.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

namespace explearn::eval {

namespace {

using env::Trace;
using learners::Learner;
using learners::LearnerConfig;

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

learners::Query query_for(const Step& step) {
  learners::Query q;
  q.state = step.state;
  q.context = step.context;
  return q;
}

struct WalkOutcome {
  double sum = 0.0;
  std::size_t scored = 0;
  std::size_t skipped = 0;
};

// One-step-ahead teacher-forced walk over steps [from, to): predict, score
// against the actual step, then (optionally) reveal it.
WalkOutcome walk_steps(Learner& learner, const Trace& trace, std::size_t from,
                       std::size_t to, std::size_t k, bool subset_metric,
                       bool observe_after) {
  WalkOutcome out;
  for (std::size_t i = from; i < to; ++i) {
    const Step& step = trace.steps[i];
    if (subset_metric) {
      if (!step.items.has_value() || step.items->empty()) {
        ++out.skipped;
      } else {
        const Prediction pred = learner.predict(k, query_for(step));
        std::vector<std::string> predicted;
        predicted.reserve(pred.ranked.size());
        for (const auto& [id, score] : pred.ranked) predicted.push_back(id);
        out.sum += recall_at_k(predicted, *step.items);
        ++out.scored;
      }
    } else {
      const Prediction pred = learner.predict(k, query_for(step));
      if (pred.top() == step.action) out.sum += 1.0;
      ++out.scored;
    }
    if (observe_after) learner.observe(step);
  }
  return out;
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EXPLEARN_WORKERS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

}  // namespace

double accuracy(std::size_t hits, std::size_t total) {
  if (total == 0) throw UsageError("accuracy: total must be positive");
  return static_cast<double>(hits) / static_cast<double>(total);
}

double recall_at_k(const std::vector<std::string>& predicted,
                   const std::vector<std::string>& actual) {
  if (actual.empty()) throw UsageError("recall_at_k: actual set is empty");
  const std::set<std::string> actual_set(actual.begin(), actual.end());
  std::size_t hits = 0;
  for (const auto& id : predicted) {
    if (actual_set.count(id) > 0) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(actual_set.size());
}

ParamGrid default_grid(std::string_view algorithm) {
  const std::vector<double> alphas = {0.01, 0.1, 0.5};
  const std::vector<double> gammas = {0.5, 0.9, 0.99};
  const std::vector<double> epsilons = {0.001, 0.01, 0.1, 0.3};
  ParamGrid g;
  if (algorithm == "egreedy" || algorithm == "contextual" ||
      algorithm == "adaptive_egreedy") {
    g.axes = {{"epsilon", epsilons}};
  } else if (algorithm == "egreedy_decay") {
    g.axes = {{"epsilon", epsilons}, {"decay", {0.99, 0.999}}};
  } else if (algorithm == "bush_mosteller") {
    g.axes = {{"alpha", alphas}, {"beta", alphas}};
  } else if (algorithm == "roth_erev") {
    g.axes = {{"sigma", {0.0, 0.1, 0.5}}};
  } else if (algorithm == "qlearn" || algorithm == "sarsa") {
    g.axes = {{"alpha", alphas}, {"gamma", gammas}, {"epsilon", epsilons}};
  } else if (algorithm == "reinforce") {
    g.axes = {{"alpha", alphas}, {"gamma", gammas}};
  } else if (algorithm == "actor_critic") {
    g.axes = {{"alpha", alphas}, {"gamma", gammas}, {"alpha_v", alphas}};
  } else if (algorithm == "mortal") {
    g.axes = {{"mortal_lifetime", {5, 20}}, {"mortal_n", {1, 3}}};
  } else if (algorithm == "mortal_timed") {
    g.axes = {{"mortal_p", {0.05, 0.2}}, {"mortal_n", {1, 3}}};
  } else if (algorithm == "cmab") {
    g.axes = {{"eta", {0.01, 0.1}}, {"gamma_mix", {0.05, 0.2}}};
  }
  // random / wsls / greedy are parameter-free
  return g;
}

std::vector<GridPoint> grid_points(const ParamGrid& grid) {
  std::vector<GridPoint> points;
  if (grid.axes.empty()) return points;
  for (const auto& [name, values] : grid.axes) {
    if (values.empty()) {
      throw UsageError("grid axis \"" + name + "\" has no values");
    }
  }
  std::vector<std::size_t> idx(grid.axes.size(), 0);
  while (true) {
    GridPoint p;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      p.params.emplace_back(grid.axes[a].first, grid.axes[a].second[idx[a]]);
    }
    points.push_back(std::move(p));
    // advance, last axis fastest
    std::size_t a = grid.axes.size();
    while (a-- > 0) {
      if (++idx[a] < grid.axes[a].second.size()) break;
      idx[a] = 0;
      if (a == 0) return points;
    }
  }
}

LearnerConfig apply_params(LearnerConfig base, const GridPoint& point) {
  for (const auto& [name, value] : point.params) {
    if (name == "alpha") base.alpha = value;
    else if (name == "beta") base.beta = value;
    else if (name == "gamma") base.gamma_discount = value;
    else if (name == "epsilon") base.epsilon0 = value;
    else if (name == "decay") base.decay = value;
    else if (name == "epsilon_min") base.epsilon_min = value;
    else if (name == "sigma") base.sigma = value;
    else if (name == "adapt_l") base.adapt_l = static_cast<std::int64_t>(value);
    else if (name == "adapt_f") base.adapt_f = value;
    else if (name == "aspiration") base.aspiration = value;
    else if (name == "win_threshold") base.win_threshold = value;
    else if (name == "mortal_lifetime") base.mortal_lifetime = value;
    else if (name == "mortal_p") base.mortal_p = value;
    else if (name == "mortal_n") base.mortal_n = static_cast<std::int64_t>(value);
    else if (name == "mortal_keep") base.mortal_keep = value;
    else if (name == "eta") base.eta = value;
    else if (name == "gamma_mix") base.gamma_mix = value;
    else if (name == "alpha_v") base.alpha_v = value;
    else throw UsageError("unknown hyperparameter: " + name);
  }
  return base;
}

std::string format_params(const GridPoint& point) {
  auto sorted = point.params;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::string out;
  for (const auto& [name, value] : sorted) {
    if (!out.empty()) out += ";";
    out += name + "=" + fmt_double(value);
  }
  return out;
}

GridPoint grid_search(const Trace& trace, std::size_t prefix_len,
                      const std::string& algorithm, const ParamGrid& grid,
                      std::uint64_t seed) {
  if (grid.empty()) throw UsageError("grid_search: empty grid");
  if (prefix_len < 2 || prefix_len > trace.steps.size()) {
    throw UsageError("grid_search: prefix must hold at least 2 steps");
  }
  const bool subset_metric = trace.space.kind == ActionSpace::Kind::subset;
  const std::size_t k = subset_metric ? trace.space.subset_size : 1;
  const bool episodic = algorithm == "reinforce";

  const auto points = grid_points(grid);
  GridPoint best;
  double best_score = -1.0;
  for (const GridPoint& point : points) {
    auto learner = learners::make_learner(algorithm);
    const LearnerConfig cfg =
        apply_params(learners::default_config(algorithm), point);
    learner->init(trace.space, cfg, seed);
    WalkOutcome outcome;
    if (episodic) {
      // episodic rules only update at episode boundaries: prime on the
      // prefix, then score it frozen
      for (std::size_t i = 0; i < prefix_len; ++i) {
        learner->observe(trace.steps[i]);
      }
      learner->end_training();
      outcome = walk_steps(*learner, trace, 0, prefix_len, k, subset_metric,
                           /*observe_after=*/false);
    } else {
      outcome = walk_steps(*learner, trace, 0, prefix_len, k, subset_metric,
                           /*observe_after=*/true);
    }
    const double score =
        outcome.scored > 0 ? outcome.sum / static_cast<double>(outcome.scored)
                           : 0.0;
    if (score > best_score) {
      best_score = score;
      best = point;
    }
  }
  return best;
}

EvalReport run_eval(const std::vector<Trace>& traces, const EvalPlan& plan) {
  if (traces.empty()) throw UsageError("run_eval: no traces");
  if (plan.algorithms.empty()) throw UsageError("run_eval: no algorithms");
  for (double t : plan.thresholds) {
    if (!(t > 0.0 && t < 1.0)) {
      throw UsageError("thresholds must lie in (0, 1)");
    }
  }

  // deterministic cell order: plan algorithms x users (sorted) x thresholds
  std::vector<std::size_t> trace_order(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) trace_order[i] = i;
  std::sort(trace_order.begin(), trace_order.end(),
            [&](std::size_t a, std::size_t b) {
              return traces[a].user_id < traces[b].user_id;
            });

  struct Cell {
    std::string algorithm;
    std::size_t trace_idx = 0;
    std::size_t threshold_idx = 0;
  };
  std::vector<Cell> cells;
  for (const std::string& alg : plan.algorithms) {
    (void)learners::make_learner(alg);  // validate ids up front
    for (std::size_t ti : trace_order) {
      for (std::size_t h = 0; h < plan.thresholds.size(); ++h) {
        cells.push_back({alg, ti, h});
      }
    }
  }

  struct CellOutcome {
    std::optional<EvalRow> row;
    std::vector<std::string> diagnostics;
  };
  std::vector<CellOutcome> outcomes(cells.size());

  auto run_cell_impl = [&](std::size_t c) {
    const Cell& cell = cells[c];
    const Trace& trace = traces[cell.trace_idx];
    const double tau = plan.thresholds[cell.threshold_idx];
    CellOutcome& out = outcomes[c];

    const std::size_t total = trace.steps.size();
    if (total < 3) {
      out.diagnostics.push_back("skipped " + cell.algorithm + "/" +
                                trace.user_id + "/" + fmt_double(tau) +
                                ": trace shorter than 3 steps");
      return;
    }
    const bool subset_metric = trace.space.kind == ActionSpace::Kind::subset;
    std::size_t k = plan.top_k;
    if (k == 0) k = subset_metric ? trace.space.subset_size : 1;
    const std::string metric =
        subset_metric ? "recall_at_" + std::to_string(k) : "accuracy";

    auto train_len = static_cast<std::size_t>(
        std::ceil(tau * static_cast<double>(total)));
    train_len = std::clamp<std::size_t>(train_len, 2, total - 1);

    const std::uint64_t cell_seed = Rng::derive(
        plan.seed, stable_hash(trace.user_id + "|" + cell.algorithm + "|" +
                               std::to_string(cell.threshold_idx)));

    const ParamGrid& grid = plan.grid.count(cell.algorithm) > 0
                                ? plan.grid.at(cell.algorithm)
                                : default_grid(cell.algorithm);
    GridPoint point;
    if (!grid.empty()) {
      point = grid_search(trace, train_len, cell.algorithm, grid,
                          Rng::derive(cell_seed, 1));
    }
    const LearnerConfig cfg =
        apply_params(learners::default_config(cell.algorithm), point);

    auto learner = learners::make_learner(cell.algorithm);
    learner->init(trace.space, cfg, Rng::derive(cell_seed, 2));
    for (std::size_t i = 0; i < train_len; ++i) {
      learner->observe(trace.steps[i]);
    }
    learner->end_training();

    const WalkOutcome walk =
        walk_steps(*learner, trace, train_len, total, k, subset_metric,
                   plan.online_update_in_test);
    learner->finish_episode();
    if (walk.skipped > 0) {
      out.diagnostics.push_back(
          cell.algorithm + "/" + trace.user_id + "/" + fmt_double(tau) + ": " +
          std::to_string(walk.skipped) + " steps without a target skipped");
    }
    if (walk.scored == 0) {
      out.diagnostics.push_back("skipped " + cell.algorithm + "/" +
                                trace.user_id + "/" + fmt_double(tau) +
                                ": no scorable steps in the test region");
      return;
    }
    EvalRow row;
    row.algorithm = cell.algorithm;
    row.user = trace.user_id;
    row.threshold = tau;
    row.metric = metric;
    row.value = walk.sum / static_cast<double>(walk.scored);
    row.hyperparameters = format_params(point);
    out.row = std::move(row);
  };

  // a failing cell must not take down the batch (or a worker thread)
  auto run_cell = [&](std::size_t c) {
    try {
      run_cell_impl(c);
    } catch (const std::exception& e) {
      const Cell& cell = cells[c];
      outcomes[c].row.reset();
      outcomes[c].diagnostics.push_back(
          "failed " + cell.algorithm + "/" + traces[cell.trace_idx].user_id +
          "/" + fmt_double(plan.thresholds[cell.threshold_idx]) + ": " +
          e.what());
    }
  };

  const std::size_t workers = std::min(resolve_workers(plan.workers),
                                       std::max<std::size_t>(cells.size(), 1));
  if (workers <= 1) {
    for (std::size_t c = 0; c < cells.size(); ++c) run_cell(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          const std::size_t c = next.fetch_add(1);
          if (c >= cells.size()) break;
          run_cell(c);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  EvalReport report;
  for (const CellOutcome& o : outcomes) {
    if (o.row.has_value()) report.rows.push_back(*o.row);
    report.diagnostics.insert(report.diagnostics.end(), o.diagnostics.begin(),
                              o.diagnostics.end());
  }

  // per-threshold aggregate curve, one row per (algorithm, threshold, metric)
  for (const std::string& alg : plan.algorithms) {
    for (std::size_t h = 0; h < plan.thresholds.size(); ++h) {
      std::map<std::string, std::pair<double, std::size_t>> by_metric;
      for (const EvalRow& row : report.rows) {
        if (row.algorithm == alg && row.threshold == plan.thresholds[h]) {
          auto& acc = by_metric[row.metric];
          acc.first += row.value;
          acc.second += 1;
        }
      }
      for (const auto& [metric, acc] : by_metric) {
        report.aggregates.push_back(
            {alg, plan.thresholds[h], metric,
             acc.first / static_cast<double>(acc.second), acc.second});
      }
    }
  }
  return report;
}

std::string report_csv(const EvalReport& report) {
  std::string out = "algorithm,user,threshold,metric,value,hyperparameters\n";
  for (const EvalRow& r : report.rows) {
    out += csv_field(r.algorithm) + "," + csv_field(r.user) + "," +
           fmt_double(r.threshold) + "," + r.metric + "," + fmt_double(r.value) +
           "," + csv_field(r.hyperparameters) + "\n";
  }
  return out;
}

std::string aggregate_csv(const EvalReport& report) {
  std::string out = "algorithm,threshold,metric,mean_value,n_users\n";
  for (const AggregateRow& r : report.aggregates) {
    out += csv_field(r.algorithm) + "," + fmt_double(r.threshold) + "," +
           r.metric + "," + fmt_double(r.mean_value) + "," +
           std::to_string(r.n_users) + "\n";
  }
  return out;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const EvalRow& r : report.rows) {
    nlohmann::ordered_json row;
    row["algorithm"] = r.algorithm;
    row["user"] = r.user;
    row["threshold"] = r.threshold;
    row["metric"] = r.metric;
    row["value"] = r.value;
    row["hyperparameters"] = r.hyperparameters;
    j["rows"].push_back(row);
  }
  j["aggregates"] = nlohmann::ordered_json::array();
  for (const AggregateRow& r : report.aggregates) {
    nlohmann::ordered_json row;
    row["algorithm"] = r.algorithm;
    row["threshold"] = r.threshold;
    row["metric"] = r.metric;
    row["mean_value"] = r.mean_value;
    row["n_users"] = r.n_users;
    j["aggregates"].push_back(row);
  }
  j["diagnostics"] = report.diagnostics;
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport report;
  for (const auto& row : j.at("rows")) {
    report.rows.push_back({row.at("algorithm").get<std::string>(),
                           row.at("user").get<std::string>(),
                           row.at("threshold").get<double>(),
                           row.at("metric").get<std::string>(),
                           row.at("value").get<double>(),
                           row.at("hyperparameters").get<std::string>()});
  }
  for (const auto& row : j.at("aggregates")) {
    report.aggregates.push_back({row.at("algorithm").get<std::string>(),
                                 row.at("threshold").get<double>(),
                                 row.at("metric").get<std::string>(),
                                 row.at("mean_value").get<double>(),
                                 row.at("n_users").get<std::size_t>()});
  }
  for (const auto& d : j.at("diagnostics")) {
    report.diagnostics.push_back(d.get<std::string>());
  }
  return report;
}

std::vector<std::filesystem::path> emit_report(
    const EvalReport& report, const std::filesystem::path& base,
    ReportFormat format) {
  if (report.rows.empty()) throw UsageError("emit_report: empty report");
  std::vector<std::filesystem::path> written;
  auto write_file = [&](const std::filesystem::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + p.string());
    out << s;
    written.push_back(p);
  };
  if (format == ReportFormat::csv) {
    auto csv_path = base;
    csv_path += ".csv";
    auto agg_path = base;
    agg_path += "_aggregate.csv";
    write_file(csv_path, report_csv(report));
    write_file(agg_path, aggregate_csv(report));
  } else {
    auto json_path = base;
    json_path += ".json";
    write_file(json_path, report_to_json(report).dump(2) + "\n");
  }
  return written;
}

EvalPlan plan_from_json(const nlohmann::ordered_json& j) {
  EvalPlan plan;
  if (!j.is_object()) throw UsageError("plan: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "algorithms") {
      plan.algorithms = value.get<std::vector<std::string>>();
    } else if (key == "thresholds") {
      plan.thresholds = value.get<std::vector<double>>();
    } else if (key == "grid") {
      if (!value.is_object()) throw UsageError("plan: grid must be an object");
      for (const auto& [alg, axes] : value.items()) {
        ParamGrid g;
        if (!axes.is_object()) {
          throw UsageError("plan: grid." + alg + " must be an object");
        }
        for (const auto& [param, values] : axes.items()) {
          if (!values.is_array()) {
            throw UsageError("plan: grid." + alg + "." + param +
                             " must be an array");
          }
          g.axes.emplace_back(param, values.get<std::vector<double>>());
        }
        plan.grid[alg] = std::move(g);
      }
    } else if (key == "k") {
      plan.top_k = value.get<std::size_t>();
    } else if (key == "online_update_in_test") {
      plan.online_update_in_test = value.get<bool>();
    } else if (key == "seed") {
      plan.seed = value.get<std::uint64_t>();
    } else if (key == "workers") {
      plan.workers = value.get<std::size_t>();
    } else {
      throw UsageError("plan: unknown key \"" + key + "\"");
    }
  }
  if (plan.algorithms.empty()) {
    throw UsageError("plan: \"algorithms\" must name at least one learner");
  }
  return plan;
}

nlohmann::ordered_json plan_to_json(const EvalPlan& plan) {
  nlohmann::ordered_json j;
  j["algorithms"] = plan.algorithms;
  j["thresholds"] = plan.thresholds;
  nlohmann::ordered_json grid = nlohmann::ordered_json::object();
  for (const auto& [alg, g] : plan.grid) {
    nlohmann::ordered_json axes = nlohmann::ordered_json::object();
    for (const auto& [param, values] : g.axes) axes[param] = values;
    grid[alg] = axes;
  }
  j["grid"] = grid;
  j["k"] = plan.top_k;
  j["online_update_in_test"] = plan.online_update_in_test;
  j["seed"] = plan.seed;
  j["workers"] = plan.workers;
  return j;
}

}  // namespace explearn::eval
