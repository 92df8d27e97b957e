#include "explearn/cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "explearn/eval.hpp"
#include "explearn/sim.hpp"

namespace explearn::cli {

namespace {

using nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& err) {
    throw ValidationError(path.string() + ": " + err.what());
  }
  return j;
}

void write_manifest(const std::filesystem::path& primary_output,
                    const std::string& command, std::uint64_t seed,
                    const ordered_json& parameters,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& outputs) {
  std::filesystem::path path = primary_output;
  path += ".manifest.json";
  ordered_json m;
  m["command"] = command;
  m["version"] = std::string(kVersion);
  m["seed"] = seed;
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(
                    stable_hash(parameters.dump())));
  m["config_hash"] = std::string(hex);
  m["parameters"] = parameters;
  m["inputs"] = inputs;
  m["outputs"] = outputs;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write manifest " + path.string());
  out << m.dump(2) << '\n';
}

ingest::Format format_from_name(const std::string& name) {
  if (name == "jsonl") return ingest::Format::jsonl;
  if (name == "csv") return ingest::Format::csv;
  throw UsageError("unknown input format: " + name);
}

Study study_from_flag(const std::string& name) {
  auto s = study_from_string(name);
  if (!s.has_value()) throw UsageError("unknown study: " + name);
  return *s;
}

std::vector<std::string> derive_arms(const std::vector<Session>& sessions) {
  std::set<std::string> arms;
  for (const Session& s : sessions) {
    for (const Event& e : s.events()) {
      if (auto it = e.params.find("visualization");
          it != e.params.end() && it->is_string()) {
        arms.insert(it->get<std::string>());
      }
    }
  }
  return {arms.begin(), arms.end()};
}

env::ConsolidationMap derive_identity_map(
    const std::vector<Session>& sessions) {
  env::ConsolidationMap map;
  for (const Session& s : sessions) {
    for (const Event& e : s.events()) {
      if (auto it = e.params.find("attributes");
          it != e.params.end() && it->is_array()) {
        for (const auto& v : *it) {
          if (v.is_string()) {
            const auto label = v.get<std::string>();
            map.emplace(label, label);
          }
        }
      }
    }
  }
  return map;
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

// --------------------------------------------------------------------------
// subcommand bodies
// --------------------------------------------------------------------------

struct IngestArgs {
  std::string input;
  std::string out;
  std::string format = "jsonl";
  std::string study;
};

int cmd_ingest(const IngestArgs& args) {
  const auto parsed =
      ingest::parse_log_file(args.input, format_from_name(args.format));
  std::size_t n_events = 0;
  std::size_t n_errors = 0;
  for (const Session& s : parsed.sessions) {
    n_events += s.size();
    if (!args.study.empty() && s.study() != study_from_flag(args.study)) {
      std::cerr << "session " << s.session_id() << ": study mismatch ("
                << to_string(s.study()) << " != " << args.study << ")\n";
      ++n_errors;
    }
    const auto diags = ingest::validate_session(s);
    for (const auto& d : diags.errors) {
      std::cerr << "session " << d.session_id << " index " << d.event_index
                << ": " << d.message << '\n';
      ++n_errors;
    }
  }
  for (const auto& w : parsed.warnings) std::cerr << "warning: " << w << '\n';
  ingest::write_jsonl_file(parsed.sessions, args.out);
  ordered_json params;
  params["input"] = args.input;
  params["format"] = args.format;
  params["study"] = args.study;
  write_manifest(args.out, "ingest", 0, params, {args.input}, {args.out});
  std::cout << parsed.sessions.size() << " sessions, " << n_events
            << " events, " << n_errors << " errors\n";
  return n_errors == 0 ? 0 : 1;
}

struct NonstatArgs {
  std::string input;
  std::string out;
  std::string study;
  std::string test = "wilcoxon";
  double split = 0.5;
  std::size_t window = 5;
  std::string config;
};

int cmd_nonstat(const NonstatArgs& args) {
  const Study study = study_from_flag(args.study);
  EnvSettings settings;
  if (!args.config.empty()) settings = load_env_settings(args.config);
  const auto parsed = ingest::parse_log_file(args.input, ingest::Format::jsonl);
  const auto users = sequences_for_study(parsed.sessions, study, settings);
  const auto targets = stats::battery_targets(users);

  std::vector<stats::BatteryRow> rows;
  stats::TestKind kind;
  if (args.test == "wilcoxon") {
    kind = stats::TestKind::wilcoxon_signed_rank;
    rows = stats::wilcoxon_battery(users, targets, args.split);
  } else if (args.test == "mannwhitney") {
    kind = stats::TestKind::mann_whitney_u;
    rows = stats::mann_whitney_battery(users, targets, args.split,
                                       args.window);
  } else {
    throw UsageError("unknown test: " + args.test +
                     " (expected wilcoxon or mannwhitney)");
  }

  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + args.out);
  out << "test,scope,target,statistic,p_value,method,n1,n2,split,window,"
         "degenerate\n";
  for (const auto& row : rows) {
    out << to_string(kind) << ',' << csv_field(row.scope) << ','
        << csv_field(row.target) << ',' << fmt_double(row.result.statistic)
        << ',' << fmt_double(row.result.p_value) << ','
        << to_string(row.result.method) << ',' << row.result.n.first << ','
        << row.result.n.second << ',' << fmt_double(args.split) << ','
        << args.window << ',' << (row.result.degenerate ? 1 : 0) << '\n';
  }
  out.close();

  ordered_json params;
  params["study"] = args.study;
  params["test"] = args.test;
  params["split"] = args.split;
  params["window"] = args.window;
  params["config"] = args.config;
  write_manifest(args.out, "nonstat", 0, params, {args.input}, {args.out});
  std::cout << rows.size() << " test rows -> " << args.out << '\n';
  return rows.empty() ? 1 : 0;
}

struct EvalArgs {
  std::string input;
  std::string out;
  std::string study;
  std::string plan;
  std::string config;
  std::string format = "csv";
  std::int64_t seed = -1;  // <0: keep the plan's seed
};

int cmd_eval(const EvalArgs& args) {
  const Study study = study_from_flag(args.study);
  EnvSettings settings;
  if (!args.config.empty()) settings = load_env_settings(args.config);
  eval::EvalPlan plan = eval::plan_from_json(read_json_file(args.plan));
  if (args.seed >= 0) plan.seed = static_cast<std::uint64_t>(args.seed);

  const auto parsed = ingest::parse_log_file(args.input, ingest::Format::jsonl);
  const auto traces = traces_for_study(parsed.sessions, study, settings);
  const auto report = eval::run_eval(traces, plan);
  for (const auto& d : report.diagnostics) std::cerr << d << '\n';
  if (report.rows.empty()) {
    std::cerr << "no evaluable cells\n";
    return 1;
  }

  const auto format = args.format == "json" ? eval::ReportFormat::json
                                            : eval::ReportFormat::csv;
  if (args.format != "json" && args.format != "csv") {
    throw UsageError("unknown report format: " + args.format);
  }
  const auto written = eval::emit_report(report, args.out, format);

  ordered_json params;
  params["study"] = args.study;
  params["plan"] = eval::plan_to_json(plan);
  params["config"] = args.config;
  params["format"] = args.format;
  std::vector<std::string> outputs;
  for (const auto& p : written) outputs.push_back(p.string());
  write_manifest(written.front(), "eval", plan.seed, params, {args.input},
                 outputs);
  std::cout << report.rows.size() << " cells -> " << written.front().string()
            << '\n';
  return 0;
}

struct SimulateArgs {
  std::string scenario;
  std::string out;
  std::int64_t seed = -1;
};

int cmd_simulate(const SimulateArgs& args) {
  sim::SimScenario scenario = sim::scenario_from_json(
      read_json_file(args.scenario));
  if (args.seed >= 0) scenario.seed = static_cast<std::uint64_t>(args.seed);
  const auto sessions = sim::simulate(scenario);
  ingest::write_jsonl_file(sessions, args.out);
  std::size_t n_events = 0;
  for (const Session& s : sessions) n_events += s.size();
  ordered_json params;
  params["scenario"] = args.scenario;
  params["kind"] = std::string(to_string(scenario.kind));
  write_manifest(args.out, "simulate", scenario.seed, params, {args.scenario},
                 {args.out});
  std::cout << sessions.size() << " sessions, " << n_events << " events -> "
            << args.out << '\n';
  return 0;
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string out;
};

int cmd_report(const ReportArgs& args) {
  std::string header;
  std::vector<std::string> rows;
  std::set<std::string> seen;
  for (const auto& path : args.inputs) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) continue;  // empty file
    if (header.empty()) {
      header = line;
    } else if (line != header) {
      throw ValidationError(path + ": header differs from the first input");
    }
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (seen.insert(line).second) rows.push_back(line);
    }
  }
  if (rows.empty()) {
    std::cerr << "no rows to merge\n";
    return 1;
  }
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + args.out);
  out << header << '\n';
  for (const auto& row : rows) out << row << '\n';
  out.close();
  ordered_json params;
  params["inputs"] = args.inputs;
  write_manifest(args.out, "report", 0, params, args.inputs, {args.out});
  std::cout << rows.size() << " rows -> " << args.out << '\n';
  return 0;
}

}  // namespace

EnvSettings env_settings_from_json(const ordered_json& j) {
  EnvSettings s;
  if (!j.is_object()) throw UsageError("config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "coarse_threshold") {
      s.coarse_threshold = value.get<int>();
    } else if (key == "max_zoom") {
      s.max_zoom = value.get<int>();
    } else if (key == "immens_arms") {
      s.immens_arms = value.get<std::vector<std::string>>();
    } else if (key == "consolidation") {
      for (const auto& [raw, high] : value.items()) {
        s.consolidation[raw] = high.get<std::string>();
      }
    } else if (key == "ground_truth") {
      std::map<std::string, std::set<std::string>> tasks;
      for (const auto& [task, attrs] : value.items()) {
        auto list = attrs.get<std::vector<std::string>>();
        tasks[task] = std::set<std::string>(list.begin(), list.end());
      }
      s.truth = env::GroundTruth(std::move(tasks));
    } else if (key == "cmab_subset_size") {
      s.cmab_subset_size = value.get<std::size_t>();
    } else {
      throw UsageError("config: unknown key \"" + key + "\"");
    }
  }
  return s;
}

EnvSettings load_env_settings(const std::filesystem::path& path) {
  return env_settings_from_json(read_json_file(path));
}

std::vector<env::Trace> traces_for_study(const std::vector<Session>& sessions,
                                         Study study,
                                         const EnvSettings& settings) {
  std::vector<env::Trace> traces;
  auto arms = settings.immens_arms;
  if (study == Study::immens && arms.empty()) arms = derive_arms(sessions);
  auto consolidation = settings.consolidation;
  if (study == Study::tableau && consolidation.empty()) {
    consolidation = derive_identity_map(sessions);
  }
  for (const Session& s : sessions) {
    switch (study) {
      case Study::forecache:
        traces.push_back(env::to_trace(env::map_forecache(
            s, settings.coarse_threshold, settings.max_zoom)));
        break;
      case Study::immens:
        traces.push_back(env::to_trace(env::map_immens(s, arms)));
        break;
      case Study::tableau:
        if (settings.truth.empty()) {
          throw ValidationError(
              "tableau evaluation requires ground_truth in --config");
        }
        traces.push_back(env::to_trace(
            env::map_tableau(s, consolidation, settings.truth),
            settings.cmab_subset_size));
        break;
      case Study::synthetic:
        throw UsageError(
            "synthetic sessions carry no formalization; pass the study the "
            "scenario generated");
    }
  }
  return traces;
}

std::vector<stats::UserSequence> sequences_for_study(
    const std::vector<Session>& sessions, Study study,
    const EnvSettings& settings) {
  std::vector<stats::UserSequence> users;
  auto arms = settings.immens_arms;
  if (study == Study::immens && arms.empty()) arms = derive_arms(sessions);
  auto consolidation = settings.consolidation;
  if (study == Study::tableau && consolidation.empty()) {
    consolidation = derive_identity_map(sessions);
  }
  for (const Session& s : sessions) {
    stats::UserSequence seq;
    seq.user_id = s.user_id();
    switch (study) {
      case Study::forecache: {
        const auto trace = env::map_forecache(s, settings.coarse_threshold,
                                              settings.max_zoom);
        for (const auto& step : trace.steps) {
          seq.labels.push_back({std::string(env::to_string(step.state))});
        }
        break;
      }
      case Study::immens: {
        const auto trace = env::map_immens(s, arms);
        for (const auto& step : trace.steps) {
          seq.labels.push_back({step.arm});
        }
        break;
      }
      case Study::tableau: {
        for (const Event& e : s.events()) {
          auto it = e.params.find("attributes");
          if (it == e.params.end() || !it->is_array()) {
            throw ValidationError("missing field: attributes @ index " +
                                  std::to_string(e.index));
          }
          std::vector<std::string> raw;
          for (const auto& v : *it) raw.push_back(v.get<std::string>());
          const auto consolidated = env::consolidate(raw, consolidation);
          seq.labels.emplace_back(consolidated.begin(), consolidated.end());
        }
        break;
      }
      case Study::synthetic:
        throw UsageError("pass the study the scenario generated");
    }
    users.push_back(std::move(seq));
  }
  return users;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"explearn: sequential-decision analysis of exploration logs"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  auto* ing = app.add_subcommand(
      "ingest", "Parse and validate an interaction log into sessions");
  ing->add_option("--input", ingest_args.input, "log file")->required();
  ing->add_option("--out", ingest_args.out, "normalized sessions file (jsonl)")
      ->required();
  ing->add_option("--format", ingest_args.format, "input format: jsonl or csv")
      ->capture_default_str();
  ing->add_option("--study", ingest_args.study,
                  "assert every session belongs to this study");

  NonstatArgs nonstat_args;
  auto* ns = app.add_subcommand(
      "nonstat", "Run a non-stationarity test battery over sessions");
  ns->add_option("--input", nonstat_args.input, "sessions file (jsonl)")
      ->required();
  ns->add_option("--out", nonstat_args.out, "results CSV")->required();
  ns->add_option("--study", nonstat_args.study,
                 "forecache, immens, or tableau")
      ->required();
  ns->add_option("--test", nonstat_args.test,
                 "wilcoxon (cohort) or mannwhitney (per user)")
      ->capture_default_str();
  ns->add_option("--split", nonstat_args.split, "partition fraction")
      ->capture_default_str();
  ns->add_option("--window", nonstat_args.window, "preference-series window")
      ->capture_default_str();
  ns->add_option("--config", nonstat_args.config, "mapper settings JSON");

  EvalArgs eval_args;
  auto* ev = app.add_subcommand(
      "eval", "Thresholded next-action prediction evaluation");
  ev->add_option("--input", eval_args.input, "sessions file (jsonl)")
      ->required();
  ev->add_option("--out", eval_args.out, "report base path (no extension)")
      ->required();
  ev->add_option("--study", eval_args.study, "forecache, immens, or tableau")
      ->required();
  ev->add_option("--plan", eval_args.plan, "evaluation plan JSON")->required();
  ev->add_option("--config", eval_args.config, "mapper settings JSON");
  ev->add_option("--format", eval_args.format, "csv or json")
      ->capture_default_str();
  ev->add_option("--seed", eval_args.seed, "override the plan seed");

  SimulateArgs sim_args;
  auto* si = app.add_subcommand("simulate",
                                "Generate synthetic sessions from a scenario");
  si->add_option("--scenario", sim_args.scenario, "scenario JSON")->required();
  si->add_option("--out", sim_args.out, "sessions file (jsonl)")->required();
  si->add_option("--seed", sim_args.seed, "override the scenario seed");

  ReportArgs report_args;
  auto* re = app.add_subcommand("report", "Merge report CSV files");
  re->add_option("--input", report_args.inputs, "report CSVs")
      ->required()
      ->expected(-1);
  re->add_option("--out", report_args.out, "merged CSV")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (ing->parsed()) return cmd_ingest(ingest_args);
    if (ns->parsed()) return cmd_nonstat(nonstat_args);
    if (ev->parsed()) return cmd_eval(eval_args);
    if (si->parsed()) return cmd_simulate(sim_args);
    if (re->parsed()) return cmd_report(report_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace explearn::cli
