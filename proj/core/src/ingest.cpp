#include "explearn/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace explearn::ingest {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct RawRecord {
  Event event;
  std::size_t line = 0;
  std::string dataset;  // optional meta passthrough
  std::string task;
};

Event event_from_json(const json& j, std::size_t line,
                      std::vector<std::string>& warnings) {
  if (!j.is_object()) throw ParseError(line, "record is not an object");
  Event e;
  if (!j.contains("session_id") || !j["session_id"].is_string()) {
    throw ParseError(line, "missing required field \"session_id\"");
  }
  e.session_id = j["session_id"].get<std::string>();
  if (!j.contains("index") || !j["index"].is_number_integer()) {
    throw ParseError(line, "missing required field \"index\"");
  }
  e.index = j["index"].get<std::int64_t>();
  if (!j.contains("raw_action") || !j["raw_action"].is_string()) {
    throw ParseError(line, "missing required field \"raw_action\"");
  }
  e.raw_action = j["raw_action"].get<std::string>();
  e.user_id = j.value("user_id", e.session_id);
  if (j.contains("study")) {
    auto st = study_from_string(j["study"].get<std::string>());
    if (!st.has_value()) {
      throw ParseError(line, "unknown study \"" +
                                 j["study"].get<std::string>() + "\"");
    }
    e.study = *st;
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) {
      throw ParseError(line, "params must be an object");
    }
    e.params = j["params"];
  }
  if (j.contains("annotation")) {
    const auto label = j["annotation"].get<std::string>();
    auto a = annotation_from_string(label);
    if (a.has_value()) {
      e.annotation = *a;
    } else {
      // tolerate heterogeneous log sources: degrade to `none` with a note
      warnings.push_back("line " + std::to_string(line) +
                         ": unknown annotation \"" + label +
                         "\" mapped to none");
    }
  }
  return e;
}

// Minimal RFC4180-style field splitter (quotes and doubled quotes; no
// embedded newlines).
std::vector<std::string> split_csv_line(const std::string& line,
                                        std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(line_no, "unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

json csv_value(const std::string& field, const std::string& text) {
  if (field == "attributes") {
    json arr = json::array();
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, '|')) {
      if (!item.empty()) arr.push_back(item);
    }
    return arr;
  }
  // try integer, then real, else keep the label
  {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && p == text.data() + text.size()) return v;
  }
  try {
    std::size_t pos = 0;
    const double d = std::stod(text, &pos);
    if (pos == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

std::vector<RawRecord> parse_jsonl_records(std::istream& in,
                                           std::vector<std::string>& warnings) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& err) {
      throw ParseError(line_no, std::string("invalid JSON: ") + err.what());
    }
    RawRecord rec;
    rec.event = event_from_json(j, line_no, warnings);
    rec.line = line_no;
    rec.dataset = j.value("dataset", "");
    rec.task = j.value("task", "");
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<RawRecord> parse_csv_records(std::istream& in,
                                         std::vector<std::string>& warnings) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ParseError(1, "CSV input requires a header row");
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line, line_no);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw ParseError(line_no, "expected " + std::to_string(header.size()) +
                                    " columns, found " +
                                    std::to_string(fields.size()));
    }
    json j = json::object();
    json params = json::object();
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& col = header[i];
      const std::string& text = fields[i];
      if (text.empty()) continue;
      if (col.rfind("params.", 0) == 0) {
        const std::string key = col.substr(7);
        params[key] = csv_value(key, text);
      } else if (col == "index") {
        j[col] = csv_value(col, text);
      } else {
        j[col] = text;
      }
    }
    if (!params.empty()) j["params"] = params;
    RawRecord rec;
    rec.event = event_from_json(j, line_no, warnings);
    rec.line = line_no;
    rec.dataset = j.value("dataset", "");
    rec.task = j.value("task", "");
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

ParseResult parse_log(std::istream& in, Format format) {
  ParseResult result;
  auto records = format == Format::jsonl
                     ? parse_jsonl_records(in, result.warnings)
                     : parse_csv_records(in, result.warnings);

  // group by session, keep meta from the first record that carries it
  std::map<std::string, std::vector<RawRecord>> by_session;
  for (auto& rec : records) {
    by_session[rec.event.session_id].push_back(std::move(rec));
  }
  for (auto& [sid, recs] : by_session) {
    std::stable_sort(recs.begin(), recs.end(),
                     [](const RawRecord& a, const RawRecord& b) {
                       return a.event.index < b.event.index;
                     });
    std::map<std::string, std::string> meta;
    std::vector<Event> events;
    events.reserve(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (i > 0 && recs[i].event.index == recs[i - 1].event.index) {
        throw ParseError(recs[i].line,
                         "duplicate (session, index) pair: " + sid + ", " +
                             std::to_string(recs[i].event.index));
      }
      if (meta.find("dataset") == meta.end() && !recs[i].dataset.empty()) {
        meta["dataset"] = recs[i].dataset;
      }
      if (meta.find("task") == meta.end() && !recs[i].task.empty()) {
        meta["task"] = recs[i].task;
      }
      events.push_back(std::move(recs[i].event));
    }
    result.sessions.push_back(Session::make(std::move(events), std::move(meta)));
  }
  return result;
}

ParseResult parse_log_file(const std::filesystem::path& path, Format format) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open input file: " + path.string());
  }
  return parse_log(in, format);
}

Diagnostics validate_session(const Session& session, int max_zoom) {
  Diagnostics diags;
  auto report = [&](const Event& e, std::string message) {
    diags.errors.push_back({e.session_id, e.index, std::move(message)});
  };
  // pans never change the zoom level; tracked so a coarse pan directly
  // followed by a fine pan (impossible under the interface) is a data error
  const Event* prev_pan_neighbor = nullptr;
  for (const Event& e : session.events()) {
    if (auto it = e.params.find("snow_level"); it != e.params.end()) {
      if (!it->is_number() || it->get<double>() < 0.0 ||
          it->get<double>() > 1.0) {
        report(e, "snow_level out of range [0, 1]");
      }
    }
    if (auto it = e.params.find("zoom_level"); it != e.params.end()) {
      const bool numeric = it->is_number();
      const double z = numeric ? it->get<double>() : -1.0;
      if (!numeric || z < 0.0 || z > max_zoom || z != std::floor(z)) {
        report(e, "zoom_level must be an integer in [0, " +
                      std::to_string(max_zoom) + "]");
      }
    }
    switch (session.study()) {
      case Study::forecache: {
        if (!e.params.contains("zoom_level")) {
          report(e, "missing field: zoom_level");
        }
        if (!e.params.contains("snow_level")) {
          report(e, "missing field: snow_level");
        }
        const bool is_pan = e.raw_action == "pan";
        const bool is_zoom = e.raw_action == "zoom_in" ||
                             e.raw_action == "zoom_out" ||
                             e.raw_action == "zoom";
        if (!is_pan && !is_zoom) {
          report(e, "unknown raw_action '" + e.raw_action +
                        "' for a pan/zoom log");
        }
        if (is_pan) {
          if (prev_pan_neighbor != nullptr &&
              e.params.value("zoom_level", -1.0) !=
                  prev_pan_neighbor->params.value("zoom_level", -1.0)) {
            report(e, "zoom_level changed between consecutive pans");
          }
          prev_pan_neighbor = &e;
        } else {
          prev_pan_neighbor = nullptr;
        }
        break;
      }
      case Study::immens:
        if (!e.params.contains("visualization") ||
            !e.params["visualization"].is_string()) {
          report(e, "missing field: visualization");
        }
        break;
      case Study::tableau:
        if (!e.params.contains("attributes") ||
            !e.params["attributes"].is_array()) {
          report(e, "missing field: attributes");
        }
        break;
      case Study::synthetic:
        break;
    }
  }
  return diags;
}

nlohmann::ordered_json event_to_json(const Event& e) {
  ordered_json j;
  j["session_id"] = e.session_id;
  j["user_id"] = e.user_id;
  j["study"] = std::string(to_string(e.study));
  j["index"] = e.index;
  j["raw_action"] = e.raw_action;
  j["params"] = e.params;
  j["annotation"] = std::string(to_string(e.annotation));
  return j;
}

void write_jsonl(const std::vector<Session>& sessions, std::ostream& out) {
  for (const Session& s : sessions) {
    const auto& meta = s.meta();
    for (const Event& e : s.events()) {
      ordered_json j = event_to_json(e);
      if (auto it = meta.find("dataset"); it != meta.end()) {
        j["dataset"] = it->second;
      }
      if (auto it = meta.find("task"); it != meta.end()) {
        j["task"] = it->second;
      }
      out << j.dump() << '\n';
    }
  }
}

void write_jsonl_file(const std::vector<Session>& sessions,
                      const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open output file: " + path.string());
  }
  write_jsonl(sessions, out);
}

}  // namespace explearn::ingest
