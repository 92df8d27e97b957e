#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "explearn/core.hpp"

// Parse, validate, and serialize interaction logs. The canonical interchange
// format is line-delimited JSON with the Event field names as keys
// (session_id, user_id, study, index, raw_action, params, annotation); a CSV
// reader with a declared header covers tabular exports, with params.*
// columns flattened under dotted names.

namespace explearn::ingest {

enum class Format { jsonl, csv };

// Malformed record; carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ParseResult {
  std::vector<Session> sessions;
  // non-fatal notes (e.g. unknown annotation labels mapped to `none`)
  std::vector<std::string> warnings;
};

// Parse a whole stream; events are grouped by session_id and sorted by
// index. Throws ParseError on malformed records or duplicate
// (session, index) pairs.
ParseResult parse_log(std::istream& in, Format format);
ParseResult parse_log_file(const std::filesystem::path& path, Format format);

// Structured per-event validation findings; never aborts mid-batch.
struct Diagnostic {
  std::string session_id;
  std::int64_t event_index = 0;
  std::string message;
};

struct Diagnostics {
  std::vector<Diagnostic> errors;
  bool ok() const { return errors.empty(); }
};

// Study-specific field presence and range checks: forecache events need
// zoom_level (integer in [0, max_zoom]) and snow_level (in [0, 1]); immens
// events need visualization; tableau events need an attributes list.
Diagnostics validate_session(const Session& session, int max_zoom = 6);

// Canonical line-delimited serialization; parse(write(x)) == x.
void write_jsonl(const std::vector<Session>& sessions, std::ostream& out);
void write_jsonl_file(const std::vector<Session>& sessions,
                      const std::filesystem::path& path);

nlohmann::ordered_json event_to_json(const Event& e);

}  // namespace explearn::ingest
