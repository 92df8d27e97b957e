#include "explearn/core.hpp"

#include <algorithm>
#include <cmath>

namespace explearn {

std::string_view to_string(Study s) {
  switch (s) {
    case Study::forecache: return "forecache";
    case Study::immens: return "immens";
    case Study::tableau: return "tableau";
    case Study::synthetic: return "synthetic";
  }
  return "synthetic";
}

std::optional<Study> study_from_string(std::string_view s) {
  if (s == "forecache") return Study::forecache;
  if (s == "immens") return Study::immens;
  if (s == "tableau") return Study::tableau;
  if (s == "synthetic") return Study::synthetic;
  return std::nullopt;
}

std::string_view to_string(Annotation a) {
  switch (a) {
    case Annotation::none: return "none";
    case Annotation::observation: return "observation";
    case Annotation::insight: return "insight";
    case Annotation::hypothesis: return "hypothesis";
    case Annotation::answer: return "answer";
    case Annotation::generalization: return "generalization";
    case Annotation::confirmation: return "confirmation";
    case Annotation::config: return "config";
  }
  return "none";
}

std::optional<Annotation> annotation_from_string(std::string_view s) {
  if (s == "none" || s.empty()) return Annotation::none;
  if (s == "observation") return Annotation::observation;
  if (s == "insight") return Annotation::insight;
  if (s == "hypothesis") return Annotation::hypothesis;
  if (s == "answer") return Annotation::answer;
  if (s == "generalization") return Annotation::generalization;
  if (s == "confirmation") return Annotation::confirmation;
  if (s == "config") return Annotation::config;
  return std::nullopt;
}

Session Session::make(std::vector<Event> events,
                      std::map<std::string, std::string> meta) {
  if (events.empty()) {
    throw ValidationError("session must contain at least one event");
  }
  const std::string& sid = events.front().session_id;
  const Study study = events.front().study;
  std::int64_t prev_index = -1;
  bool first = true;
  for (const Event& e : events) {
    if (e.session_id != sid) {
      throw ValidationError("session " + sid +
                            ": mixed session_id values in event list");
    }
    if (e.study != study) {
      throw ValidationError("session " + sid + ": mixed study values");
    }
    if (!first && e.index <= prev_index) {
      throw ValidationError("session " + sid +
                            ": event indices must be strictly increasing (" +
                            std::to_string(prev_index) + " then " +
                            std::to_string(e.index) + ")");
    }
    if (e.index < 0) {
      throw ValidationError("session " + sid + ": negative event index");
    }
    prev_index = e.index;
    first = false;
  }
  return Session(std::move(events), std::move(meta));
}

ActionSpace ActionSpace::discrete(std::vector<std::string> actions) {
  if (actions.empty()) {
    throw UsageError("discrete action space requires at least one action");
  }
  std::set<std::string> distinct(actions.begin(), actions.end());
  if (distinct.size() != actions.size()) {
    throw UsageError("action ids must be distinct");
  }
  ActionSpace s;
  s.kind = Kind::discrete;
  s.actions = std::move(actions);
  return s;
}

ActionSpace ActionSpace::subset(std::vector<std::string> universe,
                                std::size_t subset_size) {
  if (universe.empty()) {
    throw UsageError("subset action space requires a non-empty item universe");
  }
  std::set<std::string> distinct(universe.begin(), universe.end());
  if (distinct.size() != universe.size()) {
    throw UsageError("item ids must be distinct");
  }
  if (subset_size == 0 || subset_size > universe.size()) {
    throw UsageError("subset_size must be in [1, |item_universe|]");
  }
  ActionSpace s;
  s.kind = Kind::subset;
  s.item_universe = std::move(universe);
  s.subset_size = subset_size;
  return s;
}

std::optional<std::size_t> ActionSpace::index_of(std::string_view id) const {
  const auto& opts = options();
  for (std::size_t i = 0; i < opts.size(); ++i) {
    if (opts[i] == id) return i;
  }
  return std::nullopt;
}

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw UsageError("uniform_index: n must be positive");
  // rejection sampling to avoid modulo bias
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::int64_t Rng::geometric(double p) {
  if (!(p > 0.0) || p > 1.0) {
    throw UsageError("geometric: p must lie in (0, 1]");
  }
  if (p == 1.0) return 1;
  const double u = uniform();
  const double draw = std::floor(std::log1p(-u) / std::log1p(-p)) + 1.0;
  return static_cast<std::int64_t>(std::max(1.0, draw));
}

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t stream) {
  Rng mix(seed ^ (0xD1B54A32D192ED03ull * (stream + 1)));
  return mix.next_u64();
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw UsageError("softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  if (!std::isfinite(mx)) throw UsageError("softmax: non-finite input");
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::size_t argmax_tiebreak(std::span<const double> values, Rng& rng) {
  if (values.empty()) throw UsageError("argmax_tiebreak: empty input");
  double best = values[0];
  for (double v : values) {
    if (!std::isfinite(v)) throw UsageError("argmax_tiebreak: non-finite value");
    best = std::max(best, v);
  }
  std::size_t tied = 0;
  for (double v : values) {
    if (v == best) ++tied;
  }
  std::size_t pick = rng.uniform_index(tied);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == best && pick-- == 0) return i;
  }
  return values.size() - 1;  // unreachable
}

}  // namespace explearn
