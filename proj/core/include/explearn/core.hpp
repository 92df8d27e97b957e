#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

// Shared domain types and deterministic numeric primitives used by every
// other module. All types here are immutable after construction and safe to
// share across evaluation workers.

namespace explearn {

// Raised when a caller violates a documented precondition (exit code 2 at
// the CLI boundary).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when input data breaks a documented invariant (exit code 1 at the
// CLI boundary).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Study { forecache, immens, tableau, synthetic };

std::string_view to_string(Study s);
std::optional<Study> study_from_string(std::string_view s);

// Closed annotation vocabulary. Unknown labels in input map to `none`
// (ingest emits a warning diagnostic rather than rejecting the record).
enum class Annotation {
  none,
  observation,
  insight,
  hypothesis,
  answer,
  generalization,
  confirmation,
  config,
};

std::string_view to_string(Annotation a);
std::optional<Annotation> annotation_from_string(std::string_view s);

// One raw timestamped interaction record. `params` is a JSON object holding
// study-specific fields (zoom_level, snow_level, visualization, attributes,
// ...); unknown extra fields are preserved as-is.
struct Event {
  std::string session_id;
  std::string user_id;
  Study study = Study::synthetic;
  std::int64_t index = 0;
  std::string raw_action;
  nlohmann::json params = nlohmann::json::object();
  Annotation annotation = Annotation::none;
};

// An ordered, validated group of events sharing session_id and study.
// Construction enforces the hard invariants: non-empty, uniform
// session_id/study, strictly increasing indices.
class Session {
 public:
  static Session make(std::vector<Event> events,
                      std::map<std::string, std::string> meta = {});

  const std::vector<Event>& events() const { return events_; }
  const std::map<std::string, std::string>& meta() const { return meta_; }
  const std::string& session_id() const { return events_.front().session_id; }
  const std::string& user_id() const { return events_.front().user_id; }
  Study study() const { return events_.front().study; }
  std::size_t size() const { return events_.size(); }

 private:
  Session(std::vector<Event> events, std::map<std::string, std::string> meta)
      : events_(std::move(events)), meta_(std::move(meta)) {}

  std::vector<Event> events_;
  std::map<std::string, std::string> meta_;
};

// Normalized decision-trace element. Exactly one of {action, items} is the
// prediction target, depending on the formalization that produced it.
struct Step {
  std::optional<std::string> state;
  std::string action;
  double reward = 0.0;
  std::optional<std::string> context;
  std::optional<std::vector<std::string>> items;
};

// Action space a learner operates over: either a discrete set of action ids
// or fixed-size subsets of an item universe.
struct ActionSpace {
  enum class Kind { discrete, subset };

  Kind kind = Kind::discrete;
  std::vector<std::string> actions;
  std::vector<std::string> item_universe;
  std::size_t subset_size = 0;

  static ActionSpace discrete(std::vector<std::string> actions);
  static ActionSpace subset(std::vector<std::string> universe,
                            std::size_t subset_size);

  // The ids a learner scores over: actions (discrete) or items (subset).
  const std::vector<std::string>& options() const {
    return kind == Kind::discrete ? actions : item_universe;
  }
  std::size_t n_options() const { return options().size(); }
  std::optional<std::size_t> index_of(std::string_view id) const;
};

// Ranked top-k prediction; scores are non-increasing and ids distinct.
struct Prediction {
  std::vector<std::pair<std::string, double>> ranked;
  std::size_t k = 0;

  const std::string& top() const { return ranked.front().first; }
};

// Deterministic RNG. All randomness in the toolkit flows from an explicit
// 64-bit seed through this class; there is no global RNG. The uniform
// helpers are hand-rolled so draws are identical across platforms and
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // splitmix-style warmup so small seeds diverge immediately
    next_u64();
    next_u64();
  }

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n);

  // Bernoulli draw with success probability p.
  bool bernoulli(double p) { return uniform() < p; }

  // Geometric draw on {1, 2, ...} with success probability p per trial.
  std::int64_t geometric(double p);

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  // Stable stream derivation: independent generator for (seed, stream).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream);

 private:
  std::uint64_t state_;
};

// FNV-1a over a string, used for deterministic per-cell seed derivation.
std::uint64_t stable_hash(std::string_view s);

// Numerically stable exp-normalize; output sums to 1 within 1e-12 and
// preserves the input ordering. Throws UsageError on empty input.
std::vector<double> softmax(std::span<const double> logits);

// Index of a maximal value; ties are broken uniformly at random using rng.
// Throws UsageError on empty input.
std::size_t argmax_tiebreak(std::span<const double> values, Rng& rng);

}  // namespace explearn
