#include <doctest.h>

#include <algorithm>

#include "explearn/environments.hpp"

using namespace explearn;
using namespace explearn::env;

namespace {

Event forecache_event(std::int64_t idx, const std::string& action, int zoom,
                      double snow) {
  Event e;
  e.session_id = "fc1";
  e.user_id = "u1";
  e.study = Study::forecache;
  e.index = idx;
  e.raw_action = action;
  e.params["zoom_level"] = zoom;
  e.params["snow_level"] = snow;
  return e;
}

Event immens_event(std::int64_t idx, const std::string& viz, Annotation ann,
                   const std::string& action = "brush") {
  Event e;
  e.session_id = "im1";
  e.user_id = "u1";
  e.study = Study::immens;
  e.index = idx;
  e.raw_action = action;
  e.params["visualization"] = viz;
  e.annotation = ann;
  return e;
}

Event tableau_event(std::int64_t idx, const std::vector<std::string>& attrs) {
  Event e;
  e.session_id = "tb1";
  e.user_id = "u1";
  e.study = Study::tableau;
  e.index = idx;
  e.raw_action = "select_attributes";
  e.params["attributes"] = attrs;
  return e;
}

}  // namespace

TEST_CASE("forecache stage mapping and rewards") {
  auto session = Session::make({
      forecache_event(0, "pan", 1, 0.3),      // foraging (coarse pan)
      forecache_event(1, "zoom_in", 4, 0.8),  // navigation
      forecache_event(2, "pan", 4, 0.8),      // sensemaking (fine pan)
      forecache_event(3, "pan", 4, 0.0),      // sensemaking, snow 0
  });
  auto trace = map_forecache(session, 3, 6);
  REQUIRE(trace.steps.size() == 3);

  CHECK(trace.steps[0].state == MdpState::foraging);
  CHECK(trace.steps[0].action == MdpAction::switch_stage);
  CHECK(trace.steps[0].reward == doctest::Approx(0.8 * 4).epsilon(1e-12));

  CHECK(trace.steps[1].state == MdpState::navigation);
  CHECK(trace.steps[1].action == MdpAction::switch_sense);
  CHECK(trace.steps[1].reward == doctest::Approx(3.2).epsilon(1e-12));

  CHECK(trace.steps[2].state == MdpState::sensemaking);
  CHECK(trace.steps[2].action == MdpAction::maintain);
  CHECK(trace.steps[2].reward == 0.0);
}

TEST_CASE("forecache alternating pan/zoom/pan walks the three stages") {
  auto session = Session::make({
      forecache_event(0, "pan", 1, 0.5),
      forecache_event(1, "zoom_in", 6, 0.5),
      forecache_event(2, "pan", 6, 0.5),
  });
  auto trace = map_forecache(session);
  REQUIRE(trace.steps.size() == 2);
  CHECK(trace.steps[0].state == MdpState::foraging);
  CHECK(trace.steps[1].state == MdpState::navigation);
  CHECK(trace.steps[1].action == MdpAction::switch_sense);
}

TEST_CASE("forecache zoom 0 yields reward 0 regardless of snow") {
  auto session = Session::make({
      forecache_event(0, "pan", 3, 1.0),
      forecache_event(1, "pan", 0, 1.0),
  });
  auto trace = map_forecache(session);
  CHECK(trace.steps[0].reward == 0.0);
}

TEST_CASE("forecache rejects impossible and malformed input") {
  // direct foraging -> sensemaking jump
  auto bad = Session::make({
      forecache_event(0, "pan", 1, 0.5),
      forecache_event(1, "pan", 6, 0.5),
  });
  CHECK_THROWS_AS(map_forecache(bad), ValidationError);

  // missing snow field names the event index
  Event incomplete = forecache_event(1, "pan", 2, 0.5);
  incomplete.params.erase("snow_level");
  auto missing =
      Session::make({forecache_event(0, "pan", 1, 0.5), incomplete});
  CHECK_THROWS_WITH_AS(map_forecache(missing),
                       doctest::Contains("snow_level"), ValidationError);

  auto unknown = Session::make({
      forecache_event(0, "pan", 1, 0.5),
      forecache_event(1, "brush", 1, 0.5),
  });
  CHECK_THROWS_AS(map_forecache(unknown), ValidationError);

  auto high = Session::make({forecache_event(0, "pan", 9, 0.5),
                             forecache_event(1, "pan", 9, 0.5)});
  CHECK_THROWS_AS(map_forecache(high), ValidationError);
}

TEST_CASE("forecache coarse threshold is configurable") {
  auto session = Session::make({
      forecache_event(0, "pan", 3, 0.5),
      forecache_event(1, "pan", 3, 0.5),
  });
  CHECK(map_forecache(session, 3).steps[0].state == MdpState::foraging);
  CHECK(map_forecache(session, 2).steps[0].state == MdpState::sensemaking);
}

TEST_CASE("immens annotation rewards") {
  const std::vector<std::string> arms{"carriers", "month", "scatterplot",
                                      "year"};
  auto session = Session::make({
      immens_event(0, "carriers", Annotation::hypothesis),
      immens_event(1, "carriers", Annotation::observation),
      immens_event(2, "year", Annotation::config),
      immens_event(3, "month", Annotation::none),
      immens_event(4, "scatterplot", Annotation::insight),
      immens_event(5, "year", Annotation::answer),
      immens_event(6, "year", Annotation::generalization),
      immens_event(7, "year", Annotation::confirmation),
  });
  auto trace = map_immens(session, arms);
  REQUIRE(trace.steps.size() == 8);
  CHECK(trace.steps[0].arm == "carriers");
  CHECK(trace.steps[0].reward == 1.0);
  CHECK(trace.steps[1].reward == doctest::Approx(0.1));
  CHECK(trace.steps[2].reward == 0.0);
  CHECK(trace.steps[3].reward == 0.0);
  CHECK(trace.steps[4].reward == 1.0);
  CHECK(trace.steps[5].reward == 1.0);
  CHECK(trace.steps[6].reward == 1.0);
  CHECK(trace.steps[7].reward == 1.0);

  // every reward lies in {0, 0.1, 1}
  for (const auto& step : trace.steps) {
    CHECK((step.reward == 0.0 || step.reward == 0.1 || step.reward == 1.0));
  }

  // the context of step t is the previous raw interaction
  CHECK_FALSE(trace.steps[0].context.has_value());
  CHECK(trace.steps[1].context == "brush");

  auto outside = Session::make({immens_event(0, "heatmap", Annotation::none)});
  CHECK_THROWS_AS(map_immens(outside, arms), ValidationError);
}

TEST_CASE("consolidation") {
  ConsolidationMap map{{"t_max", "temp_max"},
                       {"t_maxf", "temp_max"},
                       {"t_min", "temp_min"},
                       {"t_minf", "temp_min"},
                       {"wind", "wind"}};
  CHECK(consolidate({"t_max", "t_maxf"}, map) ==
        std::set<std::string>{"temp_max"});
  CHECK(consolidate({"t_min", "t_minf"}, map) ==
        std::set<std::string>{"temp_min"});
  CHECK(consolidate({}, map).empty());
  CHECK(consolidate({"wind"}, map) == std::set<std::string>{"wind"});
  CHECK_THROWS_WITH_AS(consolidate({"mystery"}, map),
                       doctest::Contains("mystery"), ValidationError);
}

TEST_CASE("tableau meta-actions and intersection rewards") {
  ConsolidationMap identity;
  for (const auto& a : {"date", "temp_max", "temp_min", "wind", "fog"}) {
    identity.emplace(a, a);
  }
  GroundTruth truth({{"T3", {"temp_max", "temp_min", "date"}}});

  auto session = Session::make(
      {
          tableau_event(0, {"temp_max"}),                        // add
          tableau_event(1, {"temp_max", "temp_min", "date"}),    // add
          tableau_event(2, {"temp_max", "temp_min", "date"}),    // keep
          tableau_event(3, {"temp_max", "temp_min"}),            // drop
          tableau_event(4, {"temp_max", "wind"}),                // mixed -> add
          tableau_event(5, {}),                                  // reset
      },
      {{"task", "T3"}});
  auto trace = map_tableau(session, identity, truth);
  REQUIRE(trace.steps.size() == 6);
  CHECK(trace.steps[0].meta_action == MetaAction::add);
  CHECK(trace.steps[1].meta_action == MetaAction::add);
  CHECK(trace.steps[2].meta_action == MetaAction::keep);
  CHECK(trace.steps[3].meta_action == MetaAction::drop);
  CHECK(trace.steps[4].meta_action == MetaAction::add);
  CHECK(trace.steps[4].added == std::set<std::string>{"wind"});
  CHECK(trace.steps[4].dropped == std::set<std::string>{"temp_min"});
  CHECK(trace.steps[5].meta_action == MetaAction::reset);

  CHECK(trace.steps[0].reward == 1.0);
  CHECK(trace.steps[1].reward == 3.0);  // full intersection with the goal
  CHECK(trace.steps[2].reward == 3.0);
  CHECK(trace.steps[3].reward == 2.0);
  CHECK(trace.steps[4].reward == 1.0);
  CHECK(trace.steps[5].reward == 0.0);  // empty set, empty intersection
}

TEST_CASE("tableau classification round-trips") {
  ConsolidationMap identity;
  std::vector<std::string> attrs;
  for (int i = 0; i < 6; ++i) {
    attrs.push_back("a" + std::to_string(i));
    identity.emplace(attrs.back(), attrs.back());
  }
  GroundTruth truth({{"T", {"a0", "a1"}}});
  Rng rng(33);

  std::vector<Event> events;
  std::set<std::string> current;
  for (int i = 0; i < 60; ++i) {
    // random walk over subsets, with occasional resets
    std::set<std::string> next = current;
    const double move = rng.uniform();
    if (move < 0.1) {
      next.clear();
    } else {
      for (int change = 0; change < 2; ++change) {
        const auto& attr = attrs[rng.uniform_index(attrs.size())];
        if (rng.uniform() < 0.5) next.insert(attr);
        else next.erase(attr);
      }
    }
    events.push_back(
        tableau_event(i, {next.begin(), next.end()}));
    current = next;
  }
  auto session = Session::make(std::move(events), {{"task", "T"}});
  auto trace = map_tableau(session, identity, truth);

  std::set<std::string> prev;
  for (const auto& step : trace.steps) {
    // applying the recorded add/drop sets to X_{t-1} reproduces X_t
    std::set<std::string> rebuilt = prev;
    for (const auto& a : step.added) rebuilt.insert(a);
    for (const auto& d : step.dropped) rebuilt.erase(d);
    CHECK(rebuilt == step.items);

    switch (step.meta_action) {
      case MetaAction::keep:
        CHECK(step.items == prev);
        break;
      case MetaAction::reset:
        CHECK(step.items.empty());
        CHECK_FALSE(prev.empty());
        break;
      case MetaAction::add:
        CHECK_FALSE(step.added.empty());
        break;
      case MetaAction::drop:
        CHECK(step.added.empty());
        CHECK_FALSE(step.dropped.empty());
        break;
    }
    prev = step.items;
  }
}

TEST_CASE("mapping is deterministic") {
  auto session = Session::make({
      forecache_event(0, "pan", 1, 0.25),
      forecache_event(1, "zoom_in", 2, 0.5),
      forecache_event(2, "zoom_out", 1, 0.75),
      forecache_event(3, "pan", 1, 1.0),
  });
  auto a = map_forecache(session);
  auto b = map_forecache(session);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].state == b.steps[i].state);
    CHECK(a.steps[i].action == b.steps[i].action);
    CHECK(a.steps[i].reward == b.steps[i].reward);
  }
}

TEST_CASE("unified traces") {
  auto session = Session::make({
      forecache_event(0, "pan", 1, 0.5),
      forecache_event(1, "zoom_in", 2, 0.5),
      forecache_event(2, "zoom_out", 1, 0.25),
  });
  auto trace = to_trace(map_forecache(session));
  CHECK(trace.space.kind == ActionSpace::Kind::discrete);
  CHECK(trace.space.actions.size() == 4);
  REQUIRE(trace.steps.size() == 2);
  CHECK(trace.steps[0].state == "foraging");
  CHECK(trace.steps[0].action == "switch");
  CHECK(trace.steps[1].action == "maintain");

  auto labels = label_sets(trace);
  CHECK(labels[0] == std::vector<std::string>{"foraging"});
  CHECK(labels[1] == std::vector<std::string>{"navigation"});
}
