#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "kinetiq/kinetiq.hpp"
#include "support/fixtures.hpp"
#include "support/random.hpp"

using namespace kinetiq;
using nlohmann::json;
using Catch::Approx;

namespace {

json district_json(int id, double for_share = 0.4) {
  return {{"id", id},          {"population", 1200 * id}, {"favorability", 12.5 * id},
          {"unregistered", 0.1}, {"undecided", 0.25},      {"for", for_share},
          {"against", 0.2},    {"actions", {{"rally", 0}, {"fundraiser", 0}}}};
}

json playthrough_json(const std::string& id, int level, int turns, int districts = 4) {
  json pt{{"player_id", id}, {"level", level}, {"turns", json::array()}};
  for (int t = 0; t < turns; ++t) {
    json tj{{"turn", t}, {"total_votes", 40 * t}, {"budget", 100.0 + t}, {"duration_s", 20.0 + t},
            {"districts", json::array()}};
    for (int d = 1; d <= districts; ++d) tj["districts"].push_back(district_json(d));
    pt["turns"].push_back(tj);
  }
  return pt;
}

std::string line_of(const json& j) { return j.dump() + "\n"; }

json ext(const std::string& key) { return "https://kinetiq.example/xapi/ext/" + key; }

json turn_statement(const std::string& actor, const std::string& when, int districts = 4) {
  json dists = json::array();
  for (int d = 1; d <= districts; ++d) dists.push_back(district_json(d));
  json extensions;
  extensions[ext("total_votes").get<std::string>()] = 120;
  extensions[ext("budget").get<std::string>()] = 300.0;
  extensions[ext("duration_s").get<std::string>()] = 25.0;
  extensions[ext("districts").get<std::string>()] = dists;
  return {{"actor", {{"account", {{"name", actor}}}}},
          {"verb", {{"id", "https://kinetiq.example/verbs/turn-completed"}}},
          {"timestamp", when},
          {"result", {{"extensions", extensions}}}};
}

json action_statement(const std::string& actor, const std::string& verb, int district, const std::string& when) {
  json extensions;
  extensions[ext("district").get<std::string>()] = district;
  return {{"actor", {{"account", {{"name", actor}}}}},
          {"verb", {{"id", "https://kinetiq.example/verbs/" + verb}}},
          {"timestamp", when},
          {"context", {{"extensions", extensions}}}};
}

}  // namespace

TEST_CASE("parse a well-formed line", "[data]") {
  auto ds = parse_dataset(line_of(playthrough_json("alice", 1, 3)));
  CHECK(ds.district_count == 4);
  CHECK(ds.playthroughs.size() == 1);
  CHECK(ds.level == 1);
  CHECK(ds.point_count() == 3);
  CHECK(ds.action_vocabulary == std::vector<std::string>{"fundraiser", "rally"});
}

TEST_CASE("parse errors carry the line number", "[data]") {
  auto bad = playthrough_json("bob", 1, 2);
  bad["turns"][1]["districts"][2]["for"] = 1.3;
  try {
    parse_dataset(line_of(bad));
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("'for'") != std::string::npos);
  }

  std::string text;
  for (int i = 0; i < 6; ++i) text += line_of(playthrough_json("p" + std::to_string(i), 1, 2));
  text += "{\"player_id\": \"x\", \n";
  try {
    parse_dataset(text);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 7);
  }

  CHECK_THROWS_AS(parse_dataset(line_of(playthrough_json("a", 1, 2)) + line_of(playthrough_json("b", 2, 2))),
                  DataError);
  CHECK_THROWS_AS(parse_dataset(line_of(playthrough_json("a", 1, 2, 4)) + line_of(playthrough_json("b", 1, 2, 3))),
                  DataError);
  auto dup = playthrough_json("c", 1, 1);
  dup["turns"][0]["districts"][1]["id"] = 1;
  CHECK_THROWS_AS(parse_dataset(line_of(dup)), DataError);
  auto order = playthrough_json("d", 1, 2);
  order["turns"][1]["turn"] = 0;
  CHECK_THROWS_AS(parse_dataset(line_of(order)), DataError);
}

TEST_CASE("blank lines are skipped and empty input is an empty dataset", "[data]") {
  auto ds = parse_dataset("\n" + line_of(playthrough_json("a", 2, 1)) + "\n  \n");
  CHECK(ds.playthroughs.size() == 1);
  CHECK(ds.level == 2);
  CHECK(parse_dataset(std::string{}).empty());
}

TEST_CASE("serialize and parse round-trip at cohort scale", "[data]") {
  SimConfig c;
  c.seed = 378;
  c.n_players = 378;
  auto ds = generate_synthetic(c);
  REQUIRE(ds.playthroughs.size() == 378);
  auto text = serialize_dataset(ds);
  auto back = parse_dataset(text);
  CHECK(back == ds);
  CHECK(serialize_dataset(back) == text);
}

TEST_CASE("xAPI statements group by actor and sort by time", "[xapi]") {
  json stmts = json::array({turn_statement("ann", "2024-03-01T10:01:00Z"), turn_statement("ann", "2024-03-01T10:00:00Z")});
  stmts[0]["result"]["extensions"][ext("total_votes").get<std::string>()] = 999;
  auto res = ingest_xapi(stmts);
  REQUIRE(res.dataset.playthroughs.size() == 1);
  const auto& pt = res.dataset.playthroughs[0];
  REQUIRE(pt.turns.size() == 2);
  CHECK(pt.turns[0].turn_index == 0);
  CHECK(pt.turns[1].turn_index == 1);
  CHECK(pt.turns[0].total_votes == 120);
  CHECK(pt.turns[1].total_votes == 999);
}

TEST_CASE("xAPI action verbs set flags on their turn", "[xapi]") {
  json stmts = json::array({
      turn_statement("ben", "2024-03-01T10:00:00Z", 5),
      action_statement("ben", "rallied", 5, "2024-03-01T10:00:30Z"),
      turn_statement("ben", "2024-03-01T10:01:00Z", 5),
      turn_statement("ben", "2024-03-01T10:02:00Z", 5),
      json{{"verb", {{"id", "x/rallied"}}}, {"timestamp", "2024-03-01T10:00:00Z"}},
  });
  auto res = ingest_xapi(stmts);
  const auto& turns = res.dataset.playthroughs.at(0).turns;
  REQUIRE(turns.size() == 3);
  CHECK(turns[1].district(5)->actions.at("rally") == 1);
  CHECK(turns[0].district(5)->actions.at("rally") == 0);
  CHECK(turns[2].district(5)->actions.at("rally") == 0);
  CHECK(turns[1].district(4)->actions.at("rally") == 0);
  CHECK_FALSE(res.warnings.empty());

  CHECK_THROWS_AS(ingest_xapi(json::array({json{{"verb", "x"}}})), DataError);
}

TEST_CASE("registry domains", "[registry]") {
  Dataset ds;
  Playthrough pt;
  pt.player_id = "a";
  pt.turns = {fixtures::turn(0, 10, 100.0, 30.0), fixtures::turn(1, 20, 400.0, 30.0)};
  ds.playthroughs = {pt};
  finalize_dataset(ds);

  auto reg = build_registry(ds);
  CHECK(reg.domain(GlobalRef{GlobalField::budget}) == Domain{100.0, 400.0});
  CHECK(reg.domain(GlobalRef{GlobalField::duration}) == Domain{30.0, 31.0});
  REQUIRE(reg.warnings().size() == 1);
  CHECK(reg.warnings()[0].find("duration") != std::string::npos);
  CHECK(reg.domain(DistrictRef{2, DistrictField::undecided}) == Domain{0.0, 1.0});

  auto over = build_registry(ds, {{"favorability", {0.0, 100.0}}, {"duration", {0.0, 60.0}}});
  CHECK(over.domain(DistrictRef{3, DistrictField::favorability}) == Domain{0.0, 100.0});
  CHECK(over.domain(GlobalRef{GlobalField::duration}) == Domain{0.0, 60.0});
  CHECK(over.warnings().empty());

  CHECK_THROWS_AS(build_registry(Dataset{}), DataError);
}

TEST_CASE("registry enumerates refs", "[registry]") {
  auto ds = fixtures::grid(1, 2);
  auto reg = build_registry(ds);
  auto refs = reg.refs();
  CHECK(refs.size() == 35);
  CHECK(to_string(refs.front()) == "baseline");
  for (const auto& r : refs) {
    CHECK_FALSE(reg.resolve_error(r));
    CHECK(parse_parameter_ref(to_string(r)) == r);
  }
  CHECK(reg.resolve_error(DistrictRef{9, DistrictField::favorability}));
  CHECK(reg.resolve_error(ActionRef{"canvass", 1}));
  CHECK(parse_parameter_ref("district.3.for_share") == ParameterRef{DistrictRef{3, DistrictField::for_share}});
  CHECK(parse_parameter_ref("action.rally.district.5") == ParameterRef{ActionRef{"rally", 5}});
  CHECK_FALSE(parse_parameter_ref("district.0.undecided"));
  CHECK_FALSE(parse_parameter_ref("votes"));
  auto j = registry_json(reg);
  CHECK(j.size() == 35);
  CHECK(j["baseline"]["value"] == 1);
}

TEST_CASE("parameter_value examples", "[registry]") {
  Dataset ds;
  Playthrough pt;
  pt.player_id = "a";
  pt.turns = {fixtures::turn(0, 10, 0.0, 10.0, 5), fixtures::turn(1, 20, 250.0, 20.0, 5),
              fixtures::turn(2, 30, 1000.0, 30.0, 5)};
  pt.turns[1].districts[4].actions["rally"] = 1;
  ds.playthroughs = {pt};
  finalize_dataset(ds);
  auto reg = build_registry(ds);

  CHECK(parameter_value({0, 1}, ActionRef{"rally", 5}, ds, reg) == 1.0);
  CHECK(parameter_value({0, 0}, ActionRef{"rally", 5}, ds, reg) == 0.0);
  CHECK(parameter_value({0, 1}, GlobalRef{GlobalField::budget}, ds, reg) == 0.25);
  CHECK(parameter_value({0, 2}, BaselineRef{}, ds, reg) == 1.0);
  CHECK(parameter_value({0, 1}, DistrictRef{1, DistrictField::for_share}, ds, reg) == 0.4);
  CHECK(normalize(250.0, {0.0, 1000.0}) == 0.25);
  CHECK(normalize(-5.0, {0.0, 1.0}) == 0.0);
  CHECK(normalize(5.0, {0.0, 1.0}) == 1.0);
}

TEST_CASE("missing district yields zero and one warning", "[registry]") {
  auto ds = fixtures::grid(1, 2);
  auto reg = build_registry(ds);
  WarningLog::instance().reset();
  // a registry from a wider dataset resolves district 6 but this data lacks it
  auto wide = build_registry(fixtures::grid(1, 2, 6));
  CHECK(parameter_value({0, 0}, DistrictRef{6, DistrictField::undecided}, ds, wide) == 0.0);
  CHECK(parameter_value({0, 1}, DistrictRef{6, DistrictField::undecided}, ds, wide) == 0.0);
  CHECK(WarningLog::instance().drain().size() == 1);
  (void)reg;
}

TEST_CASE("parameter_value stays in range for random data", "[registry][property]") {
  testgen::Gen g(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto ds = testgen::dataset(seed, g.integer(1, 6), g.integer(1, 6), g.integer(1, 6));
    auto reg = build_registry(ds);
    for (const auto& ref : reg.refs()) {
      auto d = reg.domain(ref);
      REQUIRE(d.lo < d.hi);
      for (const auto& pt : point_index(ds)) {
        double v = parameter_value(pt, ref, ds, reg);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        if (std::holds_alternative<ActionRef>(ref)) REQUIRE((v == 0.0 || v == 1.0));
      }
    }
  }
}

TEST_CASE("synthetic generation", "[synthetic]") {
  SimConfig c;
  c.seed = 42;
  c.n_players = 100;
  c.strategy_mix = {{Strategy::deliberate, 0.7}, {Strategy::hurried, 0.3}};
  auto a = generate_synthetic_labeled(c);
  auto b = generate_synthetic_labeled(c);
  CHECK(serialize_dataset(a.dataset) == serialize_dataset(b.dataset));
  CHECK(a.strategies == b.strategies);

  double sum[2] = {0, 0};
  int n[2] = {0, 0};
  for (std::size_t p = 0; p < a.dataset.playthroughs.size(); ++p) {
    int k = a.strategies[p] == Strategy::deliberate ? 0 : 1;
    for (const auto& tr : a.dataset.playthroughs[p].turns) {
      sum[k] += tr.duration_s;
      ++n[k];
      REQUIRE(tr.districts.size() == 4);
    }
  }
  CHECK(n[0] == 700);
  CHECK(n[1] == 300);
  double deliberate = sum[0] / n[0], hurried = sum[1] / n[1];
  CHECK(hurried < deliberate);
  CHECK(deliberate == Approx(44.778714).margin(1e-5));
  CHECK(hurried == Approx(12.171667).margin(1e-5));

  c.seed = 43;
  CHECK(serialize_dataset(generate_synthetic(c)) != serialize_dataset(a.dataset));

  SimConfig bad = c;
  bad.strategy_mix = {{Strategy::deliberate, 0.7}};
  CHECK_THROWS_AS(generate_synthetic(bad), std::invalid_argument);
}

TEST_CASE("deliberate players trend upward in votes", "[synthetic]") {
  SimConfig c;
  c.seed = 7;
  c.n_players = 60;
  auto lab = generate_synthetic_labeled(c);
  double gain[3] = {0, 0, 0};
  int count[3] = {0, 0, 0};
  for (std::size_t p = 0; p < lab.strategies.size(); ++p) {
    const auto& turns = lab.dataset.playthroughs[p].turns;
    int k = static_cast<int>(lab.strategies[p]);
    gain[k] += static_cast<double>(turns.back().total_votes - turns.front().total_votes);
    ++count[k];
  }
  REQUIRE(count[0] > 0);
  REQUIRE(count[1] > 0);
  CHECK(gain[0] / count[0] > gain[1] / count[1]);
}
