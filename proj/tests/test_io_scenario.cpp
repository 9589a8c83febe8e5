#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "spindiff/io.hpp"
#include "spindiff/scenario.hpp"
#include "spindiff/units.hpp"

using namespace spindiff;

namespace {

const char* kRfScenario = R"(kind: rf-map
name: tiny
params:
  a_zz12: 14.0e6
  a_zx12: 14.0e6
  a_zz34: 9.0e6
  a_zx34: 9.0e6
rf:
  amplitude: 75.0e3
sweep:
  carrier: {from: -1.0e6, to: 1.0e6, points: 3}
  j_d: {from: 0.0, to: 1.0e6, points: 2}
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  s.replace(s.find(from), from.size(), to);
  return s;
}

}  // namespace

TEST_CASE("CSV round trip") {
  CsvTable t;
  t.header = {{"scenario", "x"}, {"units", "Hz"}};
  t.columns = {"a", "b"};
  t.add_row({0.1, -3e-300});
  t.add_row({1.0 / 3.0, 6.02214076e23});
  std::stringstream ss;
  write_csv(ss, t);
  CHECK(ss.str().rfind("# scenario: x\n# units: Hz\na,b\n", 0) == 0);
  const auto back = read_csv(ss);
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);  // shortest round-trip text is exact
  CHECK_THROWS(t.add_row({1.0}));
}

TEST_CASE("number formatting and hashing") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1e300) == "1e+300");
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(255) == "00000000000000ff");
}

TEST_CASE("scenario parsing") {
  SUBCASE("frequencies in Hz become rad/s") {
    const auto s = parse_scenario(kRfScenario);
    CHECK(s.kind == ExperimentKind::rf_map);
    CHECK(s.name == "tiny");
    const auto& c = std::get<RfMapConfig>(s.body);
    CHECK(c.amplitude == doctest::Approx(to_angular(75e3)).epsilon(1e-15));
    CHECK(c.params.a_zz12 == doctest::Approx(to_angular(14e6)).epsilon(1e-15));
    CHECK(c.carrier.points().size() == 3);
  }
  SUBCASE("explicit angular units are taken as is") {
    const auto s = parse_scenario(std::string("units: rad/s\n") + kRfScenario);
    CHECK(std::get<RfMapConfig>(s.body).amplitude == 75e3);
  }
  SUBCASE("hash depends on text and seed only") {
    const auto a = parse_scenario(kRfScenario), b = parse_scenario(kRfScenario);
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 16);
    const auto c = parse_scenario(std::string("seed: 3\n") + kRfScenario);
    CHECK(c.hash() != a.hash());
  }
  SUBCASE("every catalog entry has a kind name") {
    for (const auto& e : experiment_catalog()) {
      CHECK(parse_kind(e.name) == e.kind);
      CHECK(kind_name(e.kind) == e.name);
    }
    CHECK_FALSE(parse_kind("nonsense").has_value());
  }
}

TEST_CASE("scenario errors point at the problem") {
  SUBCASE("syntax error carries line and column") {
    try {
      parse_scenario("kind: rf-map\nparams: {a_zz12: [1, 2\n");
      FAIL("expected a parse error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("parse error") != std::string::npos);
      CHECK(e.line() >= 2);
      CHECK(e.column() >= 1);
    }
  }
  SUBCASE("missing key is named") {
    try {
      parse_scenario(replace(kRfScenario, "  amplitude: 75.0e3\n", "  window: 1.0e-4\n"));
      FAIL("expected a missing key error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("amplitude") != std::string::npos);
      CHECK(e.line() > 0);
    }
  }
  SUBCASE("empty input") {
    try {
      parse_scenario("");
      FAIL("expected an error");
    } catch (const ScenarioError& e) {
      CHECK(std::string(e.what()).find("empty") != std::string::npos);
    }
  }
  SUBCASE("bad values") {
    CHECK_THROWS_AS(parse_scenario(replace(kRfScenario, "rf-map", "nope")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(replace(kRfScenario, "75.0e3", "fast")), ScenarioError);
    CHECK_THROWS_AS(parse_scenario(std::string("units: GHz\n") + kRfScenario), ScenarioError);
    CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.yaml"), ScenarioError);
  }
}

TEST_CASE("every shipped scenario parses") {
  int count = 0;
  for (const auto& entry : std::filesystem::directory_iterator(SPINDIFF_SCENARIO_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(load_scenario(entry.path()));
    ++count;
  }
  CHECK(count >= 10);
}

TEST_CASE("output stages") {
  const auto dir = std::filesystem::temp_directory_path() / "spindiff_stage_test";
  std::filesystem::remove_all(dir);
  {
    OutputStage stage(dir, "a");
    stage.write_text("note.txt", "hi\n");
    // dropped without commit
  }
  CHECK_FALSE(std::filesystem::exists(dir / "note.txt"));
  {
    OutputStage stage(dir, "b");
    stage.write_text("note.txt", "hi\n");
    stage.commit();
    CHECK(stage.manifest() == std::vector<std::string>{"note.txt"});
  }
  std::ifstream in(dir / "note.txt");
  std::string line;
  std::getline(in, line);
  CHECK(line == "hi");
  std::size_t leftovers = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().filename().string().rfind(".staging", 0) == 0) ++leftovers;
  CHECK(leftovers == 0);
  std::filesystem::remove_all(dir);
}
