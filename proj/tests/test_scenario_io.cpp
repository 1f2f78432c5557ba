#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "sewerflow/scenario_io.hpp"

using namespace sewerflow;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = fs::path(SEWERFLOW_SOURCE_DIR) / "scenarios";

nlohmann::json tiny_doc() {
  std::ifstream in(kScenarios / "tiny.scenario");
  return nlohmann::json::parse(in);
}

ScenarioError::Kind kind_of(const nlohmann::json& doc) {
  try {
    parse_scenario(doc);
  } catch (const ScenarioError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "document accepted";
  return ScenarioError::Kind::Parse;
}

}  // namespace

TEST(ScenarioIo, ShippedScenariosLoad) {
  for (const char* name : {"tiny.scenario", "paris_like.scenario"}) {
    const Scenario sc = load_scenario(kScenarios / name);
    EXPECT_TRUE(sc.violations().empty()) << name;
    EXPECT_TRUE(sc.coverage_violations().empty()) << name;
  }
  const Scenario sc = load_scenario(kScenarios / "paris_like.scenario");
  EXPECT_EQ(sc.network.plants().size(), 3u);
  EXPECT_EQ(sc.timing.steps_per_period(), 5);
  for (const Pipe& p : sc.network.pipes())
    if (p.label == "G5") {
      EXPECT_EQ(p.delay_steps, 3);
    }
}

TEST(ScenarioIo, RoundTripIsExact) {
  for (const char* name : {"tiny.scenario", "paris_like.scenario"}) {
    const Scenario a = load_scenario(kScenarios / name);
    const Scenario b = parse_scenario(nlohmann::json::parse(serialize_scenario(a).dump()));
    EXPECT_TRUE(a == b) << name;
  }
}

TEST(ScenarioIo, PresetMatchesLibraryBiology) {
  const Scenario sc = load_scenario(kScenarios / "tiny.scenario");
  EXPECT_TRUE(sc.biology[0] == case_study_biology(0));
  EXPECT_TRUE(sc.biology[1] == case_study_biology(1));
}

TEST(ScenarioIo, ErrorKinds) {
  nlohmann::json doc = tiny_doc();
  doc.erase("timing");
  EXPECT_EQ(kind_of(doc), ScenarioError::Kind::Parse);

  doc = tiny_doc();
  doc["network"]["pipes"][0]["to"] = "nowhere";
  EXPECT_EQ(kind_of(doc), ScenarioError::Kind::Parse);

  doc = tiny_doc();
  doc["network"]["tanks"][1]["v_max"] = 10.0;  // diversion node with storage
  EXPECT_EQ(kind_of(doc), ScenarioError::Kind::Validation);

  doc = tiny_doc();
  doc["timing"]["control_period_min"] = 10.0;
  EXPECT_EQ(kind_of(doc), ScenarioError::Kind::Validation);

  doc = tiny_doc();
  doc["influent"]["inline"].erase(2);
  EXPECT_EQ(kind_of(doc), ScenarioError::Kind::Coverage);
}

TEST(ScenarioIo, ValidationDetailsNameTheRule) {
  nlohmann::json doc = tiny_doc();
  doc["network"]["tanks"][2]["v_bar"] = 0.0;
  try {
    parse_scenario(doc);
    FAIL() << "document accepted";
  } catch (const ScenarioError& e) {
    ASSERT_FALSE(e.details().empty());
    EXPECT_NE(e.details().front().find("P1"), std::string::npos) << e.details().front();
  }
}

TEST(ScenarioIo, InfluentCsvAndResampling) {
  const fs::path dir = fs::temp_directory_path() / "sewerflow_io_test";
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "in.csv");
    f << "t_min,inlet_id,flow,c_A\n0,T,10,1\n4,T,30,3\n";
  }
  const std::vector<std::string> species{"A", "X"};
  const auto samples = read_influent_csv(dir / "in.csv", species);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[1].conc, (std::vector<double>{3.0, 0.0}));

  Tank t;
  t.id = "T";
  t.v_max = 1.0;
  t.has_external_inflow = true;
  const NetworkModel net({t}, {});
  const auto series = resample_influent(samples, net, 1.0, 2);
  ASSERT_EQ(series.size(), 1u);
  EXPECT_DOUBLE_EQ(series[0].flow_at(1.0), 15.0);
  EXPECT_DOUBLE_EQ(series[0].flow_at(3.0), 25.0);

  {
    std::ofstream f(dir / "bad.csv");
    f << "t_min,inlet_id,flow,c_A\n0,T,ten,1\n";
  }
  EXPECT_THROW(read_influent_csv(dir / "bad.csv", species), ScenarioError);
  fs::remove_all(dir);
}
