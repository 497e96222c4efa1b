#include <gtest/gtest.h>

#include "qap/scenario.hpp"
#include "test_support.hpp"

using namespace qap;
using namespace qap::io;
using json = nlohmann::json;

namespace {

json example3() {
  return json::parse(R"({
    "dim": 2, "rate": 0.0,
    "assets": [{"name": "S", "price": 1.0, "pauli": {"i": 1.75, "x": 0.2, "z": -0.25}}],
    "rho": {"pauli": {"i": 0.5}},
    "semantics": {"hhat": "full", "condition2": "state"},
    "derivative": {"name": "V", "matrix": [[[1, 0], [0.5, -0.25]], [[0.5, 0.25], [2, 0]]]},
    "quote": 1.25
  })");
}

}  // namespace

TEST(Scenario, ParsesPauliAndMatrixForms) {
  const Scenario s = scenario_from_json(example3());
  EXPECT_EQ(s.model.dim(), 2u);
  EXPECT_EQ(s.model.price_system().asset(0).payoff, pauli_compose({1.75, 0.2, 0, -0.25}));
  EXPECT_EQ(s.model.semantics().condition2, Condition2Mode::state);
  ASSERT_TRUE(s.derivative.has_value());
  EXPECT_EQ((*s.derivative).payoff(0, 1), Complex(0.5, -0.25));
  EXPECT_EQ(*s.quote, 1.25);
  EXPECT_EQ(s.model.price_system().riskless_price(), 1.0);
}

TEST(Scenario, WriteParseIsIdempotent) {
  const json once = scenario_to_json(scenario_from_json(example3()));
  const json twice = scenario_to_json(scenario_from_json(once));
  EXPECT_EQ(once, twice);
  EXPECT_EQ(json::parse(once.dump()), once);
}

TEST(Scenario, ComplexValuesSurviveBitExactly) {
  qap::testing::Rng rng(71);
  for (int t = 0; t < 50; ++t) {
    const HermitianOperator a = qap::testing::random_hermitian(rng, 3);
    const json text = json::parse(operator_to_json(a).dump());
    EXPECT_EQ(operator_from_json(text, 3, "op"), a);
  }
}

TEST(Scenario, FeasTolOverride) {
  EXPECT_EQ(scenario_from_json(example3(), 1e-6).model.tolerances().feas_tol, 1e-6);
  json j = example3();
  j["tolerances"] = {{"feas_tol", 1e-7}};
  EXPECT_EQ(scenario_from_json(j).model.tolerances().feas_tol, 1e-7);
}

TEST(Scenario, RejectsInvalidInput) {
  auto broken = [](auto edit) {
    json j = example3();
    edit(j);
    return j;
  };
  const std::vector<json> cases{
      broken([](json& j) { j.erase("dim"); }),
      broken([](json& j) { j["dim"] = 0; }),
      broken([](json& j) { j["extra"] = 1; }),
      broken([](json& j) { j["assets"] = json::array(); }),
      broken([](json& j) { j["assets"][0]["price"] = -1.0; }),
      broken([](json& j) { j["assets"][0]["pauli"]["x"] = 5.0; }),  // not PSD
      broken([](json& j) { j["assets"][0]["matrix"] = json::array(); }),  // both forms
      broken([](json& j) { j["rho"] = {{"pauli", {{"i", 1.0}}}}; }),  // trace 2
      broken([](json& j) { j["rho"] = {{"matrix", {{{1, 0}, {0, 1}}, {{0, 0}, {0, 0}}}}}; }),  // not Hermitian
      broken([](json& j) { j["semantics"]["hhat"] = "partial"; }),
      broken([](json& j) { j["tolerances"] = {{"feas_tol", -1.0}}; }),
      broken([](json& j) { j["tolerances"] = {{"unknown", 1.0}}; }),
      broken([](json& j) { j["derivative"]["pauli"] = {{"z", 1.0}}; j["derivative"].erase("matrix"); }),
      broken([](json& j) {
        j["dim"] = 3;
        j["rho"] = {{"pauli", {{"i", 0.5}}}};
      }),
      broken([](json& j) { j["quote"] = "1.0"; }),
  };
  for (std::size_t i = 0; i < cases.size(); ++i) EXPECT_THROW(scenario_from_json(cases[i]), ScenarioError) << "case " << i;
  EXPECT_THROW(parse_json_text("{\"dim\": ", "x"), ScenarioError);
}

TEST(Scenario, DensityFromReportOrBareOperator) {
  const HermitianOperator half = HermitianOperator::identity(2) * 0.5;
  const json bare = operator_to_json(half);
  const json report{{"verdict", "arbitrage_free"}, {"certificate", {{"rho_star", operator_to_json(half)}}}};
  EXPECT_EQ(density_from_json(bare, 2, "rnd"), half);
  EXPECT_EQ(density_from_json(report, 2, "rnd"), half);
}

TEST(Scenario, ReportCarriesVerdictAndCertificate) {
  const Scenario s = scenario_from_json(example3());
  const json rep = report_to_json(detect(s.model));
  EXPECT_EQ(rep["verdict"], "arbitrage");
  EXPECT_EQ(rep["semantics_used"]["condition2"], "state");
  EXPECT_TRUE(rep["certificate"].contains("portfolio"));
  EXPECT_TRUE(rep["certificate"].contains("witness_state"));
}
