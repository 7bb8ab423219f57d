#include <gtest/gtest.h>

#include "fedosov/harness.hpp"

using namespace fedosov;
using namespace fedosov::harness;

namespace {

RunConfig small(const std::string& scenario) {
  RunConfig c;
  c.scenario = scenario;
  c.order = 2;
  c.draws = 2;
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Config, RejectsBadValues) {
  const auto bad = [](auto edit) {
    RunConfig c;
    edit(c);
    EXPECT_THROW(c.validate(), ConfigError);
  };
  bad([](RunConfig& c) { c.order = 0; });
  bad([](RunConfig& c) { c.dim = 3; });
  bad([](RunConfig& c) { c.order_eps = -1; });
  bad([](RunConfig& c) { c.rank = 0; });
  bad([](RunConfig& c) { c.scenario = "nope"; });
  bad([](RunConfig& c) { c.actions.clear(); });
  bad([](RunConfig& c) {
    c.backend = Backend::floating;
    c.tolerance = 0;
  });
  EXPECT_NO_THROW(RunConfig{}.validate());
}

TEST(Config, JsonKeysAreCheckedAndApplied) {
  RunConfig c;
  EXPECT_THROW(apply_json(c, Json::parse(R"({"order": 4})")), ConfigError);
  EXPECT_THROW(apply_json(c, Json::parse(R"({"order_h": "4"})")), ConfigError);
  EXPECT_THROW(apply_json(c, Json::parse(R"({"seed": -1})")), ConfigError);
  EXPECT_THROW(apply_json(c, Json::parse(R"({"actions": ["EH3"]})")), ConfigError);
  EXPECT_THROW(apply_json(c, Json::parse("[1]")), ConfigError);

  apply_json(c, Json::parse(R"({"scenario": "action", "order_h": 4, "backend": "float", "tolerance": 1e-8,
                                 "actions": ["P", "EH1A"], "signature": "euclidean",
                                 "negative_control": "reversed-involution"})"));
  EXPECT_EQ(c.scenario, "action");
  EXPECT_EQ(c.order, 4);
  EXPECT_EQ(c.backend, Backend::floating);
  EXPECT_EQ(c.actions, (std::vector<ActionKind>{ActionKind::P, ActionKind::EH1A}));
  EXPECT_FALSE(c.lorentzian);
  EXPECT_EQ(c.control, NegativeControl::reversed_involution);
}

TEST(Config, RoundTripsThroughJson) {
  RunConfig c = small("trace-theorem");
  c.actions = {ActionKind::EH2B};
  c.curved = false;
  RunConfig d;
  apply_json(d, to_json(c));
  EXPECT_EQ(to_json(d).dump(), to_json(c).dump());
}

TEST(Streams, AreDeterministicAndSeparated) {
  Rng a = stream(5, "x", 0), b = stream(5, "x", 0), c = stream(5, "x", 1), d = stream(5, "y", 0);
  const auto va = a.next(), vb = b.next(), vc = c.next(), vd = d.next();
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, vd);
}

TEST(ParallelMap, KeepsOrderAndRethrows) {
  const auto v = parallel_map<int>(50, [](int i) { return i * i; });
  for (int i = 0; i < 50; ++i) EXPECT_EQ(v[static_cast<std::size_t>(i)], i * i);
  EXPECT_THROW(parallel_map<int>(8, [](int i) -> int { throw std::runtime_error(std::to_string(i)); }),
               std::runtime_error);
}

TEST(Report, SameSeedGivesIdenticalBytes) {
  for (const char* s : {"core-identities", "trace-theorem"}) {
    const RunConfig c = small(s);
    const auto first = run_scenario(c).to_json().dump(2);
    EXPECT_EQ(first, run_scenario(c).to_json().dump(2)) << s;
    RunConfig other = c;
    other.seed = 12;
    EXPECT_NE(first, run_scenario(other).to_json().dump(2)) << s;
  }
}

TEST(Report, ExactCoefficientsSerialiseAsFractions) {
  RunConfig c = small("trace-theorem");
  c.order = 4;
  const Json j = run_scenario(c).to_json();
  ASSERT_EQ(j["status"], "pass");
  const auto& rows = j["tables"]["trace_of_adjoint"]["rows"];
  ASSERT_EQ(rows.size(), 3u);
  bool fraction = false;
  for (const auto& r : rows) {
    const auto re = r["re"].get<std::string>();
    EXPECT_EQ(re.find_first_not_of("-0123456789/"), std::string::npos) << re;
    fraction = fraction || re.find('/') != std::string::npos;
  }
  EXPECT_TRUE(fraction);
  EXPECT_EQ(j["tables"]["trace_of_adjoint"]["unit"], "(2pi)^2");
  EXPECT_FALSE(j.contains("seconds"));
}

TEST(Report, FlatClosedFormPassesOnBothBackends) {
  RunConfig c = small("flat-closed-form");
  c.order = 4;
  EXPECT_TRUE(run_scenario(c).pass());
  c.backend = Backend::floating;
  EXPECT_TRUE(run_scenario(c).pass());
}

TEST(NegativeControl, FlippedBundleCurvatureIsCaught) {
  RunConfig c = small("core-identities");
  c.order = 4;
  c.control = NegativeControl::flip_bundle_curvature;
  const Report rep = run_scenario(c);
  EXPECT_FALSE(rep.pass());
  const auto w = rep.first_witness();
  ASSERT_TRUE(w.has_value());
  EXPECT_FALSE(w->empty());
}

TEST(NegativeControl, ReversedInvolutionIsCaught) {
  RunConfig c = small("core-identities");
  c.order = 4;
  c.control = NegativeControl::reversed_involution;
  const Report rep = run_scenario(c);
  const Check* m = rep.find("moyal-involution");
  ASSERT_NE(m, nullptr);
  EXPECT_FALSE(m->pass);
  ASSERT_TRUE(m->witness.has_value());
}

TEST(Action, ScenarioReportsRealityAndClassicalLimit) {
  RunConfig c = small("action");
  c.actions = {ActionKind::EH1A, ActionKind::P};
  const Report rep = run_scenario(c);
  EXPECT_TRUE(rep.pass()) << rep.first_witness().value_or("");
  EXPECT_NE(rep.find("EH1A:reality"), nullptr);
  EXPECT_NE(rep.find("P:classical-limit"), nullptr);
  EXPECT_EQ(rep.tables.size(), 2u);
}
