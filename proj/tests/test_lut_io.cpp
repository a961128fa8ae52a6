#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <random>

#include "lana/lut_io.hpp"
#include "support.hpp"

using namespace lana;

namespace {

constexpr const char* kMinimal = R"({
  "format_version": 1, "name": "tiny", "cost_unit": "ms",
  "layers": [ { "layer_index": 0, "teacher_index": 0,
                "ops": [ { "op_id": "teacher", "score_delta": 0, "cost": 1.5 },
                         { "op_id": "identity", "score_delta": 0.25, "cost": 0.01, "tags": ["skip"] } ] } ] })";

}  // namespace

TEST(ParseInstance, Minimal) {
  const auto inst = parse_instance(kMinimal);
  ASSERT_EQ(inst.num_layers(), 1u);
  EXPECT_EQ(inst.layers[0].ops.size(), 2u);
  EXPECT_EQ(inst.layers[0].ops[1].tags, std::vector<std::string>{"skip"});
  EXPECT_EQ(inst.name, "tiny");
}

TEST(ParseInstance, AbsoluteScoresBecomeDeltas) {
  const auto inst = parse_instance(R"({"format_version": 1, "name": "abs", "scores_absolute": true,
    "layers": [ {"layer_index": 0, "teacher_index": 1, "ops": [
      {"op_id": "a", "score_delta": 2.75, "cost": 1},
      {"op_id": "teacher", "score_delta": 2.5, "cost": 3},
      {"op_id": "b", "score_delta": 2.25, "cost": 2}]}]})");
  const auto& ops = inst.layers[0].ops;
  EXPECT_EQ(ops[1].score_delta, 0.0);
  EXPECT_EQ(ops[0].score_delta, 0.25);
  EXPECT_EQ(ops[2].score_delta, -0.25);
}

TEST(ParseInstance, MissingTeacherIndexIsSchemaError) {
  try {
    parse_instance(R"({"format_version": 1, "name": "x",
      "layers": [ {"layer_index": 0, "ops": [ {"op_id": "t", "score_delta": 0, "cost": 1} ]} ]})");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field, "teacher_index");
  }
}

TEST(ParseInstance, ErrorKinds) {
  try {
    parse_instance("{\"format_version\": 1,\n \"name\": }");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset, 0u);
  }
  EXPECT_THROW(parse_instance(R"({"format_version": 1, "name": 3, "layers": []})"), SchemaError);
  EXPECT_THROW(parse_instance(R"({"format_version": 2, "name": "x", "layers": []})"), SchemaError);
  EXPECT_THROW(parse_instance(R"({"format_version": 1, "name": "x", "layers": [
      {"layer_index": 0, "teacher_index": 0, "ops": [ {"op_id": "t", "score_delta": "0", "cost": 1} ]}]})"),
               SchemaError);
  try {
    parse_instance(R"({"format_version": 1, "name": "x", "layers": [
      {"layer_index": 0, "teacher_index": 0, "ops": [ {"op_id": "t", "score_delta": 0.5, "cost": 1} ]}]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.violations.size(), 1u);
    EXPECT_EQ(e.violations[0].layer, 0u);
  }
}

TEST(WriteInstance, RoundTripAndDeterminism) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    InstanceFile f;
    f.instance = oracle::random_instance(seed, {5, 4, 0.2});
    f.provenance["hardware"] = "desk";
    f.provenance["batch"] = 128;
    const std::string a = write_instance(f);
    const std::string b = write_instance(f);
    EXPECT_EQ(a, b);
    EXPECT_EQ(parse_instance_file(a), f);
  }
}

TEST(WriteInstance, NegativeZeroIsCanonical) {
  auto inst = parse_instance(kMinimal);
  inst.layers[0].ops[0].score_delta = -0.0;
  const std::string text = write_instance(inst);
  EXPECT_NE(text.find("\"score_delta\": 0,"), std::string::npos);
  EXPECT_EQ(text.find("-0"), std::string::npos);
}

TEST(FormatReal, ShortestRoundTrip) {
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(format_real(2.0), "2");
  EXPECT_EQ(format_real(-0.0), "0");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    double v;
    const std::uint64_t bits = rng();
    std::memcpy(&v, &bits, sizeof v);
    if (!std::isfinite(v)) continue;
    EXPECT_EQ(std::stod(format_real(v)), v);
  }
  EXPECT_THROW(format_real(std::numeric_limits<double>::infinity()), InvalidArgument);
}

TEST(Report, RoundTrip) {
  SolveReport r;
  r.instance = "inst";
  r.budget_ms = 12.5;
  r.overlap_limit = 7;
  SolveResult s;
  s.selection.choices = {0, 2, 1};
  s.objective = 0.3;
  s.cost_ms = 11.25;
  s.status = SolveStatus::feasible;
  s.gap = 0.01;
  r.solutions = {s, s};
  r.wall_time_s = 0.125;
  const auto back = parse_report(write_report(r));
  EXPECT_EQ(back.instance, r.instance);
  EXPECT_EQ(back.budget_ms, r.budget_ms);
  EXPECT_EQ(back.overlap_limit, r.overlap_limit);
  ASSERT_EQ(back.solutions.size(), 2u);
  EXPECT_EQ(back.solutions[1].selection, s.selection);
  EXPECT_EQ(back.solutions[1].status, SolveStatus::feasible);
  EXPECT_EQ(back.solutions[1].gap, 0.01);
  EXPECT_EQ(write_report(back), write_report(r));

  r.solutions.clear();
  EXPECT_EQ(parse_report(write_report(r)).solutions.size(), 0u);
}

TEST(AggregateSamples, Medians) {
  EXPECT_EQ(lower_median({3, 1, 2}), 2.0);
  EXPECT_EQ(lower_median({4, 2}), 2.0);
  EXPECT_THROW(lower_median({}), InvalidArgument);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> lat(0.5, 2.0);
  std::vector<double> runs;
  for (int i = 0; i < 10; ++i) runs.push_back(lat(rng));
  std::vector<double> sorted = runs;
  std::sort(sorted.begin(), sorted.end());

  const auto agg = aggregate_samples({{"conv", 3, Metric::latency_ms, runs}});
  EXPECT_EQ(agg.at(SampleKey{3, "conv", Metric::latency_ms}), sorted[4]);
}

TEST(AggregateSamples, GroupsAndPermutationInvariance) {
  std::vector<MeasurementSample> samples = {
      {"a", 0, Metric::latency_ms, {5, 1}},
      {"a", 0, Metric::latency_ms, {3}},
      {"a", 0, Metric::loss_delta, {0.2, 0.1, 0.4}},
      {"b", 1, Metric::latency_ms, {7}},
  };
  const auto agg = aggregate_samples(samples);
  EXPECT_EQ(agg.size(), 3u);
  EXPECT_EQ(agg.at(SampleKey{0, "a", Metric::latency_ms}), 3.0);
  EXPECT_EQ(agg.at(SampleKey{0, "a", Metric::loss_delta}), 0.2);

  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    auto shuffled = samples;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    for (auto& s : shuffled) std::shuffle(s.values.begin(), s.values.end(), rng);
    EXPECT_EQ(aggregate_samples(shuffled), agg);
  }
  EXPECT_THROW(aggregate_samples({{"a", 0, Metric::latency_ms, {}}}), InvalidArgument);
}

TEST(RestrictPool, TeacherOnly) {
  const auto inst = oracle::random_instance(4, {5, 4});
  const auto only = restrict_pool(inst, [](const CandidateOp& op) { return op.op_id == "teacher"; });
  EXPECT_TRUE(validate_instance(only).empty());
  for (const auto& l : only.layers) {
    ASSERT_EQ(l.ops.size(), 1u);
    EXPECT_EQ(l.teacher_index, 0u);
  }
}

TEST(RestrictPool, ZeroShotAndTags) {
  auto inst = oracle::random_instance(8, {6, 6});
  for (auto& l : inst.layers) l.ops[(l.teacher_index + 1) % 6].op_id = "identity";
  const auto zs = restrict_pool(
      inst, [](const CandidateOp& op) { return op.op_id == "teacher" || op.op_id == "identity"; });
  for (std::size_t i = 0; i < zs.num_layers(); ++i) {
    ASSERT_EQ(zs.layers[i].ops.size(), 2u);
    EXPECT_EQ(zs.layers[i].teacher().op_id, "teacher");
    for (const auto& op : zs.layers[i].ops) {
      const auto& orig = *std::find_if(inst.layers[i].ops.begin(), inst.layers[i].ops.end(),
                                       [&](const CandidateOp& o) { return o.op_id == op.op_id; });
      EXPECT_EQ(op, orig);
    }
  }

  const auto efn = restrict_pool(inst, [](const CandidateOp& op) {
    return op.op_id == "teacher" || op.has_tag("efn");
  });
  for (std::size_t i = 0; i < inst.num_layers(); ++i) {
    const auto n_efn = std::count_if(inst.layers[i].ops.begin(), inst.layers[i].ops.end(),
                                     [](const CandidateOp& op) { return op.has_tag("efn"); });
    EXPECT_EQ(efn.layers[i].ops.size(), static_cast<std::size_t>(n_efn) + 1);
  }
}

TEST(RestrictPool, DroppingTeacherNamesLayer) {
  const auto inst = oracle::random_instance(4, {3, 4});
  try {
    restrict_pool(inst, [](const CandidateOp& op) { return op.op_id != "teacher"; });
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("0 1 2"), std::string::npos);
  }
}

TEST(ZeroShotPool, KeepsTeacherAndIdentity) {
  const auto inst = oracle::zero_shot_instance(3, 5);
  auto wide = inst;
  for (auto& l : wide.layers) l.ops.push_back({"conv", 0.1, 0.5, {}});
  const auto zs = zero_shot_pool(wide, "identity");
  EXPECT_EQ(zs, inst);

  wide.layers[1].ops.erase(wide.layers[1].ops.begin() + 1);
  wide.layers[3].ops.erase(wide.layers[3].ops.begin() + 1);
  try {
    zero_shot_pool(wide, "identity");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("layer(s) 1 3"), std::string::npos);
  }
  const auto kept = zero_shot_pool(wide, "identity", true);
  EXPECT_EQ(kept.layers[1].ops.size(), 1u);
  EXPECT_EQ(kept.layers[2].ops.size(), 2u);
}
