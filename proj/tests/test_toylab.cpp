#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lmcl/checkpoint.hpp"
#include "lmcl/toylab.hpp"
#include "support/fixtures.hpp"

using namespace lmcl;
using lmcl::testing::TempDir;

namespace {

ToyOptions options(const char* variant, std::uint64_t seed = 0, std::size_t steps = 8000) {
  ToyOptions o;
  o.variant = LossVariant::parse(variant);
  o.seed = seed;
  o.steps = steps;
  return o;
}

double l1(const Point2& a, const Point2& b) { return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]); }

const ToyRun& mcl_run() {
  static const ToyRun run = run_toy(ToyTask{}, options("mcl"));
  return run;
}

double paired_mass(const ToySnapshot& s, const std::vector<bool>& paired) {
  double m = 0.0;
  for (std::size_t i = 0; i < paired.size(); ++i)
    if (paired[i]) m += s.phi[i];
  return m;
}

}  // namespace

TEST_CASE("toy task defaults and validation") {
  const ToyTask t;
  CHECK(t.ground_truths.size() == 3);
  CHECK(t.m == 10);
  CHECK(t.centroid()[0] == doctest::Approx(0.5));
  CHECK(t.centroid()[1] == doctest::Approx(0.5));
  CHECK_NOTHROW(t.validate());

  const auto five = ToyTask::with_ground_truths(5, 8);
  CHECK(five.ground_truths.size() == 5);
  CHECK(five.m == 8);
  for (const auto& p : five.ground_truths) {
    CHECK(std::hypot(p[0] - 0.5, p[1] - 0.5) == doctest::Approx(0.3));
  }

  ToyTask bad;
  bad.ground_truths.clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ToyTask{};
  bad.m = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ToyTask{};
  bad.ground_truths[1] = {1.2, 0.5};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ToyTask{};
  bad.ground_truths[1] = bad.ground_truths[0];
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK_THROWS_AS(run_toy(ToyTask{}, options("mcl", 0, 0)), std::invalid_argument);
}

TEST_CASE("toy runs are deterministic") {
  const auto a = run_toy(ToyTask{}, options("mcl", 3, 300));
  const auto b = run_toy(ToyTask{}, options("mcl", 3, 300));
  CHECK(a.params == b.params);
  CHECK(a.expected_loss == b.expected_loss);
  const auto c = run_toy(ToyTask{}, options("mcl", 4, 300));
  CHECK_FALSE(a.params == c.params);
}

TEST_CASE("mixture starts uniform") {
  const auto& run = mcl_run();
  CHECK(run.summary.initial_phi_spread < 0.05);
  REQUIRE(!run.snapshots.empty());
  CHECK(run.snapshots.front().step == 0);
  for (double p : run.snapshots.front().phi) CHECK(p == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("mixture training pairs every ground truth and starves the rest") {
  const auto& s = mcl_run().summary;
  CHECK(s.converged);
  CHECK(s.paired_count == 3);
  CHECK(s.unpaired_probability < 0.01);
  for (double d : s.nearest_l1) CHECK(d < 0.02);
  double total = 0.0;
  for (double p : s.phi) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pairing happens before boosting") {
  const auto& run = mcl_run();
  REQUIRE(run.summary.pairing_step.has_value());
  REQUIRE(run.summary.boosting_step.has_value());
  CHECK(*run.summary.pairing_step < *run.summary.boosting_step);

  // After pairing, phi mass on the paired predictors climbs at every snapshot until it passes 0.99.
  const auto& paired = run.summary.paired;
  double prev = -1.0;
  for (const auto& snap : run.snapshots) {
    if (snap.step < *run.summary.pairing_step) continue;
    const double m = paired_mass(snap, paired);
    if (prev > 0.99) break;
    CHECK(m > prev);
    prev = m;
  }
  CHECK(paired_mass(run.snapshots.back(), paired) > 0.99);
}

TEST_CASE("smoothed expected loss does not rise while pairing") {
  const auto& run = mcl_run();
  REQUIRE(run.summary.pairing_step.has_value());
  const auto& loss = run.expected_loss;
  const std::size_t end = *run.summary.pairing_step;
  const std::size_t window = 10;
  REQUIRE(end >= window);
  auto smoothed = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t k = i; k < i + window; ++k) s += loss[k];
    return s / static_cast<double>(window);
  };
  for (std::size_t i = 1; i + window <= end; ++i) CHECK(smoothed(i) <= smoothed(i - 1) + 1e-12);
}

TEST_CASE("a single predictor settles at the centroid") {
  ToyTask t;
  t.m = 1;
  const auto run = run_toy(t, options("wta", 1));
  REQUIRE(run.summary.hypotheses.size() == 1);
  CHECK(l1(run.summary.hypotheses[0], t.centroid()) < 0.03);
}

TEST_CASE("evolving wta strands predictors between ground truths") {
  const auto ewta = run_toy(ToyTask{}, options("ewta", 0));
  const auto& e = ewta.summary;
  CHECK(e.converged);
  CHECK(e.stuck_count >= 1);
  CHECK(e.poor_probability > mcl_run().summary.unpaired_probability);
  // Without a mixture layer the sampling weights stay uniform.
  for (double p : e.phi) CHECK(p == doctest::Approx(0.1));
}

TEST_CASE("relaxed wta pulls predictors to the centre") {
  const auto rwta = run_toy(ToyTask{}, options("rwta", 0));
  const Point2 c = ToyTask{}.centroid();
  std::size_t central = 0;
  for (const auto& h : rwta.summary.hypotheses) central += l1(h, c) < 0.1;
  CHECK(central >= 1);
}

TEST_CASE("snapshot csv") {
  const auto run = run_toy(ToyTask{}, options("mcl", 2, 250));
  std::ostringstream out;
  write_snapshots_csv(out, run);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "step,hypothesis,x,y,phi");
  std::size_t rows = 0;
  std::size_t last_step = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    last_step = std::stoul(line.substr(0, line.find(',')));
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
  }
  // Steps 0, 100, 200 and the final 250, ten hypotheses each.
  CHECK(run.snapshots.size() == 4);
  CHECK(rows == 40);
  CHECK(last_step == 250);
}

TEST_CASE("toy checkpoint and sidecar") {
  TempDir dir("toy");
  const auto o = options("mcl", 2, 200);
  const auto run = run_toy(ToyTask{}, o);
  save_toy(dir / "toy.ckpt", ToyTask{}, o, run);
  CHECK(load_checkpoint(dir / "toy.ckpt") == run.params);
  std::ifstream side(dir / "toy.ckpt.json");
  const auto j = nlohmann::json::parse(side);
  CHECK(j["format"] == "layout-mcl-toy");
  CHECK(j["variant"] == "mixture_wta");
  CHECK(j["m"] == 10);
  CHECK(j["ground_truths"].size() == 3);
  CHECK(j["summary"]["paired_count"] == run.summary.paired_count);
  CHECK(nlohmann::json::parse(summary_json(run.summary))["converged"] == run.summary.converged);
}

TEST_CASE("variant comparison needs five seeds") {
  const std::vector<LossVariant> variants = {LossVariant::parse("mcl")};
  const std::vector<std::uint64_t> four = {0, 1, 2, 3};
  CHECK_THROWS_AS(compare_variants(ToyTask{}, options("mcl", 0, 10), variants, four), std::invalid_argument);
  const std::vector<std::uint64_t> five = {0, 1, 2, 3, 4};
  const auto stats = compare_variants(ToyTask{}, options("mcl", 0, 50), variants, five);
  REQUIRE(stats.size() == 1);
  CHECK(stats[0].runs.size() == 5);
  CHECK(stats[0].variant == variants[0]);
}
