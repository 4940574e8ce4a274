#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qpr/field.hpp"
#include "qpr/forward.hpp"
#include "qpr/multiscale.hpp"
#include "qpr/rng.hpp"

using namespace qpr;

namespace {

// Noiseless cross-level counts for a plan and the true full-scale field.
std::vector<RVec> exact_cross_counts(const MultiscalePlan& plan,
                                     const ComplexField& truth) {
  ComplexField scaled;
  scaled.values =
      truth.values * std::sqrt(plan.level_energy_fraction());
  std::vector<RVec> counts;
  counts.reserve(plan.cross_designs.size());
  for (const auto& design : plan.cross_designs)
    counts.push_back(intensities(design, scaled));
  return counts;
}

// Per-block estimates at the intra exposure, each optionally rotated.
std::vector<ComplexField> block_estimates(const MultiscalePlan& plan,
                                          const ComplexField& truth,
                                          const std::vector<double>& phases) {
  std::vector<ComplexField> blocks(plan.n_blocks);
  const double amp = std::sqrt(plan.intra_energy_fraction());
  for (int b = 0; b < plan.n_blocks; ++b) {
    blocks[b].values =
        truth.values.segment(plan.block_begin(b), plan.block_size) * amp *
        std::polar(1.0, phases.empty() ? 0.0 : phases[b]);
  }
  return blocks;
}

double circular_distance(double a, double b) {
  const double d = std::remainder(a - b, 2.0 * std::numbers::pi);
  return std::fabs(d);
}

}  // namespace

TEST_CASE("plan shapes") {
  const auto two_blocks = build_plan(64, 5, 7);
  CHECK(two_blocks.block_size == 32);
  CHECK(two_blocks.n_blocks == 2);
  CHECK(two_blocks.levels == 1);
  CHECK(two_blocks.intra_designs.size() == 2);
  CHECK(two_blocks.cross_designs.size() == 1);
  // 2 connections per left mode, one group each, 3 rows per group.
  CHECK(two_blocks.cross_designs[0].m_rows() == 2 * 32 * 3);

  const auto deep = build_plan(256, 5, 7);
  CHECK(deep.n_blocks == 8);
  CHECK(deep.levels == 3);
  // Every level touches every left mode of each sibling pair: n/2 left
  // modes in total, 2 groups each.
  for (const auto& design : deep.cross_designs)
    CHECK(static_cast<int>(design.groups.size()) == 2 * 256 / 2);

  CHECK_THROWS_AS(build_plan(96, 3, 1), std::invalid_argument);  // not 2^k
  CHECK_THROWS_AS(build_plan(64, 7, 1), std::invalid_argument);  // q > k
  CHECK_THROWS_AS(build_plan(64, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(build_plan(64, 3, 1, 1.5), std::invalid_argument);
}

TEST_CASE("energy budget sums to one") {
  const auto plan = build_plan(128, 4, 9, 0.08);
  const double total = plan.intra_energy_fraction() +
                       plan.levels * plan.level_energy_fraction();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  const auto degenerate = build_plan(32, 5, 9);
  CHECK(degenerate.levels == 0);
  CHECK(degenerate.intra_energy_fraction() == 1.0);
}

TEST_CASE("stitching exact inputs reproduces the field") {
  const auto plan = build_plan(32, 3, 11);
  const auto truth = random_field(32, 50.0, 12);
  const auto blocks = block_estimates(plan, truth, {});
  const auto counts = exact_cross_counts(plan, truth);
  const auto result = stitch(plan, blocks, counts);
  CHECK(result.all_reliable);
  CHECK((result.field.values - truth.values).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("stitching absorbs arbitrary per-block gauges") {
  const auto plan = build_plan(64, 4, 13);
  const auto truth = random_field(64, 50.0, 14);
  Rng rng(15);
  std::vector<double> phases(plan.n_blocks);
  for (auto& p : phases)
    p = (2.0 * rng.uniform() - 1.0) * std::numbers::pi;
  const auto blocks = block_estimates(plan, truth, phases);
  const auto counts = exact_cross_counts(plan, truth);
  const auto result = stitch(plan, blocks, counts);
  CHECK(result.all_reliable);
  const auto report = mse(result.field, truth, GaugeMode::kAligned);
  CHECK(report.mse_per_mode / 50.0 < 1e-9);
}

TEST_CASE("relative_phase recovers a known rotation exactly") {
  const auto plan = build_plan(16, 3, 17);
  REQUIRE(plan.levels == 1);
  const auto truth = random_field(16, 40.0, 18);
  for (double phi : {0.3, -2.0, std::numbers::pi - 0.001,
                     -std::numbers::pi + 0.002}) {
    // Right-half truth = e^{j phi} times the right estimate's gauge.
    ComplexField rotated = truth;
    rotated.values.tail(8) *= std::polar(1.0, phi);
    MultiscalePlan p = plan;
    const auto counts = exact_cross_counts(p, rotated);
    const auto blocks = block_estimates(p, truth, {});
    const double amp_rescale = std::sqrt(p.level_energy_fraction() /
                                         p.intra_energy_fraction());
    bool reliable = false;
    const double phase = relative_phase(
        blocks[0].values, 0, 8, blocks[1].values, 8, 8, p.cross_designs[0],
        counts[0], amp_rescale, &reliable);
    CHECK(reliable);
    CHECK(circular_distance(phase, phi) < 1e-9);
  }
}

TEST_CASE("stitching preserves intra-block structure exactly") {
  // Each block is only ever rotated as a whole, so within a block the
  // output is a unit phasor times the input estimate (up to the known
  // amplitude rescale).
  const auto plan = build_plan(32, 2, 19);
  const auto truth = random_field(32, 30.0, 20);
  const auto blocks = block_estimates(plan, truth, {});
  const auto counts = exact_cross_counts(plan, truth);
  const auto result = stitch(plan, blocks, counts);
  const double amp = std::sqrt(plan.intra_energy_fraction());
  for (int b = 0; b < plan.n_blocks; ++b) {
    const CVec out = result.field.values.segment(plan.block_begin(b),
                                                 plan.block_size) * amp;
    const CVec in = blocks[b].values;
    const Complex ratio = in.dot(out) / in.squaredNorm();
    CHECK(std::fabs(std::abs(ratio) - 1.0) < 1e-9);
    CHECK((out - ratio * in).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("dark crossings are flagged unreliable") {
  const auto plan = build_plan(8, 2, 21);
  std::vector<ComplexField> blocks(plan.n_blocks);
  for (auto& b : blocks) b.values = CVec::Zero(plan.block_size);
  std::vector<RVec> counts;
  for (const auto& d : plan.cross_designs)
    counts.push_back(RVec::Zero(d.m_rows()));
  const auto result = stitch(plan, blocks, counts);
  CHECK(!result.all_reliable);
  REQUIRE(!result.log.empty());
  CHECK(!result.log[0].reliable);
  CHECK(result.log[0].phase == 0.0);
}

TEST_CASE("stitch validates shapes") {
  const auto plan = build_plan(16, 3, 23);
  const auto truth = random_field(16, 10.0, 24);
  auto blocks = block_estimates(plan, truth, {});
  const auto counts = exact_cross_counts(plan, truth);
  CHECK_THROWS_AS(stitch(plan, {blocks[0]}, counts), std::invalid_argument);
  CHECK_THROWS_AS(stitch(plan, blocks, {}), std::invalid_argument);
  blocks[1].values = CVec::Zero(3);
  CHECK_THROWS_AS(stitch(plan, blocks, counts), std::invalid_argument);
}

TEST_CASE("plan JSON and phase log formats") {
  const auto plan = build_plan(16, 2, 25);
  const auto text = plan_to_json(plan);
  CHECK(text.find("\"n\":16") != std::string::npos);
  CHECK(text.find("\"levels\":2") != std::string::npos);
  CHECK(text.find("multiscale_cross") != std::string::npos);

  PhaseLogEntry entry;
  entry.level = 1;
  entry.left_block = 0;
  entry.right_block = 2;
  entry.phase = 0.5;
  entry.n_connections = 8;
  const auto csv = phase_log_csv({entry});
  CHECK(csv.rfind("level,block_pair,phase,n_connections\n", 0) == 0);
  CHECK(csv.find("1,0-2,0.5") != std::string::npos);
}
