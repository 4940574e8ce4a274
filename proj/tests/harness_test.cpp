#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qpr/harness.hpp"
#include "qpr/rng.hpp"

using namespace qpr;

namespace {

ExperimentConfig tiny_sweep_config() {
  ExperimentConfig cfg;
  cfg.n_list = {4, 8};
  cfg.l_list = {2, 3};
  cfg.trials = 2;
  cfg.seed = 99;
  cfg.photons_per_mode = 200.0;
  cfg.optimizer.max_iters = 300;
  cfg.optimizer.restarts = 2;
  return cfg;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("q_for follows the configured policy") {
  ExperimentConfig cfg;
  cfg.q_policy = QPolicy::kThreeForPairs;
  CHECK(cfg.q_for(2) == 3);
  CHECK(cfg.q_for(5) == 5);
  cfg.q_policy = QPolicy::kQEqualsL;
  CHECK(cfg.q_for(2) == 2);
  cfg.q_policy = QPolicy::kExplicit;
  cfg.q_explicit = 6;
  CHECK(cfg.q_for(2) == 6);
}

TEST_CASE("config JSON round trip") {
  auto cfg = tiny_sweep_config();
  cfg.q_policy = QPolicy::kExplicit;
  cfg.q_explicit = 4;
  cfg.threads = 2;
  cfg.holography_rho_factor = 3.0;
  cfg.q_list = {2, 3};
  cfg.cross_energy_fraction = 0.07;
  cfg.cross_exposure_boost = 2.5;
  cfg.optimizer.loss = LossKind::kIntensityLsq;
  cfg.optimizer.step_size = 0.125;
  const auto back = config_from_json(config_to_json(cfg));
  CHECK(back.n_list == cfg.n_list);
  CHECK(back.l_list == cfg.l_list);
  CHECK(back.q_policy == cfg.q_policy);
  CHECK(back.q_explicit == cfg.q_explicit);
  CHECK(back.photons_per_mode == cfg.photons_per_mode);
  CHECK(back.trials == cfg.trials);
  CHECK(back.seed == cfg.seed);
  CHECK(back.threads == cfg.threads);
  CHECK(back.holography_rho_factor == cfg.holography_rho_factor);
  CHECK(back.q_list == cfg.q_list);
  CHECK(back.cross_energy_fraction == cfg.cross_energy_fraction);
  CHECK(back.cross_exposure_boost == cfg.cross_exposure_boost);
  CHECK(back.optimizer.loss == cfg.optimizer.loss);
  CHECK(back.optimizer.step_size == cfg.optimizer.step_size);
  CHECK(back.optimizer.max_iters == cfg.optimizer.max_iters);
}

TEST_CASE("config validation") {
  auto cfg = tiny_sweep_config();
  cfg.trials = 0;
  CHECK_THROWS_AS(config_from_json(config_to_json(cfg)), std::invalid_argument);
  cfg = tiny_sweep_config();
  cfg.l_list = {1};
  CHECK_THROWS_AS(config_from_json(config_to_json(cfg)), std::invalid_argument);
  CHECK_THROWS_AS(config_from_json("{\"q_policy\":\"bogus\"}"),
                  std::invalid_argument);
}

TEST_CASE("sweep accounting and CSV shape") {
  const auto cfg = tiny_sweep_config();
  const auto rows = run_sweep(cfg);
  REQUIRE(rows.size() == 2 * 2 * 2);  // n values x L values x trials
  const auto csv = sweep_csv(rows);
  CHECK(csv.rfind("n,L,Q,trial,seed,mse_per_mode,crlb_per_mode,"
                  "time_per_mode_us,iters,final_loss\n",
                  0) == 0);
  CHECK(count_lines(csv) == static_cast<int>(rows.size()) + 1);
  for (const auto& row : rows) {
    CHECK(std::isfinite(row.mse_per_mode));
    CHECK(row.mse_per_mode >= 0.0);
    CHECK(std::isfinite(row.crlb_per_mode));  // n is small, bound computed
    // Gauge-reduced photon floor: (n - 1) + 1/4 over n modes.
    CHECK(row.crlb_per_mode >= (row.n - 0.75) / row.n - 1e-9);
    CHECK(row.iters > 0);
  }
  // Sorted by (n, L, trial).
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto key = [](const SweepRow& r) {
      return std::make_tuple(r.n, r.l_modes, r.trial);
    };
    CHECK(key(rows[i - 1]) < key(rows[i]));
  }
}

TEST_CASE("sweep results are identical across thread counts") {
  auto cfg = tiny_sweep_config();
  cfg.threads = 1;
  const auto serial = run_sweep(cfg);
  cfg.threads = 4;
  const auto parallel = run_sweep(cfg);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    // Everything but the wall-clock timing column must match bit-for-bit.
    CHECK(serial[i].n == parallel[i].n);
    CHECK(serial[i].l_modes == parallel[i].l_modes);
    CHECK(serial[i].trial == parallel[i].trial);
    CHECK(serial[i].seed == parallel[i].seed);
    CHECK(serial[i].mse_per_mode == parallel[i].mse_per_mode);
    CHECK(serial[i].crlb_per_mode == parallel[i].crlb_per_mode);
    CHECK(serial[i].iters == parallel[i].iters);
    CHECK(serial[i].final_loss == parallel[i].final_loss);
  }
}

TEST_CASE("a sweep row replays from its recorded seed") {
  const auto cfg = tiny_sweep_config();
  const auto rows = run_sweep(cfg);
  const auto& row = rows[3];
  const auto replay = run_single(row.n, row.l_modes, row.q_rows,
                                 cfg.photons_per_mode, cfg.optimizer, row.seed,
                                 true);
  CHECK(replay.mse_per_mode == row.mse_per_mode);
  CHECK(replay.final_loss == row.final_loss);
  CHECK(replay.iters == row.iters);
  CHECK(replay.crlb_per_mode == row.crlb_per_mode);
}

TEST_CASE("holography baseline rows join the sweep") {
  auto cfg = tiny_sweep_config();
  cfg.n_list = {4};
  cfg.l_list = {2};
  cfg.holography_rho_factor = 4.0;
  const auto rows = run_sweep(cfg);
  REQUIRE(rows.size() == 4);  // 2 coded + 2 holographic trials
  int holographic = 0;
  for (const auto& row : rows)
    if (row.l_modes == 1 && row.q_rows == 4) {
      ++holographic;
      CHECK(row.iters == 0);
      CHECK(std::isfinite(row.mse_per_mode));
    }
  CHECK(holographic == 2);
}

TEST_CASE("multiscale run and degenerate single-block penalty") {
  ExperimentConfig cfg;
  cfg.n_list = {8};
  cfg.q_list = {2, 3};  // q = 3 = log2(8) is the degenerate single block
  cfg.trials = 1;
  cfg.seed = 7;
  cfg.photons_per_mode = 500.0;
  cfg.optimizer.max_iters = 400;
  cfg.optimizer.restarts = 2;
  const auto rows = run_multiscale(cfg);
  REQUIRE(rows.size() == 2);
  const auto csv = multiscale_csv(rows);
  CHECK(csv.rfind("n,q,trial,seed,mse_multiscale_per_mode,"
                  "mse_global_per_mode,penalty_db\n",
                  0) == 0);
  for (const auto& row : rows) {
    CHECK(std::isfinite(row.mse_multiscale_per_mode));
    CHECK(std::isfinite(row.mse_global_per_mode));
  }
  CHECK(rows[1].block_exp == 3);
  CHECK(rows[1].penalty_db == 0.0);
  CHECK(rows[1].mse_multiscale_per_mode == rows[1].mse_global_per_mode);
}

TEST_CASE("output files are written and bad paths fail before computing") {
  auto cfg = tiny_sweep_config();
  cfg.n_list = {4};
  cfg.l_list = {2};
  cfg.trials = 1;
  cfg.output_path = "harness_test_sweep.csv";
  const auto rows = run_sweep(cfg);
  std::ifstream f(cfg.output_path);
  REQUIRE(f.good());
  std::stringstream buffer;
  buffer << f.rdbuf();
  CHECK(buffer.str() == sweep_csv(rows));
  f.close();
  std::remove(cfg.output_path.c_str());

  cfg.output_path = "/nonexistent-dir/out.csv";
  CHECK_THROWS_AS(run_sweep(cfg), std::runtime_error);
}

TEST_CASE("empty lists are rejected") {
  ExperimentConfig cfg;
  cfg.n_list = {};
  cfg.l_list = {2};
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
  cfg.n_list = {8};
  cfg.q_list = {};
  CHECK_THROWS_AS(run_multiscale(cfg), std::invalid_argument);
}
