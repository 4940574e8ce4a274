#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpr/estimate.hpp"

namespace qpr {

enum class QPolicy { kThreeForPairs, kQEqualsL, kExplicit };

/// Experiment driver settings. Loaded from a JSON config file; CLI flags
/// override file values.
struct ExperimentConfig {
  std::vector<int> n_list;
  std::vector<int> l_list;
  QPolicy q_policy = QPolicy::kThreeForPairs;
  int q_explicit = 0;
  double photons_per_mode = 1e4;
  int trials = 1;
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  OptimizerConfig optimizer;
  double holography_rho_factor = 0.0;  // 0 disables the holography baseline
  std::string output_path;
  // Multiscale runs.
  std::vector<int> q_list;
  double cross_energy_fraction = 0.05;
  // Exposure-time multiplier for the cross-block phase-link detections,
  // relative to one budget unit. The cross designs tap only
  // cross_energy_fraction of the beam power, but the link exposures are a
  // separate short detection pass whose integration time is a free knob; the
  // recorded counts are normalized back by the multiplier so all downstream
  // scales are unchanged. 0 (default) selects
  // 100 / plan.level_energy_fraction() (one hundred times the full-power
  // equivalent), which makes link-phase noise negligible next to the
  // per-block reconstruction error, so the multiscale-vs-global comparison
  // isolates the block-size penalty. Set to 1.0 to charge the links against
  // the same photon budget as the block measurements.
  double cross_exposure_boost = 0.0;

  int q_for(int l_modes) const;
};

ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

struct SweepRow {
  int n = 0;
  int l_modes = 0;
  int q_rows = 0;
  int trial = 0;
  std::uint64_t seed = 0;  // task seed; replaying it reproduces the row
  double mse_per_mode = 0.0;
  double crlb_per_mode = 0.0;  // NaN when n exceeds the dense-bound guard
  double time_per_mode_us = 0.0;
  int iters = 0;
  double final_loss = 0.0;
};

struct MultiscaleRow {
  int n = 0;
  int block_exp = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  double mse_multiscale_per_mode = 0.0;
  double mse_global_per_mode = 0.0;
  double penalty_db = 0.0;
};

/// One sweep cell: build design, draw field, detect, reconstruct, score.
/// Sub-seeds derive from task_seed, so a row replays bit-identically.
SweepRow run_single(int n, int l_modes, int q_rows, double photons_per_mode,
                    const OptimizerConfig& optimizer, std::uint64_t task_seed,
                    bool with_crlb);

/// Holography baseline cell using the closed-form quadrature estimator.
SweepRow run_single_holography(int n, double photons_per_mode,
                               double rho_factor, std::uint64_t task_seed,
                               bool with_crlb);

/// One multiscale cell plus its same-n global comparison.
MultiscaleRow run_single_multiscale(int n, int block_exp,
                                    double photons_per_mode,
                                    double cross_energy_fraction,
                                    const OptimizerConfig& optimizer,
                                    std::uint64_t task_seed,
                                    double cross_exposure_boost = 0.0);

/// Full sweep over (n, L, trial); rows are computed on a bounded worker
/// pool, then sorted, so output is deterministic regardless of scheduling.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);
std::vector<MultiscaleRow> run_multiscale(const ExperimentConfig& cfg);

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::string multiscale_csv(const std::vector<MultiscaleRow>& rows);

/// Writes text to cfg.output_path (must be writable; probed before any
/// computation by run_* when set).
void write_text_file(const std::string& path, const std::string& text);

}  // namespace qpr
