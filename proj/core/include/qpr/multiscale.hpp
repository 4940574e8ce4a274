#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpr/designs.hpp"
#include "qpr/estimate.hpp"
#include "qpr/field.hpp"

namespace qpr {

/// Block-based retrieval plan: independent rank-0 reconstructions tied
/// together by per-level cross designs over a complete binary pairing tree.
struct MultiscalePlan {
  int n_modes = 0;
  int block_exp = 0;   // q; block size 2^q
  int block_size = 0;
  int n_blocks = 0;    // 2^(k - q), power of two
  int levels = 0;      // pairing-tree depth k - q
  double cross_energy_fraction = 0.05;
  std::uint64_t seed = 0;
  /// L = 2 intra designs, one per block, indices local to the block.
  std::vector<MeasurementDesign> intra_designs;
  /// One design per tree level (1-based level = index + 1), n_modes-wide;
  /// every pair links sibling blocks at that level, two connections per
  /// mode, degree-normalized.
  std::vector<MeasurementDesign> cross_designs;

  double intra_energy_fraction() const {
    return levels == 0 ? 1.0 : 1.0 - cross_energy_fraction;
  }
  double level_energy_fraction() const {
    return levels == 0 ? 0.0 : cross_energy_fraction / levels;
  }
  int block_begin(int block) const { return block * block_size; }
};

struct PhaseLogEntry {
  int level = 0;
  int left_block = 0;   // first rank-0 block of the left sibling
  int right_block = 0;  // first rank-0 block of the right sibling
  double phase = 0.0;
  int n_connections = 0;
  bool reliable = true;
};

struct StitchResult {
  ComplexField field;
  std::vector<PhaseLogEntry> log;
  bool all_reliable = true;
};

/// Build the plan for n = 2^k modes with 2^q-mode rank-0 blocks.
MultiscalePlan build_plan(int n, int block_exp, std::uint64_t seed,
                          double cross_energy_fraction = 0.05);

/// Relative phase phi such that the true right-hand field is approximately
/// e^{j phi} times the right estimate's gauge, from the cross connections
/// between the two mode ranges inside `cross_design`. Circular mean over
/// per-connection phasors. `amp_rescale` converts the estimates (made at
/// the intra exposure) to the cross exposure.
double relative_phase(const CVec& estimate_left, int offset_left, int len_left,
                      const CVec& estimate_right, int offset_right,
                      int len_right, const MeasurementDesign& cross_design,
                      const RVec& cross_counts, double amp_rescale,
                      bool* reliable);

/// Bottom-up phase stitching over the pairing tree. `intra_estimates` are
/// the per-block reconstructions (of the intra-exposure field);
/// `cross_counts` holds one count vector per level. The output is rescaled
/// to estimate the full-exposure field, up to one residual global phase.
StitchResult stitch(const MultiscalePlan& plan,
                    const std::vector<ComplexField>& intra_estimates,
                    const std::vector<RVec>& cross_counts);

std::string plan_to_json(const MultiscalePlan& plan);

/// CSV lines "level,block_pair,phase,n_connections" for diagnostics.
std::string phase_log_csv(const std::vector<PhaseLogEntry>& log);

}  // namespace qpr
