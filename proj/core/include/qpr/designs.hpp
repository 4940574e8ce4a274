#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qpr/field.hpp"

namespace qpr {

/// Q x L interferometer code with orthonormal columns.
struct CodeBlock {
  Eigen::MatrixXcd entries;

  int q_rows() const { return static_cast<int>(entries.rows()); }
  int l_cols() const { return static_cast<int>(entries.cols()); }
};

/// One measured group: L distinct mode indices fed through the design's
/// code block. Groups occupy Q consecutive detector rows each, in order.
struct Group {
  std::vector<int> members;
};

/// Sparse description of the measurement matrix A and reference rho.
/// Row m of A is a_m^dagger; the dense matrix is materialized only for
/// oracle tests. All groups of a design share one code block.
struct MeasurementDesign {
  int n_modes = 0;
  int l_modes = 0;  // L, group size
  int q_rows = 0;   // Q, detectors per group
  std::uint64_t seed = 0;
  CodeBlock code;
  std::vector<Group> groups;
  RVec column_scale;                  // per-mode, 1/sqrt(degree)
  std::optional<RVec> reference;      // per-row amplitudes rho, length M
  std::string kind;                   // "random_group" | "holographic" | ...

  int m_rows() const {
    return static_cast<int>(groups.size()) * code.q_rows();
  }
};

/// W_{q,l} = (1/sqrt(Q)) exp(j 2 pi q l / Q), q = 0..Q-1, l = 1..L.
CodeBlock dft_code(int q_rows, int l_cols);

/// Random near-regular L-mode group design. For L = 2: 2*ceil(log2 n)
/// rounds of random pairings, n*ceil(log2 n) pairs total with every mode at
/// degree 2*ceil(log2 n). For L >= 3: ceil(n log2 n) groups, each mode
/// appearing ceil(L log2 n) +- 1 times. Connectivity is enforced by
/// reseeded retries and, as a last resort, bridging groups.
MeasurementDesign random_group_design(int n, int l_modes, int q_rows,
                                      std::uint64_t seed);

/// True iff the hypergraph of group member sets has a single component
/// covering all n modes.
bool is_connected(const MeasurementDesign& design);

/// Phase-quadrature holography: block-diagonal A with per-mode column
/// (1, j, -1, -j)/2 and a uniform reference amplitude rho on all 4n rows.
/// Satisfies A^T A = 0 exactly.
MeasurementDesign holographic_design(int n, double rho);

/// Set column_scale to 1/sqrt(degree) so that A^dagger A = I.
MeasurementDesign normalize_columns(MeasurementDesign design);

/// Number of groups containing each mode.
std::vector<int> mode_degrees(const MeasurementDesign& design);

/// Dense M x N matrix A. Oracle/test path only; refuses when M*N exceeds
/// the guard.
Eigen::MatrixXcd materialize_rows(const MeasurementDesign& design,
                                  std::int64_t max_elements = 10'000'000);

/// All binom(n, L) groups; tiny oracle sizes only (n <= 12).
MeasurementDesign all_combinations_design(int n, int l_modes, int q_rows);

/// JSON round-trip per the documented design schema
/// {n, L, Q, seed, kind, groups, column_scale, reference}.
std::string design_to_json(const MeasurementDesign& design);
MeasurementDesign design_from_json(const std::string& text);

}  // namespace qpr
