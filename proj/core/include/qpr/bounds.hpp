#pragma once

#include <string>

#include "qpr/designs.hpp"
#include "qpr/field.hpp"

namespace qpr {

/// Fisher information and Cramer-Rao data for one (design, field) pair.
struct FisherBundle {
  Eigen::MatrixXcd c_matrix;   // sum_m a_m a_m^T y_m^2 / |y_m|^2
  Eigen::MatrixXd j_matrix;    // 2N x 2N, ordered [r; i]
  RVec eigenvalues;            // of j_matrix, ascending
  double crlb_trace_full = 0.0;
  double crlb_trace_gauge_reduced = 0.0;  // Im(x_0) pinned, 2N-1 params
  bool singular = false;       // an eigenvalue hit zero; traces infinite
};

/// C = sum over rows of a_m a_m^T y_m^2/|y_m|^2 (a plain transpose, not an
/// adjoint). Zero-intensity rows are skipped. The Fisher assembly doubles
/// the real and imaginary parts of this sum.
Eigen::MatrixXcd c_matrix(const MeasurementDesign& design,
                          const ComplexField& x);

/// Assemble J = 2I + [[C_R, C_I], [C_I, -C_R]] with C_R = 2 Re C,
/// C_I = 2 Im C; eigen-decompose; traces of the inverse come from the
/// eigenvalues. Dense path guarded at n <= 4096.
FisherBundle fisher(const MeasurementDesign& design, const ComplexField& x);

/// Gauge-reduced CRLB trace when C is (near-)diagonal:
/// 1/(2 + u_1) + sum_{n >= 2} 4 / (4 - u_n^2 - v_n^2) with
/// u_n = 2 Re C_nn, v_n = 2 Im C_nn. Returns +inf when u^2 + v^2 >= 4.
double diagonal_crlb_approx(const CVec& c_diag);

/// Summary (traces, extreme eigenvalues, C-matrix magnitude stats) as JSON.
std::string fisher_report_json(const FisherBundle& bundle);

}  // namespace qpr
