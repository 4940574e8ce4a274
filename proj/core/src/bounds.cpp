#include "qpr/bounds.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qpr/forward.hpp"

namespace qpr {
namespace {

constexpr int kMaxDenseModes = 4096;
constexpr double kSingularTol = 1e-12;

double trace_inverse(const RVec& eigenvalues, bool* singular) {
  double trace = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] <= kSingularTol) {
      *singular = true;
      return std::numeric_limits<double>::infinity();
    }
    trace += 1.0 / eigenvalues[i];
  }
  return trace;
}

}  // namespace

Eigen::MatrixXcd c_matrix(const MeasurementDesign& design,
                          const ComplexField& x) {
  if (design.n_modes != x.n_modes())
    throw std::invalid_argument("c_matrix: dimension mismatch");
  const CVec y = amplitudes(design, x);
  const int q_rows = design.code.q_rows();
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(design.n_modes, design.n_modes);
  bool any_row = false;
  for (std::size_t g = 0; g < design.groups.size(); ++g) {
    const auto& members = design.groups[g].members;
    const Eigen::Index row0 = static_cast<Eigen::Index>(g) * q_rows;
    for (int q = 0; q < q_rows; ++q) {
      const double mag2 = std::norm(y[row0 + q]);
      if (mag2 <= 0.0) continue;  // empty Fisher limit for dark rows
      any_row = true;
      const Complex phasor = y[row0 + q] * y[row0 + q] / mag2;
      for (std::size_t l0 = 0; l0 < members.size(); ++l0) {
        const Complex a0 = std::conj(design.code.entries(q, static_cast<int>(l0))) *
                           design.column_scale[members[l0]];
        for (std::size_t l1 = 0; l1 < members.size(); ++l1) {
          const Complex a1 =
              std::conj(design.code.entries(q, static_cast<int>(l1))) *
              design.column_scale[members[l1]];
          c(members[l0], members[l1]) += a0 * a1 * phasor;
        }
      }
    }
  }
  if (!any_row)
    throw std::invalid_argument("c_matrix: all rows have zero intensity");
  return c;
}

FisherBundle fisher(const MeasurementDesign& design, const ComplexField& x) {
  const int n = design.n_modes;
  if (n > kMaxDenseModes)
    throw std::invalid_argument("fisher: dense bound limited to n <= 4096");
  FisherBundle bundle;
  bundle.c_matrix = c_matrix(design, x);
  const Eigen::MatrixXd c_r = 2.0 * bundle.c_matrix.real();
  const Eigen::MatrixXd c_i = 2.0 * bundle.c_matrix.imag();

  Eigen::MatrixXd j(2 * n, 2 * n);
  j.topLeftCorner(n, n) = c_r;
  j.topRightCorner(n, n) = c_i;
  j.bottomLeftCorner(n, n) = c_i;
  j.bottomRightCorner(n, n) = -c_r;
  j.diagonal().array() += 2.0;
  // Symmetrize away accumulation round-off.
  bundle.j_matrix = 0.5 * (j + j.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(bundle.j_matrix,
                                                        Eigen::EigenvaluesOnly);
  bundle.eigenvalues = solver.eigenvalues();
  bundle.crlb_trace_full = trace_inverse(bundle.eigenvalues, &bundle.singular);

  // Pin Im(x_0): drop its row and column (index n in the [r; i] ordering).
  Eigen::MatrixXd reduced(2 * n - 1, 2 * n - 1);
  std::vector<int> keep;
  keep.reserve(2 * n - 1);
  for (int i = 0; i < 2 * n; ++i)
    if (i != n) keep.push_back(i);
  for (std::size_t a = 0; a < keep.size(); ++a)
    for (std::size_t b = 0; b < keep.size(); ++b)
      reduced(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          bundle.j_matrix(keep[a], keep[b]);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rsolver(reduced,
                                                         Eigen::EigenvaluesOnly);
  bundle.crlb_trace_gauge_reduced =
      trace_inverse(rsolver.eigenvalues(), &bundle.singular);
  return bundle;
}

double diagonal_crlb_approx(const CVec& c_diag) {
  if (c_diag.size() < 1)
    throw std::invalid_argument("diagonal_crlb_approx: empty diagonal");
  const double u1 = 2.0 * c_diag[0].real();
  if (u1 <= -2.0) return std::numeric_limits<double>::infinity();
  double trace = 1.0 / (2.0 + u1);
  for (Eigen::Index i = 1; i < c_diag.size(); ++i) {
    const double u = 2.0 * c_diag[i].real();
    const double v = 2.0 * c_diag[i].imag();
    const double denom = 4.0 - u * u - v * v;
    if (denom <= 0.0) return std::numeric_limits<double>::infinity();
    trace += 4.0 / denom;
  }
  return trace;
}

std::string fisher_report_json(const FisherBundle& bundle) {
  nlohmann::ordered_json j;
  const int n = static_cast<int>(bundle.c_matrix.rows());
  j["n"] = n;
  j["crlb_trace_full"] = bundle.crlb_trace_full;
  j["crlb_trace_gauge_reduced"] = bundle.crlb_trace_gauge_reduced;
  j["crlb_per_mode"] = bundle.crlb_trace_full / n;
  j["singular"] = bundle.singular;
  j["eigenvalue_min"] = bundle.eigenvalues.minCoeff();
  j["eigenvalue_max"] = bundle.eigenvalues.maxCoeff();
  j["c_abs_max"] = bundle.c_matrix.cwiseAbs().maxCoeff();
  j["c_diag_abs_median"] = [&] {
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = std::abs(bundle.c_matrix(i, i));
    std::nth_element(diag.begin(), diag.begin() + n / 2, diag.end());
    return diag[n / 2];
  }();
  return j.dump();
}

}  // namespace qpr
