#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qpr/bounds.hpp"
#include "qpr/designs.hpp"
#include "qpr/field.hpp"
#include "qpr/forward.hpp"
#include "qpr/rng.hpp"

using namespace qpr;

namespace {

// Definitional Fisher matrix from finite differences of the intensities:
// J_pq = sum_m (dI_m/dt_p)(dI_m/dt_q) / I_m over real parameters
// t = [Re x; Im x]. Tiny sizes only.
Eigen::MatrixXd fd_fisher(const MeasurementDesign& design,
                          const ComplexField& x) {
  const int n = x.n_modes();
  const int m = design.m_rows();
  const double h = 1e-6;
  Eigen::MatrixXd deriv(m, 2 * n);
  for (int p = 0; p < 2 * n; ++p) {
    ComplexField plus = x, minus = x;
    const int mode = p % n;
    const Complex delta = p < n ? Complex(h, 0.0) : Complex(0.0, h);
    plus.values[mode] += delta;
    minus.values[mode] -= delta;
    deriv.col(p) =
        (intensities(design, plus) - intensities(design, minus)) / (2.0 * h);
  }
  const RVec intens = intensities(design, x);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int row = 0; row < m; ++row) {
    if (intens[row] <= 0.0) continue;
    j += deriv.row(row).transpose() * deriv.row(row) / intens[row];
  }
  return j;
}

}  // namespace

TEST_CASE("dark field on a holographic design saturates the photon limit") {
  const int n = 5;
  ComplexField dark;
  dark.values = CVec::Zero(n);
  const auto design = holographic_design(n, 4.0);
  const auto bundle = fisher(design, dark);
  // y_m = rho is real, so each a_m a_m^T y^2/|y|^2 term sums to A^T A = 0.
  CHECK(bundle.c_matrix.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(bundle.crlb_trace_full == doctest::Approx(static_cast<double>(n)));
  CHECK(!bundle.singular);
}

TEST_CASE("eigenvalues pair symmetrically around 2") {
  const auto design = random_group_design(12, 3, 3, 41);
  const auto x = random_field(12, 80.0, 42);
  const auto bundle = fisher(design, x);
  const int two_n = static_cast<int>(bundle.eigenvalues.size());
  REQUIRE(two_n == 24);
  for (int i = 0; i < two_n / 2; ++i) {
    const double low = bundle.eigenvalues[i];
    const double high = bundle.eigenvalues[two_n - 1 - i];
    CHECK(low + high == doctest::Approx(4.0).epsilon(1e-10));
  }
  CHECK(bundle.crlb_trace_full >= 12.0 - 1e-9);
}

TEST_CASE("fisher matches the finite-difference definition") {
  for (int instance = 0; instance < 8; ++instance) {
    const std::uint64_t s = Rng::derive(600, instance);
    const int n = 2 + static_cast<int>(s % 5);  // 2..6
    MeasurementDesign design;
    if (instance % 2 == 0) {
      design = random_group_design(n, 2, 3, Rng::derive(s, 1));
    } else {
      design = holographic_design(n, 3.0 + static_cast<double>(instance));
    }
    const auto x = random_field(n, 9.0, Rng::derive(s, 2));
    const auto bundle = fisher(design, x);
    const auto oracle = fd_fisher(design, x);
    const double scale = 1.0 + oracle.cwiseAbs().maxCoeff();
    CHECK((bundle.j_matrix - oracle).cwiseAbs().maxCoeff() / scale < 1e-5);
  }
}

TEST_CASE("strong holographic reference drives the bound to the limit") {
  const int n = 8;
  const auto x = random_field(n, 25.0, 43);
  const double peak = x.values.cwiseAbs().maxCoeff();
  double previous_trace = std::numeric_limits<double>::infinity();
  double previous_norm = std::numeric_limits<double>::infinity();
  for (double factor : {10.0, 100.0, 1000.0}) {
    const auto design = holographic_design(n, factor * peak);
    const auto bundle = fisher(design, x);
    const double norm = bundle.c_matrix.cwiseAbs().maxCoeff();
    CHECK(norm < previous_norm);
    CHECK(bundle.crlb_trace_full <= previous_trace + 1e-12);
    CHECK(bundle.crlb_trace_full >= static_cast<double>(n) - 1e-9);
    previous_norm = norm;
    previous_trace = bundle.crlb_trace_full;
  }
  // At factor 1000 the bound is photon-limited to high accuracy.
  const auto tight = fisher(holographic_design(n, 1000.0 * peak), x);
  CHECK(tight.crlb_trace_full ==
        doctest::Approx(static_cast<double>(n)).epsilon(1e-4));
}

TEST_CASE("c_matrix on a single real row by hand") {
  // One group, one mode, code [[1]], no reference: y = x, so the row term is
  // a a^T y^2/|y|^2 = e^{2j arg x}.
  MeasurementDesign design;
  design.n_modes = 1;
  design.l_modes = 1;
  design.q_rows = 1;
  design.code = dft_code(1, 1);
  design.groups = {Group{{0}}};
  design = normalize_columns(std::move(design));
  ComplexField x;
  x.values.resize(1);
  x.values << Complex(3.0, 4.0);
  const auto c = c_matrix(design, x);
  const Complex expected = Complex(3.0, 4.0) * Complex(3.0, 4.0) / 25.0;
  CHECK(std::abs(c(0, 0) - expected) < 1e-12);
}

TEST_CASE("c_matrix rejects an all-dark instrument") {
  auto design = holographic_design(2, 0.0);
  ComplexField dark;
  dark.values = CVec::Zero(2);
  CHECK_THROWS_AS(c_matrix(design, dark), std::invalid_argument);
}

TEST_CASE("many-mode coded designs decorrelate the diagonal") {
  const int n = 256;
  const auto design = random_group_design(n, 5, 5, 47);
  const auto x = random_field(n, 100.0, 48);
  const auto c = c_matrix(design, x);
  std::vector<double> mags(n);
  for (int i = 0; i < n; ++i) mags[i] = std::abs(c(i, i));
  std::nth_element(mags.begin(), mags.begin() + n / 2, mags.end());
  CHECK(mags[n / 2] < 0.25);
}

TEST_CASE("diagonal approximation edge cases") {
  CVec zeros = CVec::Zero(4);
  // 1/2 for the gauge-pinned mode, 1 each for the rest.
  CHECK(diagonal_crlb_approx(zeros) == doctest::Approx(3.5));
  CVec one = CVec::Zero(1);
  CHECK(diagonal_crlb_approx(one) == doctest::Approx(0.5));
  CVec saturated(2);
  saturated << Complex(0.0, 0.0), Complex(1.0, 0.0);  // u = 2 in mode 2
  CHECK(std::isinf(diagonal_crlb_approx(saturated)));
  CHECK_THROWS_AS(diagonal_crlb_approx(CVec()), std::invalid_argument);
}

TEST_CASE("diagonal approximation is exact for holographic designs") {
  // The holographic C matrix is exactly diagonal, so the closed form must
  // reproduce the gauge-reduced trace from the full eigendecomposition.
  const int n = 7;
  const auto x = random_field(n, 16.0, 51);
  const auto design =
      holographic_design(n, 20.0 * x.values.cwiseAbs().maxCoeff());
  const auto bundle = fisher(design, x);
  CHECK((bundle.c_matrix - bundle.c_matrix.diagonal().asDiagonal().toDenseMatrix())
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  const double approx = diagonal_crlb_approx(bundle.c_matrix.diagonal());
  CHECK(approx ==
        doctest::Approx(bundle.crlb_trace_gauge_reduced).epsilon(1e-9));
}

TEST_CASE("report JSON carries the headline numbers") {
  const auto design = random_group_design(6, 2, 3, 53);
  const auto x = random_field(6, 40.0, 54);
  const auto bundle = fisher(design, x);
  const auto text = fisher_report_json(bundle);
  CHECK(text.find("crlb_trace_full") != std::string::npos);
  CHECK(text.find("crlb_trace_gauge_reduced") != std::string::npos);
}
