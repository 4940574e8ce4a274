#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <string>

namespace qpr {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

/// Length-N complex mode-amplitude vector in sqrt-photon units, so the
/// squared norm is the expected photo-detection count.
struct ComplexField {
  CVec values;

  int n_modes() const { return static_cast<int>(values.size()); }
  double total_intensity() const { return values.squaredNorm(); }
};

struct ErrorReport {
  double mse_total = 0.0;
  double mse_per_mode = 0.0;
  double gauge_phase = 0.0;  // in (-pi, pi]
};

struct GaugeAlignment {
  ComplexField aligned;
  double gauge_phase = 0.0;
  bool degenerate = false;  // <estimate, truth> = 0; phase defined as 0
};

enum class GaugeMode { kFixed, kAligned };

/// Each mode drawn from CN(0, photons_per_mode): real and imaginary parts
/// independent N(0, photons_per_mode / 2). Deterministic per seed.
ComplexField random_field(int n, double photons_per_mode, std::uint64_t seed);

/// Rotate `estimate` by the unit phase maximizing Re<rotated, truth>,
/// i.e. gauge_phase = -arg<estimate, truth>.
GaugeAlignment gauge_align(const ComplexField& estimate,
                           const ComplexField& truth);

ErrorReport mse(const ComplexField& estimate, const ComplexField& truth,
                GaugeMode gauge);

/// JSON array of [re, im] pairs (see docs/formats.md).
std::string field_to_json(const ComplexField& field);
ComplexField field_from_json(const std::string& text);

}  // namespace qpr
