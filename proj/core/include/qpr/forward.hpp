#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qpr/designs.hpp"
#include "qpr/field.hpp"

namespace qpr {

/// Photon counts from one detection pass plus the intensities that
/// generated them.
struct DetectionRecord {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts;
  RVec expected_intensity;
  std::uint64_t seed = 0;

  RVec counts_as_real() const { return counts.cast<double>(); }
};

/// Complex detector amplitudes y = rho + A x, evaluated group-by-group.
CVec amplitudes(const MeasurementDesign& design, const ComplexField& x);

/// Expected intensities |y_m|^2.
RVec intensities(const MeasurementDesign& design, const ComplexField& x);

/// Independent Poisson draws with the given rates; deterministic per seed.
DetectionRecord sample_counts(const RVec& intensity, std::uint64_t seed);

std::string detection_to_json(const DetectionRecord& record);
DetectionRecord detection_from_json(const std::string& text);

/// Compact binary counts format (see docs/formats.md): magic "QPRC",
/// little-endian u64 length, then int64 counts.
std::vector<std::uint8_t> counts_to_binary(const DetectionRecord& record);
Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts_from_binary(
    const std::vector<std::uint8_t>& bytes);

}  // namespace qpr
