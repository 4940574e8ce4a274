#include "qpr/forward.hpp"

#include <cstring>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qpr/rng.hpp"

namespace qpr {

CVec amplitudes(const MeasurementDesign& design, const ComplexField& x) {
  if (design.n_modes != x.n_modes())
    throw std::invalid_argument("amplitudes: dimension mismatch");
  const int q_rows = design.code.q_rows();
  CVec y(design.m_rows());
  CVec v(design.code.l_cols());
  for (std::size_t g = 0; g < design.groups.size(); ++g) {
    const auto& members = design.groups[g].members;
    for (std::size_t l = 0; l < members.size(); ++l)
      v[static_cast<Eigen::Index>(l)] =
          x.values[members[l]] * design.column_scale[members[l]];
    y.segment(static_cast<Eigen::Index>(g) * q_rows, q_rows).noalias() =
        design.code.entries * v;
  }
  if (design.reference) y += design.reference->cast<Complex>();
  return y;
}

RVec intensities(const MeasurementDesign& design, const ComplexField& x) {
  return amplitudes(design, x).cwiseAbs2();
}

DetectionRecord sample_counts(const RVec& intensity, std::uint64_t seed) {
  DetectionRecord record;
  record.expected_intensity = intensity;
  record.seed = seed;
  record.counts.resize(intensity.size());
  Rng rng(seed);
  for (Eigen::Index i = 0; i < intensity.size(); ++i) {
    if (intensity[i] < 0.0)
      throw std::invalid_argument("sample_counts: negative intensity");
    record.counts[i] = rng.poisson(intensity[i]);
  }
  return record;
}

std::string detection_to_json(const DetectionRecord& record) {
  nlohmann::ordered_json j;
  j["counts"] = std::vector<std::int64_t>(
      record.counts.data(), record.counts.data() + record.counts.size());
  j["expected_intensity"] = std::vector<double>(
      record.expected_intensity.data(),
      record.expected_intensity.data() + record.expected_intensity.size());
  j["seed"] = record.seed;
  return j.dump();
}

DetectionRecord detection_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  DetectionRecord record;
  const auto counts = j.at("counts").get<std::vector<std::int64_t>>();
  record.counts = Eigen::Map<const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>>(
      counts.data(), static_cast<Eigen::Index>(counts.size()));
  const auto intens = j.at("expected_intensity").get<std::vector<double>>();
  record.expected_intensity =
      Eigen::Map<const RVec>(intens.data(), static_cast<Eigen::Index>(intens.size()));
  record.seed = j.at("seed").get<std::uint64_t>();
  return record;
}

std::vector<std::uint8_t> counts_to_binary(const DetectionRecord& record) {
  const std::uint64_t n = static_cast<std::uint64_t>(record.counts.size());
  std::vector<std::uint8_t> out(4 + 8 + 8 * n);
  std::memcpy(out.data(), "QPRC", 4);
  std::memcpy(out.data() + 4, &n, 8);
  std::memcpy(out.data() + 12, record.counts.data(), 8 * n);
  return out;
}

Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts_from_binary(
    const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "QPRC", 4) != 0)
    throw std::invalid_argument("counts_from_binary: bad header");
  std::uint64_t n = 0;
  std::memcpy(&n, bytes.data() + 4, 8);
  if (bytes.size() != 12 + 8 * n)
    throw std::invalid_argument("counts_from_binary: truncated payload");
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts(
      static_cast<Eigen::Index>(n));
  std::memcpy(counts.data(), bytes.data() + 12, 8 * n);
  return counts;
}

}  // namespace qpr
