#include "qpr/field.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qpr/rng.hpp"

namespace qpr {

ComplexField random_field(int n, double photons_per_mode,
                          std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("random_field: n must be >= 1");
  if (photons_per_mode < 0.0)
    throw std::invalid_argument("random_field: photons_per_mode must be >= 0");
  Rng rng(seed);
  const double sigma = std::sqrt(photons_per_mode / 2.0);
  ComplexField f;
  f.values.resize(n);
  for (int i = 0; i < n; ++i) {
    const double re = sigma * rng.gaussian();
    const double im = sigma * rng.gaussian();
    f.values[i] = Complex(re, im);
  }
  return f;
}

GaugeAlignment gauge_align(const ComplexField& estimate,
                           const ComplexField& truth) {
  if (estimate.n_modes() != truth.n_modes())
    throw std::invalid_argument("gauge_align: length mismatch");
  const Complex ip = estimate.values.dot(truth.values);  // conj(est) . truth
  GaugeAlignment out;
  if (std::abs(ip) == 0.0) {
    out.aligned = estimate;
    out.gauge_phase = 0.0;
    out.degenerate = true;
    return out;
  }
  const double phase = std::arg(ip);
  out.gauge_phase = phase;
  out.aligned.values = estimate.values * std::polar(1.0, phase);
  return out;
}

ErrorReport mse(const ComplexField& estimate, const ComplexField& truth,
                GaugeMode gauge) {
  if (estimate.n_modes() != truth.n_modes())
    throw std::invalid_argument("mse: length mismatch");
  ErrorReport rep;
  const ComplexField* est = &estimate;
  GaugeAlignment aligned;
  if (gauge == GaugeMode::kAligned) {
    aligned = gauge_align(estimate, truth);
    rep.gauge_phase = aligned.gauge_phase;
    est = &aligned.aligned;
  }
  rep.mse_total = (est->values - truth.values).squaredNorm();
  rep.mse_per_mode = rep.mse_total / truth.n_modes();
  return rep;
}

std::string field_to_json(const ComplexField& field) {
  auto j = nlohmann::json::array();
  for (int i = 0; i < field.n_modes(); ++i)
    j.push_back({field.values[i].real(), field.values[i].imag()});
  return j.dump();
}

ComplexField field_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  if (!j.is_array()) throw std::invalid_argument("field: expected JSON array");
  ComplexField f;
  f.values.resize(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw std::invalid_argument("field: expected [re, im] pairs");
    f.values[i++] = Complex(pair[0].get<double>(), pair[1].get<double>());
  }
  return f;
}

}  // namespace qpr
