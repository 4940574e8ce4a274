#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "qpr/designs.hpp"
#include "qpr/field.hpp"

namespace qpr {

enum class LossKind { kPoissonNll, kIntensityLsq };

struct OptimizerConfig {
  double step_size = 0.0;   // 0 = auto: 0.05 * sqrt(total counts / N)
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_iters = 2000;
  double tol = 1e-10;       // relative loss change for early stop
  LossKind loss = LossKind::kPoissonNll;
  int restarts = 3;
  /// Warm-start iterations on the intensity least-squares surface before
  /// switching to the Poisson likelihood. The quadratic surface is far less
  /// prone to spurious minima at small L; the likelihood stage restores
  /// statistical efficiency. 0 disables; ignored when loss is kIntensityLsq.
  int lsq_warmstart_iters = -1;  // -1 = same as max_iters
};

/// Rate floor inside the Poisson NLL so zero-intensity rows stay finite.
inline constexpr double kRateFloor = 1e-9;

struct ReconstructionResult {
  ComplexField field;
  std::vector<double> loss_trace;  // per recorded iteration, best restart
  int iters = 0;
  double final_loss = 0.0;
  int restarts_used = 0;
};

/// Loss value and Wirtinger gradient (d/dr + j d/di) for the given field.
/// PoissonNll: sum_m (I_m - d_m ln I_m) with I floored at kRateFloor.
/// IntensityLsq: sum_m (I_m - d_m)^2.
std::pair<double, CVec> loss_and_gradient(const MeasurementDesign& design,
                                          const RVec& counts,
                                          const ComplexField& x,
                                          LossKind loss);

/// Adam-driven reconstruction from photon counts. Initialization is complex
/// Gaussian scaled to the measured total energy; the best restart by final
/// loss wins. Diverging runs restart with a halved step.
ReconstructionResult reconstruct(const MeasurementDesign& design,
                                 const RVec& counts,
                                 const OptimizerConfig& cfg,
                                 std::uint64_t seed);

/// Closed-form quadrature estimator for holographic designs with rho > 0:
/// Re(x_n) = (d_0 - d_2) / (2 rho), Im(x_n) = (d_3 - d_1) / (2 rho).
ComplexField holographic_estimate(const MeasurementDesign& design,
                                  const RVec& counts);

}  // namespace qpr
