#include "qpr/estimate.hpp"

#include <cmath>
#include <stdexcept>

#include "qpr/forward.hpp"
#include "qpr/rng.hpp"

namespace qpr {
namespace {

struct AdamState {
  CVec first;   // momentum
  RVec second;  // per-coordinate squared-gradient average over (re, im)
  int t = 0;

  explicit AdamState(int n) : first(CVec::Zero(n)), second(RVec::Zero(n)) {}
};

// One Adam update in-place; moments track the complex gradient with a shared
// second moment for the real and imaginary parts of each mode.
void adam_step(const OptimizerConfig& cfg, double step, const CVec& grad,
               AdamState& st, CVec& x) {
  ++st.t;
  st.first = cfg.beta1 * st.first + (1.0 - cfg.beta1) * grad;
  st.second = cfg.beta2 * st.second +
              (1.0 - cfg.beta2) * grad.cwiseAbs2().real();
  const double c1 = 1.0 - std::pow(cfg.beta1, st.t);
  const double c2 = 1.0 - std::pow(cfg.beta2, st.t);
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const Complex m_hat = st.first[i] / c1;
    const double v_hat = st.second[i] / c2;
    x[i] -= step * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

// Run one optimization stage; returns final loss or NaN on divergence.
double run_stage(const MeasurementDesign& design, const RVec& counts,
                 const OptimizerConfig& cfg, LossKind loss, int iters,
                 double step0, CVec& x, std::vector<double>* trace) {
  ComplexField field;
  field.values = x;
  AdamState st(static_cast<int>(x.size()));
  double step = step0;
  const int decay_every = std::max(iters / 4, 1);
  double prev_loss = std::numeric_limits<double>::infinity();
  double loss_value = 0.0;
  for (int t = 1; t <= iters; ++t) {
    auto [lv, grad] = loss_and_gradient(design, counts, field, loss);
    loss_value = lv;
    if (!std::isfinite(loss_value)) return loss_value;
    adam_step(cfg, step, grad, st, field.values);
    if (trace && (t % 10 == 0 || t == iters)) trace->push_back(loss_value);
    if (t % decay_every == 0) {
      step *= 0.5;
      const double denom = std::max(std::fabs(loss_value), 1.0);
      if (std::fabs(prev_loss - loss_value) / denom < cfg.tol) break;
      prev_loss = loss_value;
    }
  }
  x = field.values;
  return loss_value;
}

}  // namespace

std::pair<double, CVec> loss_and_gradient(const MeasurementDesign& design,
                                          const RVec& counts,
                                          const ComplexField& x,
                                          LossKind loss) {
  if (design.n_modes != x.n_modes() || counts.size() != design.m_rows())
    throw std::invalid_argument("loss_and_gradient: dimension mismatch");
  const int q_rows = design.code.q_rows();
  const int l_cols = design.code.l_cols();
  double loss_value = 0.0;
  CVec grad = CVec::Zero(design.n_modes);
  CVec v(l_cols), y(q_rows), wy(q_rows), back(l_cols);
  const bool has_ref = design.reference.has_value();
  for (std::size_t g = 0; g < design.groups.size(); ++g) {
    const auto& members = design.groups[g].members;
    for (std::size_t l = 0; l < members.size(); ++l)
      v[static_cast<Eigen::Index>(l)] =
          x.values[members[l]] * design.column_scale[members[l]];
    y.noalias() = design.code.entries * v;
    const Eigen::Index row0 = static_cast<Eigen::Index>(g) * q_rows;
    if (has_ref)
      y += design.reference->segment(row0, q_rows).cast<Complex>();
    for (int q = 0; q < q_rows; ++q) {
      const double intensity = std::norm(y[q]);
      const double d = counts[row0 + q];
      double w;  // d(loss)/d(intensity)
      if (loss == LossKind::kPoissonNll) {
        const double rate = std::max(intensity, kRateFloor);
        loss_value += rate - d * std::log(rate);
        w = 1.0 - d / rate;
      } else {
        const double r = intensity - d;
        loss_value += r * r;
        w = 2.0 * r;
      }
      wy[q] = w * y[q];
    }
    back.noalias() = design.code.entries.adjoint() * wy;
    for (std::size_t l = 0; l < members.size(); ++l)
      grad[members[l]] += 2.0 * design.column_scale[members[l]] *
                          back[static_cast<Eigen::Index>(l)];
  }
  return {loss_value, std::move(grad)};
}

ReconstructionResult reconstruct(const MeasurementDesign& design,
                                 const RVec& counts,
                                 const OptimizerConfig& cfg,
                                 std::uint64_t seed) {
  if (counts.size() != design.m_rows())
    throw std::invalid_argument("reconstruct: counts length mismatch");
  if (cfg.restarts < 1 || cfg.max_iters < 1 || cfg.step_size < 0.0)
    throw std::invalid_argument("reconstruct: bad optimizer config");

  const double energy = std::max(counts.sum(), 1.0);
  const double base_step =
      cfg.step_size > 0.0 ? cfg.step_size
                          : 0.05 * std::sqrt(energy / design.n_modes);
  const int warm_iters = cfg.loss == LossKind::kIntensityLsq ? 0
                         : cfg.lsq_warmstart_iters < 0 ? cfg.max_iters
                                                       : cfg.lsq_warmstart_iters;

  ReconstructionResult best;
  bool have_best = false;
  int attempts_left = cfg.restarts * 3;  // allowance for diverged retries
  for (int r = 0; r < cfg.restarts && attempts_left > 0; ++r) {
    double step = base_step;
    for (; attempts_left > 0; --attempts_left, step *= 0.5) {
      Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(r)));
      CVec x(design.n_modes);
      for (int i = 0; i < design.n_modes; ++i)
        x[i] = Complex(rng.gaussian(), rng.gaussian());
      x *= std::sqrt(energy / x.squaredNorm());

      std::vector<double> trace;
      double loss_value = 0.0;
      int iters = 0;
      if (warm_iters > 0) {
        loss_value = run_stage(design, counts, cfg, LossKind::kIntensityLsq,
                               warm_iters, step, x, &trace);
        iters += warm_iters;
      }
      if (std::isfinite(loss_value) && cfg.loss == LossKind::kPoissonNll) {
        loss_value = run_stage(design, counts, cfg, LossKind::kPoissonNll,
                               cfg.max_iters, warm_iters > 0 ? 0.2 * step : step,
                               x, &trace);
        iters += cfg.max_iters;
      } else if (std::isfinite(loss_value) &&
                 cfg.loss == LossKind::kIntensityLsq && warm_iters == 0) {
        loss_value = run_stage(design, counts, cfg, LossKind::kIntensityLsq,
                               cfg.max_iters, step, x, &trace);
        iters += cfg.max_iters;
      }
      if (!std::isfinite(loss_value)) continue;  // diverged: halve and retry

      if (!have_best || loss_value < best.final_loss) {
        best.field.values = std::move(x);
        best.loss_trace = std::move(trace);
        best.final_loss = loss_value;
        best.iters = iters;
        have_best = true;
      }
      --attempts_left;
      break;
    }
    best.restarts_used = r + 1;
  }
  if (!have_best)
    throw std::runtime_error("reconstruct: all restarts diverged");
  return best;
}

ComplexField holographic_estimate(const MeasurementDesign& design,
                                  const RVec& counts) {
  if (design.kind != "holographic" || !design.reference)
    throw std::invalid_argument("holographic_estimate: not a holographic design");
  if (counts.size() != design.m_rows())
    throw std::invalid_argument("holographic_estimate: counts length mismatch");
  ComplexField out;
  out.values.resize(design.n_modes);
  for (int n = 0; n < design.n_modes; ++n) {
    const Eigen::Index row0 = 4 * static_cast<Eigen::Index>(n);
    const double rho = (*design.reference)[row0];
    if (rho <= 0.0)
      throw std::invalid_argument("holographic_estimate: rho must be > 0");
    const double re = (counts[row0 + 0] - counts[row0 + 2]) / (2.0 * rho);
    const double im = (counts[row0 + 3] - counts[row0 + 1]) / (2.0 * rho);
    out.values[n] = Complex(re, im);
  }
  return out;
}

}  // namespace qpr
