#include "qpr/multiscale.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "qpr/rng.hpp"

namespace qpr {
namespace {

int exact_log2(int n) {
  int k = 0;
  while ((1 << k) < n) ++k;
  if ((1 << k) != n) return -1;
  return k;
}

}  // namespace

MultiscalePlan build_plan(int n, int block_exp, std::uint64_t seed,
                          double cross_energy_fraction) {
  const int k = exact_log2(n);
  if (k < 1) throw std::invalid_argument("build_plan: n must be a power of two");
  if (block_exp < 1 || block_exp > k)
    throw std::invalid_argument("build_plan: need 1 <= q <= log2(n)");
  if (cross_energy_fraction <= 0.0 || cross_energy_fraction >= 1.0)
    throw std::invalid_argument("build_plan: cross fraction must be in (0, 1)");

  MultiscalePlan plan;
  plan.n_modes = n;
  plan.block_exp = block_exp;
  plan.block_size = 1 << block_exp;
  plan.n_blocks = 1 << (k - block_exp);
  plan.levels = k - block_exp;
  plan.cross_energy_fraction = cross_energy_fraction;
  plan.seed = seed;

  plan.intra_designs.reserve(plan.n_blocks);
  for (int b = 0; b < plan.n_blocks; ++b)
    plan.intra_designs.push_back(random_group_design(
        plan.block_size, 2, 3, Rng::derive(seed, static_cast<std::uint64_t>(b) + 1)));

  // Level ell pairs sibling superblocks of 2^(ell-1) rank-0 blocks each;
  // rank-0 block b on the left connects to b + 2^(ell-1) on the right, mode
  // i to modes {i, i+1 mod block_size}.
  for (int level = 1; level <= plan.levels; ++level) {
    MeasurementDesign design;
    design.n_modes = n;
    design.l_modes = 2;
    design.q_rows = 3;
    design.seed = Rng::derive(seed, 0x1000u + static_cast<std::uint64_t>(level));
    design.code = dft_code(3, 2);
    design.kind = "multiscale_cross";
    const int half = 1 << (level - 1);
    const int super = 1 << level;
    for (int t = 0; t < plan.n_blocks / super; ++t)
      for (int b = t * super; b < t * super + half; ++b) {
        const int left0 = plan.block_begin(b);
        const int right0 = plan.block_begin(b + half);
        for (int i = 0; i < plan.block_size; ++i) {
          design.groups.push_back(Group{{left0 + i, right0 + i}});
          design.groups.push_back(
              Group{{left0 + i, right0 + (i + 1) % plan.block_size}});
        }
      }
    plan.cross_designs.push_back(normalize_columns(std::move(design)));
  }
  return plan;
}

double relative_phase(const CVec& estimate_left, int offset_left, int len_left,
                      const CVec& estimate_right, int offset_right,
                      int len_right, const MeasurementDesign& cross_design,
                      const RVec& cross_counts, double amp_rescale,
                      bool* reliable) {
  if (cross_counts.size() != cross_design.m_rows())
    throw std::invalid_argument("relative_phase: counts length mismatch");
  const int q_rows = cross_design.code.q_rows();
  Complex phasor_sum = 0.0;
  int used = 0;
  const auto in_left = [&](int m) {
    return m >= offset_left && m < offset_left + len_left;
  };
  const auto in_right = [&](int m) {
    return m >= offset_right && m < offset_right + len_right;
  };
  for (std::size_t g = 0; g < cross_design.groups.size(); ++g) {
    const auto& members = cross_design.groups[g].members;
    if (members.size() != 2) continue;
    int u = members[0], v = members[1];
    int lu = 0, lv = 1;
    if (in_left(v) && in_right(u)) {
      std::swap(u, v);
      std::swap(lu, lv);
    } else if (!(in_left(u) && in_right(v))) {
      continue;
    }
    const Complex eu =
        estimate_left[u - offset_left] * cross_design.column_scale[u] * amp_rescale;
    const Complex ev =
        estimate_right[v - offset_right] * cross_design.column_scale[v] * amp_rescale;
    // I_q(phi) = |alpha_q|^2 + |beta_q|^2 + Re(g_q e^{j phi}); the DFT code
    // makes sum_q g_q^2 = 0, so the least-squares phase is the argument of
    // sum_q residual_q * conj(g_q).
    Complex h = 0.0;
    const Eigen::Index row0 = static_cast<Eigen::Index>(g) * q_rows;
    for (int q = 0; q < q_rows; ++q) {
      const Complex alpha = cross_design.code.entries(q, lu) * eu;
      const Complex beta = cross_design.code.entries(q, lv) * ev;
      const double residual =
          cross_counts[row0 + q] - std::norm(alpha) - std::norm(beta);
      const Complex g_q = 2.0 * std::conj(alpha) * beta;
      h += residual * std::conj(g_q);
    }
    if (std::abs(h) < 1e-12) continue;  // dark connection, no phase signal
    phasor_sum += h / std::abs(h);
    ++used;
  }
  const bool ok = used > 0 && std::abs(phasor_sum) > 1e-12;
  if (reliable) *reliable = ok;
  return ok ? std::arg(phasor_sum) : 0.0;
}

StitchResult stitch(const MultiscalePlan& plan,
                    const std::vector<ComplexField>& intra_estimates,
                    const std::vector<RVec>& cross_counts) {
  if (static_cast<int>(intra_estimates.size()) != plan.n_blocks)
    throw std::invalid_argument("stitch: need one estimate per block");
  if (static_cast<int>(cross_counts.size()) != plan.levels)
    throw std::invalid_argument("stitch: need counts for every level");

  StitchResult out;
  CVec est(plan.n_modes);
  for (int b = 0; b < plan.n_blocks; ++b) {
    if (intra_estimates[b].n_modes() != plan.block_size)
      throw std::invalid_argument("stitch: block estimate size mismatch");
    est.segment(plan.block_begin(b), plan.block_size) =
        intra_estimates[b].values;
  }

  const double amp_rescale = std::sqrt(plan.level_energy_fraction() /
                                       plan.intra_energy_fraction());
  for (int level = 1; level <= plan.levels; ++level) {
    const auto& design = plan.cross_designs[level - 1];
    const auto& counts = cross_counts[level - 1];
    const int half = 1 << (level - 1);
    const int super = 1 << level;
    const int super_modes = half * plan.block_size;
    for (int t = 0; t < plan.n_blocks / super; ++t) {
      const int left_block = t * super;
      const int right_block = left_block + half;
      const int left0 = plan.block_begin(left_block);
      const int right0 = plan.block_begin(right_block);
      bool reliable = false;
      // Per-connection phasors within both sibling ranges; each connection
      // joins corresponding rank-0 blocks, all sharing the sibling phase.
      const double phase = relative_phase(
          est.segment(left0, super_modes), left0, super_modes,
          est.segment(right0, super_modes), right0, super_modes, design,
          counts, amp_rescale, &reliable);
      est.segment(right0, super_modes) *= std::polar(1.0, phase);
      PhaseLogEntry entry;
      entry.level = level;
      entry.left_block = left_block;
      entry.right_block = right_block;
      entry.phase = phase;
      entry.n_connections = 2 * super_modes;  // 2 per left mode
      entry.reliable = reliable;
      out.log.push_back(entry);
      if (!reliable) out.all_reliable = false;
    }
  }
  out.field.values = est / std::sqrt(plan.intra_energy_fraction());
  return out;
}

std::string plan_to_json(const MultiscalePlan& plan) {
  nlohmann::ordered_json j;
  j["n"] = plan.n_modes;
  j["q"] = plan.block_exp;
  j["block_size"] = plan.block_size;
  j["n_blocks"] = plan.n_blocks;
  j["levels"] = plan.levels;
  j["cross_energy_fraction"] = plan.cross_energy_fraction;
  j["seed"] = plan.seed;
  auto intra = nlohmann::ordered_json::array();
  for (const auto& d : plan.intra_designs)
    intra.push_back(nlohmann::ordered_json::parse(design_to_json(d)));
  j["intra_designs"] = std::move(intra);
  auto cross = nlohmann::ordered_json::array();
  for (const auto& d : plan.cross_designs)
    cross.push_back(nlohmann::ordered_json::parse(design_to_json(d)));
  j["cross_designs"] = std::move(cross);
  return j.dump();
}

std::string phase_log_csv(const std::vector<PhaseLogEntry>& log) {
  std::string out = "level,block_pair,phase,n_connections\n";
  for (const auto& e : log) {
    out += std::to_string(e.level) + "," + std::to_string(e.left_block) + "-" +
           std::to_string(e.right_block) + "," + std::to_string(e.phase) +
           "," + std::to_string(e.n_connections) + "\n";
  }
  return out;
}

}  // namespace qpr
