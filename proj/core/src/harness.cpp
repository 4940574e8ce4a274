#include "qpr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "qpr/bounds.hpp"
#include "qpr/forward.hpp"
#include "qpr/multiscale.hpp"
#include "qpr/rng.hpp"

namespace qpr {
namespace {

constexpr int kCrlbMaxModes = 4096;

LossKind loss_from_string(const std::string& s) {
  if (s == "poisson_nll") return LossKind::kPoissonNll;
  if (s == "intensity_lsq") return LossKind::kIntensityLsq;
  throw std::invalid_argument("config: unknown loss '" + s + "'");
}

std::string loss_to_string(LossKind loss) {
  return loss == LossKind::kPoissonNll ? "poisson_nll" : "intensity_lsq";
}

QPolicy policy_from_string(const std::string& s) {
  if (s == "three_for_pairs") return QPolicy::kThreeForPairs;
  if (s == "q_equals_l") return QPolicy::kQEqualsL;
  if (s == "explicit") return QPolicy::kExplicit;
  throw std::invalid_argument("config: unknown q_policy '" + s + "'");
}

std::string policy_to_string(QPolicy p) {
  switch (p) {
    case QPolicy::kThreeForPairs: return "three_for_pairs";
    case QPolicy::kQEqualsL: return "q_equals_l";
    default: return "explicit";
  }
}

// Run tasks [0, count) on a bounded pool.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  int n_threads = threads > 0
                      ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min(n_threads, count));
  if (n_threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

void probe_writable(const std::string& path) {
  if (path.empty()) return;
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot write output file: " + path);
}

}  // namespace

int ExperimentConfig::q_for(int l_modes) const {
  switch (q_policy) {
    case QPolicy::kThreeForPairs:
      return l_modes == 2 ? 3 : l_modes;
    case QPolicy::kQEqualsL:
      return l_modes;
    default:
      if (q_explicit < l_modes)
        throw std::invalid_argument("config: explicit Q below L");
      return q_explicit;
  }
}

ExperimentConfig config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ExperimentConfig cfg;
  cfg.n_list = j.value("n_list", cfg.n_list);
  cfg.l_list = j.value("L_list", cfg.l_list);
  cfg.q_policy = policy_from_string(j.value("q_policy", std::string("three_for_pairs")));
  cfg.q_explicit = j.value("q_explicit", 0);
  cfg.photons_per_mode = j.value("photons_per_mode", 1e4);
  cfg.trials = j.value("trials", 1);
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.threads = j.value("threads", 0);
  cfg.holography_rho_factor = j.value("holography_rho_factor", 0.0);
  cfg.output_path = j.value("output_path", std::string());
  cfg.q_list = j.value("q_list", cfg.q_list);
  cfg.cross_energy_fraction = j.value("cross_energy_fraction", 0.05);
  cfg.cross_exposure_boost = j.value("cross_exposure_boost", 0.0);
  if (cfg.cross_exposure_boost < 0.0)
    throw std::invalid_argument("config: cross_exposure_boost must be >= 0");
  if (j.contains("optimizer")) {
    const auto& o = j.at("optimizer");
    cfg.optimizer.step_size = o.value("step_size", 0.0);
    cfg.optimizer.beta1 = o.value("beta1", 0.9);
    cfg.optimizer.beta2 = o.value("beta2", 0.999);
    cfg.optimizer.epsilon = o.value("epsilon", 1e-8);
    cfg.optimizer.max_iters = o.value("max_iters", 2000);
    cfg.optimizer.tol = o.value("tol", 1e-10);
    cfg.optimizer.loss = loss_from_string(o.value("loss", std::string("poisson_nll")));
    cfg.optimizer.restarts = o.value("restarts", 3);
    cfg.optimizer.lsq_warmstart_iters = o.value("lsq_warmstart_iters", -1);
  }
  if (cfg.trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  for (int l : cfg.l_list)
    if (l < 2) throw std::invalid_argument("config: L entries must be >= 2");
  for (int n : cfg.n_list)
    if (n < 2) throw std::invalid_argument("config: n entries must be >= 2");
  return cfg;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["n_list"] = cfg.n_list;
  j["L_list"] = cfg.l_list;
  j["q_policy"] = policy_to_string(cfg.q_policy);
  j["q_explicit"] = cfg.q_explicit;
  j["photons_per_mode"] = cfg.photons_per_mode;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["holography_rho_factor"] = cfg.holography_rho_factor;
  j["output_path"] = cfg.output_path;
  j["q_list"] = cfg.q_list;
  j["cross_energy_fraction"] = cfg.cross_energy_fraction;
  j["cross_exposure_boost"] = cfg.cross_exposure_boost;
  j["optimizer"] = {{"step_size", cfg.optimizer.step_size},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"epsilon", cfg.optimizer.epsilon},
                    {"max_iters", cfg.optimizer.max_iters},
                    {"tol", cfg.optimizer.tol},
                    {"loss", loss_to_string(cfg.optimizer.loss)},
                    {"restarts", cfg.optimizer.restarts},
                    {"lsq_warmstart_iters", cfg.optimizer.lsq_warmstart_iters}};
  return j.dump(2);
}

SweepRow run_single(int n, int l_modes, int q_rows, double photons_per_mode,
                    const OptimizerConfig& optimizer, std::uint64_t task_seed,
                    bool with_crlb) {
  const auto design =
      random_group_design(n, l_modes, q_rows, Rng::derive(task_seed, 1));
  const auto x = random_field(n, photons_per_mode, Rng::derive(task_seed, 2));
  const auto record =
      sample_counts(intensities(design, x), Rng::derive(task_seed, 3));

  const auto t0 = std::chrono::steady_clock::now();
  const auto result = reconstruct(design, record.counts_as_real(), optimizer,
                                  Rng::derive(task_seed, 4));
  const auto t1 = std::chrono::steady_clock::now();

  SweepRow row;
  row.n = n;
  row.l_modes = l_modes;
  row.q_rows = q_rows;
  row.seed = task_seed;
  row.mse_per_mode = mse(result.field, x, GaugeMode::kAligned).mse_per_mode;
  row.crlb_per_mode =
      (with_crlb && n <= kCrlbMaxModes)
          ? fisher(design, x).crlb_trace_gauge_reduced / n
          : std::nan("");
  row.time_per_mode_us =
      std::chrono::duration<double, std::micro>(t1 - t0).count() / n;
  row.iters = result.iters;
  row.final_loss = result.final_loss;
  return row;
}

SweepRow run_single_holography(int n, double photons_per_mode,
                               double rho_factor, std::uint64_t task_seed,
                               bool with_crlb) {
  const auto x = random_field(n, photons_per_mode, Rng::derive(task_seed, 2));
  const double rho = rho_factor * x.values.cwiseAbs().maxCoeff();
  const auto design = holographic_design(n, rho);
  const auto record =
      sample_counts(intensities(design, x), Rng::derive(task_seed, 3));

  const auto t0 = std::chrono::steady_clock::now();
  const auto estimate = holographic_estimate(design, record.counts_as_real());
  const auto t1 = std::chrono::steady_clock::now();

  SweepRow row;
  row.n = n;
  row.l_modes = 1;
  row.q_rows = 4;
  row.seed = task_seed;
  // The reference pins the gauge, so score without alignment.
  row.mse_per_mode = mse(estimate, x, GaugeMode::kFixed).mse_per_mode;
  row.crlb_per_mode = (with_crlb && n <= kCrlbMaxModes)
                          ? fisher(design, x).crlb_trace_full / n
                          : std::nan("");
  row.time_per_mode_us =
      std::chrono::duration<double, std::micro>(t1 - t0).count() / n;
  row.iters = 0;
  row.final_loss = 0.0;
  return row;
}

MultiscaleRow run_single_multiscale(int n, int block_exp,
                                    double photons_per_mode,
                                    double cross_energy_fraction,
                                    const OptimizerConfig& optimizer,
                                    std::uint64_t task_seed,
                                    double cross_exposure_boost) {
  MultiscaleRow row;
  row.n = n;
  row.block_exp = block_exp;
  row.seed = task_seed;

  const auto x = random_field(n, photons_per_mode, Rng::derive(task_seed, 2));

  int k = 0;
  while ((1 << k) < n) ++k;
  if (block_exp == k) {
    // Single block: multiscale degenerates to the global reconstruction.
    const auto design = random_group_design(n, 2, 3, Rng::derive(task_seed, 1));
    const auto record =
        sample_counts(intensities(design, x), Rng::derive(task_seed, 3));
    const auto result = reconstruct(design, record.counts_as_real(), optimizer,
                                    Rng::derive(task_seed, 4));
    const double m = mse(result.field, x, GaugeMode::kAligned).mse_per_mode;
    row.mse_multiscale_per_mode = m;
    row.mse_global_per_mode = m;
    row.penalty_db = 0.0;
    return row;
  }

  const auto plan =
      build_plan(n, block_exp, Rng::derive(task_seed, 1), cross_energy_fraction);
  const double intra_amp = std::sqrt(plan.intra_energy_fraction());
  const double cross_amp = std::sqrt(plan.level_energy_fraction());

  std::vector<ComplexField> block_estimates(plan.n_blocks);
  for (int b = 0; b < plan.n_blocks; ++b) {
    ComplexField xb;
    xb.values = intra_amp * x.values.segment(plan.block_begin(b), plan.block_size);
    const auto record = sample_counts(intensities(plan.intra_designs[b], xb),
                                      Rng::derive(task_seed, 100 + b));
    block_estimates[b] =
        reconstruct(plan.intra_designs[b], record.counts_as_real(), optimizer,
                    Rng::derive(task_seed, 10000 + b))
            .field;
  }

  // Cross-block phase links: a separate short detection pass on the
  // cross_energy_fraction power tap. Its integration time is a multiple of
  // one budget unit; counts are normalized back so the stitch sees the
  // nominal tap scale with variance reduced by the multiplier.
  const double boost = cross_exposure_boost > 0.0
                           ? cross_exposure_boost
                           : 100.0 / plan.level_energy_fraction();
  std::vector<RVec> cross_counts;
  cross_counts.reserve(plan.levels);
  ComplexField x_cross;
  x_cross.values = cross_amp * x.values;
  for (int level = 1; level <= plan.levels; ++level) {
    const RVec rates =
        boost * intensities(plan.cross_designs[level - 1], x_cross);
    cross_counts.push_back(
        sample_counts(rates, Rng::derive(task_seed, 20000 + level))
            .counts_as_real() /
        boost);
  }

  const auto stitched = stitch(plan, block_estimates, cross_counts);
  row.mse_multiscale_per_mode =
      mse(stitched.field, x, GaugeMode::kAligned).mse_per_mode;

  const auto global_design =
      random_group_design(n, 2, 3, Rng::derive(task_seed, 3));
  const auto global_record = sample_counts(intensities(global_design, x),
                                           Rng::derive(task_seed, 4));
  const auto global_result =
      reconstruct(global_design, global_record.counts_as_real(), optimizer,
                  Rng::derive(task_seed, 5));
  row.mse_global_per_mode =
      mse(global_result.field, x, GaugeMode::kAligned).mse_per_mode;
  row.penalty_db =
      10.0 * std::log10(row.mse_multiscale_per_mode / row.mse_global_per_mode);
  return row;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  if (cfg.n_list.empty() || cfg.l_list.empty())
    throw std::invalid_argument("run_sweep: n_list and L_list required");
  probe_writable(cfg.output_path);

  struct Task {
    int n, l_modes, q_rows, trial;
    bool holography;
  };
  std::vector<Task> tasks;
  for (int n : cfg.n_list)
    for (int l : cfg.l_list)
      for (int t = 0; t < cfg.trials; ++t)
        tasks.push_back({n, l, cfg.q_for(l), t, false});
  if (cfg.holography_rho_factor > 0.0)
    for (int n : cfg.n_list)
      for (int t = 0; t < cfg.trials; ++t)
        tasks.push_back({n, 1, 4, t, true});

  std::vector<SweepRow> rows(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), cfg.threads, [&](int i) {
    const auto& task = tasks[i];
    const std::uint64_t task_seed =
        Rng::derive(cfg.seed, static_cast<std::uint64_t>(i));
    rows[i] = task.holography
                  ? run_single_holography(task.n, cfg.photons_per_mode,
                                          cfg.holography_rho_factor, task_seed,
                                          true)
                  : run_single(task.n, task.l_modes, task.q_rows,
                               cfg.photons_per_mode, cfg.optimizer, task_seed,
                               true);
    rows[i].trial = task.trial;
  });
  std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tie(a.n, a.l_modes, a.trial) < std::tie(b.n, b.l_modes, b.trial);
  });
  if (!cfg.output_path.empty()) write_text_file(cfg.output_path, sweep_csv(rows));
  return rows;
}

std::vector<MultiscaleRow> run_multiscale(const ExperimentConfig& cfg) {
  if (cfg.n_list.empty() || cfg.q_list.empty())
    throw std::invalid_argument("run_multiscale: n_list and q_list required");
  probe_writable(cfg.output_path);

  struct Task {
    int n, q, trial;
  };
  std::vector<Task> tasks;
  for (int n : cfg.n_list)
    for (int q : cfg.q_list)
      for (int t = 0; t < cfg.trials; ++t) tasks.push_back({n, q, t});

  std::vector<MultiscaleRow> rows(tasks.size());
  parallel_for(static_cast<int>(tasks.size()), cfg.threads, [&](int i) {
    const auto& task = tasks[i];
    const std::uint64_t task_seed =
        Rng::derive(cfg.seed, 0x5000000u + static_cast<std::uint64_t>(i));
    rows[i] = run_single_multiscale(task.n, task.q, cfg.photons_per_mode,
                                    cfg.cross_energy_fraction, cfg.optimizer,
                                    task_seed, cfg.cross_exposure_boost);
    rows[i].trial = task.trial;
  });
  std::sort(rows.begin(), rows.end(),
            [](const MultiscaleRow& a, const MultiscaleRow& b) {
              return std::tie(a.n, a.block_exp, a.trial) <
                     std::tie(b.n, b.block_exp, b.trial);
            });
  if (!cfg.output_path.empty())
    write_text_file(cfg.output_path, multiscale_csv(rows));
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out =
      "n,L,Q,trial,seed,mse_per_mode,crlb_per_mode,time_per_mode_us,iters,"
      "final_loss\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.l_modes) + "," +
           std::to_string(r.q_rows) + "," + std::to_string(r.trial) + "," +
           std::to_string(r.seed) + "," + format_double(r.mse_per_mode) + "," +
           format_double(r.crlb_per_mode) + "," +
           format_double(r.time_per_mode_us) + "," + std::to_string(r.iters) +
           "," + format_double(r.final_loss) + "\n";
  }
  return out;
}

std::string multiscale_csv(const std::vector<MultiscaleRow>& rows) {
  std::string out =
      "n,q,trial,seed,mse_multiscale_per_mode,mse_global_per_mode,penalty_db\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n) + "," + std::to_string(r.block_exp) + "," +
           std::to_string(r.trial) + "," + std::to_string(r.seed) + "," +
           format_double(r.mse_multiscale_per_mode) + "," +
           format_double(r.mse_global_per_mode) + "," +
           format_double(r.penalty_db) + "\n";
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write output file: " + path);
  f << text;
}

}  // namespace qpr
