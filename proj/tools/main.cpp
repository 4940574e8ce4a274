// Command-line driver: build measurement designs, simulate photon
// detection, reconstruct fields, evaluate Fisher/CRLB reports, and run
// sweep/multiscale experiments from a JSON config.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qpr/bounds.hpp"
#include "qpr/designs.hpp"
#include "qpr/estimate.hpp"
#include "qpr/forward.hpp"
#include "qpr/harness.hpp"
#include "qpr/multiscale.hpp"
#include "qpr/rng.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text << "\n";
  else
    qpr::write_text_file(out_path, text);
}

struct CommonOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<int> threads;
  std::string out;
};

qpr::ExperimentConfig load_config(const std::string& config_path,
                                  const CommonOverrides& ov) {
  auto cfg = qpr::config_from_json(read_file(config_path));
  if (ov.seed) cfg.seed = *ov.seed;
  if (ov.trials) cfg.trials = *ov.trials;
  if (ov.threads) cfg.threads = *ov.threads;
  if (!ov.out.empty()) cfg.output_path = ov.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coded interferometric phase retrieval toolkit"};
  app.require_subcommand(1);

  // design
  auto* design_cmd = app.add_subcommand("design", "Build a measurement design");
  int d_n = 0, d_l = 2, d_q = 3;
  std::uint64_t d_seed = 1;
  bool d_holographic = false;
  double d_rho = 0.0;
  std::string d_out;
  design_cmd->add_option("--n", d_n, "Number of modes")->required();
  design_cmd->add_option("--L", d_l, "Group size");
  design_cmd->add_option("--Q", d_q, "Detectors per group");
  design_cmd->add_option("--seed", d_seed, "RNG seed");
  design_cmd->add_flag("--holographic", d_holographic,
                       "Phase-quadrature holography instead of random groups");
  design_cmd->add_option("--rho", d_rho, "Holographic reference amplitude");
  design_cmd->add_option("--out", d_out, "Output JSON path (default stdout)");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Sample Poisson counts");
  std::string s_design, s_field, s_out;
  std::uint64_t s_seed = 1, s_field_seed = 1;
  double s_photons = 1e4;
  bool s_binary = false;
  sim_cmd->add_option("--design", s_design, "Design JSON path")->required();
  sim_cmd->add_option("--field", s_field,
                      "Field JSON path (omit to draw a random field)");
  sim_cmd->add_option("--field-seed", s_field_seed, "Seed for a random field");
  sim_cmd->add_option("--photons", s_photons, "Photons per mode for a random field");
  sim_cmd->add_option("--seed", s_seed, "Detection seed");
  sim_cmd->add_flag("--binary", s_binary, "Write compact binary counts");
  sim_cmd->add_option("--out", s_out, "Output path (default stdout)");

  // reconstruct
  auto* rec_cmd = app.add_subcommand("reconstruct", "Estimate the field from counts");
  std::string r_design, r_counts, r_out, r_loss = "poisson_nll", r_trace;
  std::uint64_t r_seed = 1;
  int r_iters = 2000, r_restarts = 3;
  rec_cmd->add_option("--design", r_design, "Design JSON path")->required();
  rec_cmd->add_option("--counts", r_counts, "DetectionRecord JSON path")->required();
  rec_cmd->add_option("--seed", r_seed, "Optimizer seed");
  rec_cmd->add_option("--max-iters", r_iters, "Adam iterations per stage");
  rec_cmd->add_option("--restarts", r_restarts, "Random restarts");
  rec_cmd->add_option("--loss", r_loss, "poisson_nll | intensity_lsq");
  rec_cmd->add_option("--trace", r_trace, "Optional loss-trace CSV path");
  rec_cmd->add_option("--out", r_out, "Output field JSON path (default stdout)");

  // bound
  auto* bound_cmd = app.add_subcommand("bound", "Fisher/CRLB report");
  std::string b_design, b_field, b_out;
  bound_cmd->add_option("--design", b_design, "Design JSON path")->required();
  bound_cmd->add_option("--field", b_field, "Field JSON path")->required();
  bound_cmd->add_option("--out", b_out, "Output JSON path (default stdout)");

  // sweep / multiscale
  CommonOverrides sweep_ov, ms_ov;
  std::string sweep_config, ms_config;
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a (n, L) experiment sweep");
  sweep_cmd->add_option("--config", sweep_config, "Config JSON path")->required();
  sweep_cmd->add_option("--out", sweep_ov.out, "CSV output path override");
  sweep_cmd->add_option("--seed", sweep_ov.seed, "Seed override");
  sweep_cmd->add_option("--trials", sweep_ov.trials, "Trials override");
  sweep_cmd->add_option("--threads", sweep_ov.threads, "Worker threads override");
  auto* ms_cmd = app.add_subcommand("multiscale", "Run block-stitching experiments");
  ms_cmd->add_option("--config", ms_config, "Config JSON path")->required();
  ms_cmd->add_option("--out", ms_ov.out, "CSV output path override");
  ms_cmd->add_option("--seed", ms_ov.seed, "Seed override");
  ms_cmd->add_option("--trials", ms_ov.trials, "Trials override");
  ms_cmd->add_option("--threads", ms_ov.threads, "Worker threads override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (design_cmd->parsed()) {
      const auto design = d_holographic
                              ? qpr::holographic_design(d_n, d_rho)
                              : qpr::random_group_design(d_n, d_l, d_q, d_seed);
      emit(qpr::design_to_json(design), d_out);
    } else if (sim_cmd->parsed()) {
      const auto design = qpr::design_from_json(read_file(s_design));
      const auto field =
          s_field.empty()
              ? qpr::random_field(design.n_modes, s_photons, s_field_seed)
              : qpr::field_from_json(read_file(s_field));
      const auto record =
          qpr::sample_counts(qpr::intensities(design, field), s_seed);
      if (s_binary) {
        const auto bytes = qpr::counts_to_binary(record);
        if (s_out.empty()) throw std::runtime_error("--binary requires --out");
        std::ofstream f(s_out, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write output file: " + s_out);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
      } else {
        emit(qpr::detection_to_json(record), s_out);
      }
    } else if (rec_cmd->parsed()) {
      const auto design = qpr::design_from_json(read_file(r_design));
      const auto record = qpr::detection_from_json(read_file(r_counts));
      qpr::OptimizerConfig cfg;
      cfg.max_iters = r_iters;
      cfg.restarts = r_restarts;
      cfg.loss = r_loss == "intensity_lsq" ? qpr::LossKind::kIntensityLsq
                                           : qpr::LossKind::kPoissonNll;
      const auto result =
          qpr::reconstruct(design, record.counts_as_real(), cfg, r_seed);
      if (!r_trace.empty()) {
        std::string csv = "iter,loss\n";
        for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
          csv += std::to_string((i + 1) * 10) + "," +
                 std::to_string(result.loss_trace[i]) + "\n";
        qpr::write_text_file(r_trace, csv);
      }
      emit(qpr::field_to_json(result.field), r_out);
    } else if (bound_cmd->parsed()) {
      const auto design = qpr::design_from_json(read_file(b_design));
      const auto field = qpr::field_from_json(read_file(b_field));
      emit(qpr::fisher_report_json(qpr::fisher(design, field)), b_out);
    } else if (sweep_cmd->parsed()) {
      auto cfg = load_config(sweep_config, sweep_ov);
      const auto rows = qpr::run_sweep(cfg);
      if (cfg.output_path.empty()) std::cout << qpr::sweep_csv(rows);
    } else if (ms_cmd->parsed()) {
      auto cfg = load_config(ms_config, ms_ov);
      const auto rows = qpr::run_multiscale(cfg);
      if (cfg.output_path.empty()) std::cout << qpr::multiscale_csv(rows);
    }
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = "runtime";
    err["message"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
