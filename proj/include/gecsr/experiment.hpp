#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "gecsr/engine.hpp"
#include "gecsr/signal_model.hpp"
#include "gecsr/state_evolution.hpp"

namespace gecsr {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MatrixConfig {
  enum class Kind { PartialDft, SvdSpectrum };
  Kind kind = Kind::PartialDft;
  std::size_t n = 1024;
  std::size_t m = 717;
  // SvdSpectrum only: (singular value, multiplicity) groups; multiplicities
  // sum to min(m, n).
  std::vector<std::pair<double, std::size_t>> groups;
};

struct ExperimentConfig {
  MatrixConfig matrix;
  double rho = 0.4;
  double sigma2 = 1e-5;
  std::vector<int> bits = {3};
  double step = 0.0;  // 0: per-B default 2^(1-B)
  int trials = 200;
  int t_max = 50;
  std::uint64_t seed = 1;
  int workers = 1;
  bool fixed_matrix = false;  // one matrix draw shared by every trial
  double damping = 0.0;
  double convergence_tol = 1e-8;
  std::string out;            // CSV path; empty = stdout only summaries
  std::string per_trial_out;  // optional per-trial dump
};

// Throws ConfigError on structural problems (CLI maps that to exit 2).
void validate(const ExperimentConfig& cfg);
ExperimentConfig config_from_json_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
// Replace desk-scale dimensions/trials with the full-size protocol.
void apply_full_scale(ExperimentConfig& cfg);

Quantizer quantizer_for(const ExperimentConfig& cfg, int bits);
// Deterministic eigenvalue profile implied by the matrix config (partial
// DFT rows are orthonormal; spectrum groups square the singular values).
Spectrum config_spectrum(const MatrixConfig& mc);
SensingMatrix sample_matrix(const MatrixConfig& mc, Rng& rng);

struct RecoverRow {
  int bits = 0;
  int iter = 0;
  double mse_sim_db = 0.0;
  double v1x = 0.0, v1z = 0.0;
  long clamp_events = 0;  // summed cumulative count across completed trials
};

struct RecoverTable {
  std::vector<RecoverRow> rows;            // grouped by bits, iter ascending
  std::map<int, int> n_diverged;           // per bits value
  int trials = 0;
  std::vector<std::string> per_trial_csv;  // filled when dump requested
};

struct SeRow {
  int bits = 0;
  int iter = 0;
  double mse_se_db = 0.0;
  double mse_se_ro_db = 0.0;  // row-orthogonal column; NaN off unit spectra
  double eta_x = 0.0, v_x = 0.0, v_z = 0.0;
};

struct SeTable {
  std::vector<SeRow> rows;
  bool diverged = false;  // partial rows kept when the recursion broke
};

struct ExperimentRow {
  int bits = 0;
  int iter = 0;
  double mse_sim_db = 0.0;
  double mse_se_db = 0.0;
  int n_diverged = 0;
  double v1x = 0.0, v1z = 0.0;
  long clamp_events = 0;
};

RecoverTable run_recover(const ExperimentConfig& cfg);
SeTable run_se(const ExperimentConfig& cfg);
std::vector<ExperimentRow> join_experiment(const RecoverTable& sim,
                                           const SeTable& se);

std::string recover_csv(const RecoverTable& t);
std::string se_csv(const SeTable& t);
std::string experiment_csv(const std::vector<ExperimentRow>& rows);
void write_text_file(const std::string& path, const std::string& text);

// True when any bits value lost more than 10% of its trials.
bool divergence_excessive(const RecoverTable& t);

// Generates, saves, and summarizes a matrix; returns the printed summary.
std::string cmd_matrix(const MatrixConfig& mc, const std::string& out_path,
                       std::uint64_t seed);

}  // namespace gecsr
