// Command-line front end: matrix generation, Monte-Carlo recovery, state
// evolution, and the combined experiment table.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "gecsr/experiment.hpp"

namespace {

using gecsr::ConfigError;
using gecsr::ExperimentConfig;
using gecsr::MatrixConfig;

constexpr int kExitConfig = 2;
constexpr int kExitDiverged = 3;

// Flag values shared by recover / se / experiment. Only flags the user
// actually passed override the config file, so CLI11's count() is consulted
// per option after parsing.
struct RunFlags {
  std::string config_path;
  std::vector<int> bits;
  int trials = 0;
  std::uint64_t seed = 0;
  int t_max = 0;
  std::string out;
  int workers = 0;
  bool full_scale = false;
  bool fixed_matrix = false;
  double rho = 0.0;
  double sigma2 = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
  std::string per_trial_out;
};

void add_run_flags(CLI::App* sub, RunFlags& f) {
  sub->add_option("--config", f.config_path, "JSON config file");
  sub->add_option("--bits", f.bits, "quantizer resolutions, e.g. --bits 1,2,3")
      ->delimiter(',');
  sub->add_option("--trials", f.trials, "Monte-Carlo trials per bits value");
  sub->add_option("--seed", f.seed, "base seed; trial i uses seed+i");
  sub->add_option("--tmax", f.t_max, "iteration budget");
  sub->add_option("--out", f.out, "output CSV path (default: stdout)");
  sub->add_option("--workers", f.workers, "concurrent trial workers");
  sub->add_flag("--full-scale", f.full_scale,
                "use the full-size protocol (N=8192, M=5734, 2000 trials)");
  sub->add_flag("--fixed-matrix", f.fixed_matrix,
                "share one matrix draw across all trials");
  sub->add_option("--rho", f.rho, "sparsity rate of the signal prior");
  sub->add_option("--sigma2", f.sigma2, "pre-quantization noise variance");
  sub->add_option("--n", f.n, "signal dimension");
  sub->add_option("--m", f.m, "measurement dimension");
  sub->add_option("--per-trial-out", f.per_trial_out,
                  "also dump per-trial trajectories to this CSV");
}

// Config file first, then the full-scale preset, then explicit flags win.
ExperimentConfig build_config(const CLI::App* sub, const RunFlags& f) {
  ExperimentConfig cfg;
  if (sub->count("--config")) cfg = gecsr::load_config_file(f.config_path);
  if (f.full_scale) gecsr::apply_full_scale(cfg);
  if (sub->count("--bits")) cfg.bits = f.bits;
  if (sub->count("--trials")) cfg.trials = f.trials;
  if (sub->count("--seed")) cfg.seed = f.seed;
  if (sub->count("--tmax")) cfg.t_max = f.t_max;
  if (sub->count("--out")) cfg.out = f.out;
  if (sub->count("--workers")) cfg.workers = f.workers;
  if (sub->count("--fixed-matrix")) cfg.fixed_matrix = true;
  if (sub->count("--rho")) cfg.rho = f.rho;
  if (sub->count("--sigma2")) cfg.sigma2 = f.sigma2;
  if (sub->count("--n")) cfg.matrix.n = f.n;
  if (sub->count("--m")) cfg.matrix.m = f.m;
  if (sub->count("--per-trial-out")) cfg.per_trial_out = f.per_trial_out;
  gecsr::validate(cfg);
  return cfg;
}

void emit(const ExperimentConfig& cfg, const std::string& csv) {
  if (cfg.out.empty()) {
    std::cout << csv;
  } else {
    gecsr::write_text_file(cfg.out, csv);
    std::cout << "wrote " << cfg.out << "\n";
  }
}

void emit_per_trial(const ExperimentConfig& cfg, const gecsr::RecoverTable& t) {
  if (cfg.per_trial_out.empty()) return;
  std::string text = "bits,trial,iter,mse_db,diverged\n";
  for (const std::string& line : t.per_trial_csv) text += line + "\n";
  gecsr::write_text_file(cfg.per_trial_out, text);
  std::cerr << "per-trial dump: " << cfg.per_trial_out << "\n";
}

int report_divergence(const gecsr::RecoverTable& t) {
  int worst = 0;
  for (const auto& [bits, count] : t.n_diverged) {
    if (count > 0)
      std::cerr << "bits=" << bits << ": " << count << "/" << t.trials
                << " trials diverged\n";
    worst = std::max(worst, count);
  }
  if (gecsr::divergence_excessive(t)) {
    std::cerr << "divergence exceeded 10% of trials\n";
    return kExitDiverged;
  }
  return 0;
}

int do_recover(const ExperimentConfig& cfg) {
  gecsr::RecoverTable table = gecsr::run_recover(cfg);
  emit(cfg, gecsr::recover_csv(table));
  emit_per_trial(cfg, table);
  return report_divergence(table);
}

int do_se(const ExperimentConfig& cfg) {
  gecsr::SeTable table = gecsr::run_se(cfg);
  emit(cfg, gecsr::se_csv(table));
  if (table.diverged) {
    std::cerr << "state evolution diverged; table is partial\n";
    return kExitDiverged;
  }
  return 0;
}

int do_experiment(const ExperimentConfig& cfg) {
  gecsr::RecoverTable sim = gecsr::run_recover(cfg);
  gecsr::SeTable se = gecsr::run_se(cfg);
  emit(cfg, gecsr::experiment_csv(gecsr::join_experiment(sim, se)));
  emit_per_trial(cfg, sim);
  int rc = report_divergence(sim);
  if (se.diverged) {
    std::cerr << "state evolution diverged; mse_se_db column is partial\n";
    rc = std::max(rc, kExitDiverged);
  }
  return rc;
}

// "1.0x3,3.0x1" -> {(1.0,3),(3.0,1)}
std::vector<std::pair<double, std::size_t>> parse_groups(
    const std::string& text) {
  std::vector<std::pair<double, std::size_t>> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    double sv = 0.0;
    unsigned long long count = 0;
    char trailing = 0;
    if (std::sscanf(item.c_str(), "%lfx%llu%c", &sv, &count, &trailing) != 2)
      throw ConfigError("bad group '" + item + "'; expected <sv>x<count>");
    out.emplace_back(sv, static_cast<std::size_t>(count));
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty group list");
  return out;
}

int do_matrix(const std::string& kind, std::size_t n, std::size_t m,
              const std::string& groups, const std::string& out,
              std::uint64_t seed) {
  MatrixConfig mc;
  if (kind == "partial-dft") {
    mc.kind = MatrixConfig::Kind::PartialDft;
  } else if (kind == "svd-spectrum") {
    mc.kind = MatrixConfig::Kind::SvdSpectrum;
  } else {
    throw ConfigError("unknown matrix kind '" + kind + "'");
  }
  mc.n = n;
  mc.m = m;
  if (!groups.empty()) mc.groups = parse_groups(groups);
  // Piggyback on the experiment validator for the dimension/group rules.
  ExperimentConfig probe;
  probe.matrix = mc;
  gecsr::validate(probe);
  std::cout << gecsr::cmd_matrix(mc, out, seed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Sparse signal recovery from quantized measurements: "
      "message-passing reconstruction and its state-evolution prediction"};
  app.require_subcommand(1);

  RunFlags rec_f, se_f, exp_f;
  CLI::App* rec = app.add_subcommand(
      "recover", "Monte-Carlo recovery trials; per-iteration simulated MSE");
  add_run_flags(rec, rec_f);
  CLI::App* se = app.add_subcommand(
      "se", "state-evolution prediction; per-iteration analytical MSE");
  add_run_flags(se, se_f);
  CLI::App* exp = app.add_subcommand(
      "experiment", "recovery trials and state evolution side by side");
  add_run_flags(exp, exp_f);

  std::string mat_kind = "partial-dft", mat_groups, mat_out;
  std::size_t mat_n = 1024, mat_m = 717;
  std::uint64_t mat_seed = 1;
  CLI::App* mat =
      app.add_subcommand("matrix", "generate and save a sensing matrix");
  mat->add_option("--kind", mat_kind, "partial-dft | svd-spectrum");
  mat->add_option("--n", mat_n, "signal dimension");
  mat->add_option("--m", mat_m, "measurement dimension");
  mat->add_option("--groups", mat_groups,
                  "singular-value groups, e.g. 1.0x1250,3.0x184");
  mat->add_option("--out", mat_out, "output file")->required();
  mat->add_option("--seed", mat_seed, "draw seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (mat->parsed())
      return do_matrix(mat_kind, mat_n, mat_m, mat_groups, mat_out, mat_seed);
    if (rec->parsed()) return do_recover(build_config(rec, rec_f));
    if (se->parsed()) return do_se(build_config(se, se_f));
    return do_experiment(build_config(exp, exp_f));
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
