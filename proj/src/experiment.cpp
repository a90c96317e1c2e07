#include "gecsr/experiment.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <thread>

namespace gecsr {

using nlohmann::json;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void bad_config(const std::string& why) {
  throw ConfigError("invalid config: " + why);
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  const MatrixConfig& mc = cfg.matrix;
  if (mc.n == 0 || mc.m == 0) bad_config("matrix dimensions must be positive");
  if (mc.kind == MatrixConfig::Kind::PartialDft && mc.m > mc.n)
    bad_config("partial-dft needs m <= n");
  if (mc.kind == MatrixConfig::Kind::SvdSpectrum) {
    if (mc.groups.empty()) bad_config("svd-spectrum needs singular-value groups");
    std::size_t total = 0;
    for (const auto& [sv, count] : mc.groups) {
      if (!(sv >= 0.0)) bad_config("singular values must be >= 0");
      total += count;
    }
    if (total != std::min(mc.m, mc.n))
      bad_config("group sizes must sum to min(m, n)");
  }
  if (!(cfg.rho > 0.0) || cfg.rho > 1.0) bad_config("rho must lie in (0, 1]");
  if (!(cfg.sigma2 >= 0.0)) bad_config("sigma2 must be >= 0");
  if (cfg.bits.empty()) bad_config("bits list is empty");
  for (int b : cfg.bits)
    if (b < 1 || b > 24) bad_config("bits values must lie in [1, 24]");
  if (!(cfg.step >= 0.0)) bad_config("step must be >= 0");
  if (cfg.trials < 1) bad_config("trials must be >= 1");
  if (cfg.t_max < 1) bad_config("t_max must be >= 1");
  if (cfg.workers < 1) bad_config("workers must be >= 1");
  if (cfg.damping < 0.0 || cfg.damping >= 1.0)
    bad_config("damping must lie in [0, 1)");
}

namespace {

const json* find_key(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

template <typename T>
void read_key(const json& j, const char* key, T& out) {
  if (const json* v = find_key(j, key)) {
    try {
      out = v->get<T>();
    } catch (const json::exception&) {
      bad_config(std::string("bad value for '") + key + "'");
    }
  }
}

void check_known_keys(const json& j, std::initializer_list<const char*> known,
                      const char* where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) bad_config(std::string("unknown key '") + key + "' in " + where);
  }
}

MatrixConfig matrix_from_json(const json& j) {
  if (!j.is_object()) bad_config("'matrix' must be an object");
  check_known_keys(j, {"kind", "n", "m", "groups"}, "matrix");
  MatrixConfig mc;
  std::string kind = "partial-dft";
  read_key(j, "kind", kind);
  if (kind == "partial-dft") {
    mc.kind = MatrixConfig::Kind::PartialDft;
  } else if (kind == "svd-spectrum") {
    mc.kind = MatrixConfig::Kind::SvdSpectrum;
  } else {
    bad_config("matrix kind must be 'partial-dft' or 'svd-spectrum'");
  }
  read_key(j, "n", mc.n);
  read_key(j, "m", mc.m);
  if (const json* g = find_key(j, "groups")) {
    if (!g->is_array()) bad_config("'groups' must be an array of [sv, count]");
    for (const json& e : *g) {
      if (!e.is_array() || e.size() != 2)
        bad_config("each group must be [singular value, count]");
      try {
        mc.groups.emplace_back(e[0].get<double>(), e[1].get<std::size_t>());
      } catch (const json::exception&) {
        bad_config("bad group entry");
      }
    }
  }
  return mc;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    bad_config(std::string("not valid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("top level must be an object");
  check_known_keys(j,
                   {"matrix", "rho", "sigma2", "bits", "step", "trials",
                    "t_max", "seed", "workers", "fixed_matrix", "damping",
                    "convergence_tol", "out", "per_trial_out"},
                   "config");
  ExperimentConfig cfg;
  if (const json* m = find_key(j, "matrix")) cfg.matrix = matrix_from_json(*m);
  read_key(j, "rho", cfg.rho);
  read_key(j, "sigma2", cfg.sigma2);
  if (const json* b = find_key(j, "bits")) {
    cfg.bits.clear();
    if (b->is_number_integer()) {
      cfg.bits.push_back(b->get<int>());
    } else if (b->is_array()) {
      for (const json& e : *b) {
        if (!e.is_number_integer()) bad_config("bits entries must be integers");
        cfg.bits.push_back(e.get<int>());
      }
    } else {
      bad_config("'bits' must be an integer or list of integers");
    }
  }
  read_key(j, "step", cfg.step);
  read_key(j, "trials", cfg.trials);
  read_key(j, "t_max", cfg.t_max);
  read_key(j, "seed", cfg.seed);
  read_key(j, "workers", cfg.workers);
  read_key(j, "fixed_matrix", cfg.fixed_matrix);
  read_key(j, "damping", cfg.damping);
  read_key(j, "convergence_tol", cfg.convergence_tol);
  read_key(j, "out", cfg.out);
  read_key(j, "per_trial_out", cfg.per_trial_out);
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) bad_config("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return config_from_json_text(ss.str());
}

void apply_full_scale(ExperimentConfig& cfg) {
  cfg.matrix.n = 8192;
  cfg.matrix.m = 5734;
  if (cfg.matrix.kind == MatrixConfig::Kind::SvdSpectrum)
    cfg.matrix.groups = {{1.0, 5000}, {3.0, 734}};
  cfg.trials = 2000;
}

Quantizer quantizer_for(const ExperimentConfig& cfg, int bits) {
  if (cfg.step > 0.0) return Quantizer(bits, cfg.step);
  return Quantizer::with_default_step(bits);
}

Spectrum config_spectrum(const MatrixConfig& mc) {
  Spectrum s;
  s.alpha = static_cast<double>(mc.m) / static_cast<double>(mc.n);
  s.eigenvalues.resize(static_cast<Eigen::Index>(mc.m));
  if (mc.kind == MatrixConfig::Kind::PartialDft) {
    s.eigenvalues.setOnes();
    return s;
  }
  s.eigenvalues.setZero();  // m > n leaves zero modes
  Eigen::Index at = 0;
  for (const auto& [sv, count] : mc.groups)
    for (std::size_t k = 0; k < count; ++k)
      s.eigenvalues(at++) = sv * sv;
  return s;
}

SensingMatrix sample_matrix(const MatrixConfig& mc, Rng& rng) {
  if (mc.kind == MatrixConfig::Kind::PartialDft)
    return make_partial_dft(mc.n, mc.m, rng);
  const std::size_t r = std::min(mc.m, mc.n);
  Eigen::VectorXd sv(static_cast<Eigen::Index>(r));
  Eigen::Index at = 0;
  for (const auto& [value, count] : mc.groups)
    for (std::size_t k = 0; k < count; ++k) sv(at++) = value;
  return make_svd_matrix(mc.n, mc.m, sv, rng);
}

namespace {

struct TrialResult {
  bool diverged = false;
  std::vector<IterationRecord> recs;  // partial when diverged
};

// Repeats the last record out to t_max so converged-early trials still
// contribute flat tails to the per-iteration averages.
void pad_records(std::vector<IterationRecord>& recs, int t_max) {
  if (recs.empty()) return;
  while (static_cast<int>(recs.size()) < t_max) {
    IterationRecord r = recs.back();
    r.iter = static_cast<int>(recs.size()) + 1;
    recs.push_back(r);
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

RecoverTable run_recover(const ExperimentConfig& cfg) {
  validate(cfg);
  const BernoulliGaussianPrior prior(cfg.rho);
  const int nb = static_cast<int>(cfg.bits.size());
  const int nt = cfg.trials;

  std::optional<SensingMatrix> shared;
  if (cfg.fixed_matrix) {
    Rng mrng(cfg.seed);
    shared.emplace(sample_matrix(cfg.matrix, mrng));
  }

  std::vector<std::vector<TrialResult>> results(
      static_cast<std::size_t>(nb), std::vector<TrialResult>(nt));

  const long total_jobs = static_cast<long>(nb) * nt;
  std::atomic<long> next_job{0};
  auto work = [&]() {
    for (;;) {
      const long job = next_job.fetch_add(1);
      if (job >= total_jobs) break;
      const int b = static_cast<int>(job / nt);
      const int i = static_cast<int>(job % nt);
      const Quantizer q = quantizer_for(cfg, cfg.bits[static_cast<std::size_t>(b)]);
      Rng rng(cfg.seed + static_cast<std::uint64_t>(i));
      std::optional<SensingMatrix> local;
      const SensingMatrix* a;
      if (shared) {
        a = &*shared;
      } else {
        local.emplace(sample_matrix(cfg.matrix, rng));
        a = &*local;
      }
      const ProblemInstance inst =
          generate_instance(*a, prior, q, cfg.sigma2, rng);
      GecConfig gc;
      gc.max_iters = cfg.t_max;
      gc.damping = cfg.damping;
      gc.convergence_tol = cfg.convergence_tol;
      gc.record_history = true;
      TrialResult& out = results[static_cast<std::size_t>(b)][static_cast<std::size_t>(i)];
      try {
        GecState st = gec_sr_run(*a, inst.y_quantized, q, cfg.sigma2, prior,
                                 gc, &inst.x_true);
        out.recs = std::move(st.history);
        pad_records(out.recs, cfg.t_max);
      } catch (const DivergedError& e) {
        out.diverged = true;
        out.recs = e.state.history;  // kept for the per-trial dump only
      }
    }
  };

  const int threads_wanted =
      static_cast<int>(std::min<long>(cfg.workers, total_jobs));
  if (threads_wanted <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads_wanted));
    for (int k = 0; k < threads_wanted; ++k) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }

  RecoverTable table;
  table.trials = nt;
  for (int b = 0; b < nb; ++b) {
    const int bits = cfg.bits[static_cast<std::size_t>(b)];
    const auto& per_trial = results[static_cast<std::size_t>(b)];
    int ndiv = 0;
    for (const TrialResult& tr : per_trial) ndiv += tr.diverged ? 1 : 0;
    table.n_diverged[bits] = ndiv;
    for (int t = 0; t < cfg.t_max; ++t) {
      double mse_sum = 0.0, v1x_sum = 0.0, v1z_sum = 0.0;
      long clamp_sum = 0;
      int count = 0;
      for (const TrialResult& tr : per_trial) {
        if (tr.diverged) continue;
        const IterationRecord& r = tr.recs[static_cast<std::size_t>(t)];
        mse_sum += r.mse;
        v1x_sum += r.v_1x;
        v1z_sum += r.v_1z;
        clamp_sum += r.clamp_events;
        ++count;
      }
      RecoverRow row;
      row.bits = bits;
      row.iter = t + 1;
      if (count > 0) {
        row.mse_sim_db = 10.0 * std::log10(mse_sum / count);
        row.v1x = v1x_sum / count;
        row.v1z = v1z_sum / count;
        row.clamp_events = clamp_sum;
      } else {
        row.mse_sim_db = kNan;
        row.v1x = kNan;
        row.v1z = kNan;
        row.clamp_events = 0;
      }
      table.rows.push_back(row);
    }
    if (!cfg.per_trial_out.empty()) {
      for (int i = 0; i < nt; ++i) {
        const TrialResult& tr = per_trial[static_cast<std::size_t>(i)];
        for (const IterationRecord& r : tr.recs) {
          std::ostringstream line;
          line << bits << ',' << i << ',' << r.iter << ','
               << fmt(10.0 * std::log10(r.mse)) << ',' << (tr.diverged ? 1 : 0);
          table.per_trial_csv.push_back(line.str());
        }
      }
    }
  }
  return table;
}

SeTable run_se(const ExperimentConfig& cfg) {
  validate(cfg);
  SeTable table;
  const Spectrum s = config_spectrum(cfg.matrix);
  const bool unit_spectrum = (s.eigenvalues.array() == 1.0).all();
  for (int bits : cfg.bits) {
    const Quantizer q = quantizer_for(cfg, bits);
    std::vector<SeState> traj;
    try {
      traj = se_run(s, cfg.rho, cfg.sigma2, q, 1.0, cfg.t_max);
    } catch (const SeDivergedError& e) {
      traj = e.trajectory;
      table.diverged = true;
    }
    std::vector<SeState> ro;
    if (unit_spectrum) {
      try {
        ro = se_run_row_orthogonal(s.alpha, cfg.rho, cfg.sigma2, q, 1.0,
                                   cfg.t_max);
      } catch (const SeDivergedError& e) {
        ro = e.trajectory;
        table.diverged = true;
      }
    }
    for (std::size_t k = 0; k < traj.size(); ++k) {
      SeRow row;
      row.bits = bits;
      row.iter = traj[k].iter;
      row.mse_se_db = traj[k].mse_db;
      row.mse_se_ro_db = k < ro.size() ? ro[k].mse_db : kNan;
      row.eta_x = traj[k].eta_x;
      row.v_x = traj[k].v_x;
      row.v_z = traj[k].v_z;
      table.rows.push_back(row);
    }
  }
  return table;
}

std::vector<ExperimentRow> join_experiment(const RecoverTable& sim,
                                           const SeTable& se) {
  std::map<std::pair<int, int>, const SeRow*> se_index;
  for (const SeRow& r : se.rows) se_index[{r.bits, r.iter}] = &r;
  std::vector<ExperimentRow> rows;
  rows.reserve(sim.rows.size());
  for (const RecoverRow& r : sim.rows) {
    ExperimentRow e;
    e.bits = r.bits;
    e.iter = r.iter;
    e.mse_sim_db = r.mse_sim_db;
    const auto it = se_index.find({r.bits, r.iter});
    e.mse_se_db = it == se_index.end() ? kNan : it->second->mse_se_db;
    e.n_diverged = sim.n_diverged.count(r.bits)
                       ? sim.n_diverged.at(r.bits)
                       : 0;
    e.v1x = r.v1x;
    e.v1z = r.v1z;
    e.clamp_events = r.clamp_events;
    rows.push_back(e);
  }
  return rows;
}

std::string recover_csv(const RecoverTable& t) {
  std::ostringstream out;
  out << "bits,iter,mse_sim_db,n_diverged,v1x,v1z,clamp_events\n";
  for (const RecoverRow& r : t.rows) {
    out << r.bits << ',' << r.iter << ',' << fmt(r.mse_sim_db) << ','
        << t.n_diverged.at(r.bits) << ',' << fmt(r.v1x) << ',' << fmt(r.v1z)
        << ',' << r.clamp_events << '\n';
  }
  return out.str();
}

std::string se_csv(const SeTable& t) {
  std::ostringstream out;
  out << "bits,iter,mse_se_db,mse_se_ro_db,eta_x,v_x,v_z\n";
  for (const SeRow& r : t.rows) {
    out << r.bits << ',' << r.iter << ',' << fmt(r.mse_se_db) << ','
        << fmt(r.mse_se_ro_db) << ',' << fmt(r.eta_x) << ',' << fmt(r.v_x)
        << ',' << fmt(r.v_z) << '\n';
  }
  return out.str();
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::ostringstream out;
  out << "bits,iter,mse_sim_db,mse_se_db,n_diverged,v1x,v1z,clamp_events\n";
  for (const ExperimentRow& r : rows) {
    out << r.bits << ',' << r.iter << ',' << fmt(r.mse_sim_db) << ','
        << fmt(r.mse_se_db) << ',' << r.n_diverged << ',' << fmt(r.v1x) << ','
        << fmt(r.v1z) << ',' << r.clamp_events << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

bool divergence_excessive(const RecoverTable& t) {
  for (const auto& [bits, ndiv] : t.n_diverged)
    if (ndiv > t.trials / 10.0) return true;
  return false;
}

std::string cmd_matrix(const MatrixConfig& mc, const std::string& out_path,
                       std::uint64_t seed) {
  Rng rng(seed);
  const SensingMatrix a = sample_matrix(mc, rng);
  save_matrix(out_path, a);
  const Eigen::VectorXd lam = a.spectrum();
  std::ostringstream ss;
  ss << "wrote " << a.rows() << "x" << a.cols() << " matrix ("
     << (mc.kind == MatrixConfig::Kind::PartialDft ? "partial-dft"
                                                   : "svd-spectrum")
     << ") to " << out_path << "\n"
     << "spectrum: min " << fmt(lam.minCoeff()) << ", max "
     << fmt(lam.maxCoeff()) << ", mean " << fmt(lam.mean()) << "\n";
  return ss.str();
}

}  // namespace gecsr
