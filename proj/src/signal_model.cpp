#include "gecsr/signal_model.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>

#include <Eigen/SVD>

namespace gecsr {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

BernoulliGaussianPrior::BernoulliGaussianPrior(double rho_in) : rho(rho_in) {
  if (!(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("sparsity rho must lie in (0, 1]");
}

Eigen::VectorXcd sample_prior(const BernoulliGaussianPrior& prior,
                              std::size_t n, Rng& rng) {
  Eigen::VectorXcd x(static_cast<Eigen::Index>(n));
  const double scale = 1.0 / std::sqrt(prior.rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    x(static_cast<Eigen::Index>(i)) =
        u <= prior.rho ? scale * rng.complex_gaussian()
                       : std::complex<double>(0.0, 0.0);
  }
  return x;
}

Quantizer::Quantizer(int bits, double step) : bits_(bits), step_(step) {
  if (bits < 1 || bits > 24) throw std::invalid_argument("bits out of range");
  if (!(step > 0.0)) throw std::invalid_argument("step must be positive");
  max_level_ = 1 << (bits - 1);
  min_level_ = -max_level_ + 1;
}

Quantizer Quantizer::with_default_step(int bits) {
  return Quantizer(bits, std::ldexp(1.0, 1 - bits));
}

std::vector<double> Quantizer::codebook() const {
  std::vector<double> levels;
  levels.reserve(static_cast<std::size_t>(max_level_ - min_level_ + 1));
  for (int b = min_level_; b <= max_level_; ++b)
    levels.push_back((static_cast<double>(b) - 0.5) * step_);
  return levels;
}

double Quantizer::quantize(double y) const {
  // Cell (b-1, b] * step maps to level b; the end cells saturate.
  double b = std::ceil(y / step_);
  b = std::min(std::max(b, static_cast<double>(min_level_)),
               static_cast<double>(max_level_));
  return (b - 0.5) * step_;
}

std::complex<double> Quantizer::quantize(std::complex<double> y) const {
  return {quantize(y.real()), quantize(y.imag())};
}

Eigen::VectorXcd Quantizer::quantize(const Eigen::VectorXcd& y) const {
  Eigen::VectorXcd out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out(i) = quantize(y(i));
  return out;
}

Bin Quantizer::bin_of(double output) const {
  const double bf = output / step_ + 0.5;
  const double br = std::round(bf);
  const int b = static_cast<int>(br);
  if (std::abs(bf - br) > 1e-9 || b < min_level_ || b > max_level_)
    throw std::invalid_argument("value is not a quantizer output level");
  const double inf = std::numeric_limits<double>::infinity();
  Bin bin;
  bin.low = (b == min_level_) ? -inf : (static_cast<double>(b) - 1.0) * step_;
  bin.up = (b == max_level_) ? inf : static_cast<double>(b) * step_;
  return bin;
}

// ---------------------------------------------------------------------------
// SensingMatrix

namespace {

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

struct SensingMatrix::DftPlans {
  std::size_t n = 0;
  fftw_complex* buf_in = nullptr;
  fftw_complex* buf_out = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  explicit DftPlans(std::size_t n_in) : n(n_in) {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    buf_in = fftw_alloc_complex(n);
    buf_out = fftw_alloc_complex(n);
    if (!buf_in || !buf_out) throw std::bad_alloc();
    const int ni = static_cast<int>(n);
    fwd = fftw_plan_dft_1d(ni, buf_in, buf_out, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_1d(ni, buf_in, buf_out, FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!fwd || !bwd) throw std::runtime_error("fftw planning failed");
  }

  ~DftPlans() {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf_in) fftw_free(buf_in);
    if (buf_out) fftw_free(buf_out);
  }

  // Executes on scratch buffers, so concurrent calls on one plan are safe.
  Eigen::VectorXcd run(fftw_plan plan, const Eigen::VectorXcd& x,
                       double scale) const {
    fftw_complex* in = fftw_alloc_complex(n);
    fftw_complex* out = fftw_alloc_complex(n);
    if (!in || !out) {
      fftw_free(in);
      fftw_free(out);
      throw std::bad_alloc();
    }
    std::memcpy(in, x.data(), n * sizeof(fftw_complex));
    fftw_execute_dft(plan, in, out);
    Eigen::VectorXcd y(static_cast<Eigen::Index>(n));
    std::memcpy(y.data(), out, n * sizeof(fftw_complex));
    fftw_free(in);
    fftw_free(out);
    return y * scale;
  }
};

SensingMatrix::SensingMatrix() = default;
SensingMatrix::SensingMatrix(SensingMatrix&&) noexcept = default;
SensingMatrix& SensingMatrix::operator=(SensingMatrix&&) noexcept = default;
SensingMatrix::~SensingMatrix() = default;

SensingMatrix SensingMatrix::dense(Eigen::MatrixXcd entries) {
  if (entries.rows() < 1 || entries.cols() < 1)
    throw std::invalid_argument("matrix must be nonempty");
  SensingMatrix a;
  a.kind_ = Kind::Dense;
  a.m_ = static_cast<std::size_t>(entries.rows());
  a.n_ = static_cast<std::size_t>(entries.cols());
  a.entries_ = std::move(entries);
  return a;
}

SensingMatrix SensingMatrix::from_svd(Eigen::MatrixXcd u, Eigen::VectorXd s,
                                      Eigen::MatrixXcd v) {
  const Eigen::Index r = s.size();
  if (u.cols() != r || v.cols() != r)
    throw std::invalid_argument("svd factor shapes disagree");
  SensingMatrix a;
  a.kind_ = Kind::Dense;
  a.m_ = static_cast<std::size_t>(u.rows());
  a.n_ = static_cast<std::size_t>(v.rows());
  a.entries_ = u * s.asDiagonal() * v.adjoint();
  a.has_svd_ = true;
  a.svd_u_ = std::move(u);
  a.svd_v_ = std::move(v);
  a.singular_values_ = std::move(s);
  return a;
}

SensingMatrix SensingMatrix::partial_dft(std::size_t n,
                                         std::vector<std::size_t> rows) {
  if (rows.empty() || rows.size() > n)
    throw std::invalid_argument("row subset size out of range");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n || (i > 0 && rows[i] <= rows[i - 1]))
      throw std::invalid_argument("rows must be strictly increasing and < n");
  }
  SensingMatrix a;
  a.kind_ = Kind::PartialDft;
  a.m_ = rows.size();
  a.n_ = n;
  a.dft_rows_ = std::move(rows);
  a.plans_ = std::make_unique<DftPlans>(n);
  return a;
}

Eigen::VectorXcd SensingMatrix::apply(const Eigen::VectorXcd& x) const {
  if (static_cast<std::size_t>(x.size()) != n_)
    throw std::invalid_argument("apply: size mismatch");
  if (kind_ == Kind::Dense) return entries_ * x;
  const Eigen::VectorXcd f =
      plans_->run(plans_->fwd, x, 1.0 / std::sqrt(static_cast<double>(n_)));
  Eigen::VectorXcd y(static_cast<Eigen::Index>(m_));
  for (std::size_t j = 0; j < m_; ++j)
    y(static_cast<Eigen::Index>(j)) =
        f(static_cast<Eigen::Index>(dft_rows_[j]));
  return y;
}

Eigen::VectorXcd SensingMatrix::apply_adjoint(const Eigen::VectorXcd& y) const {
  if (static_cast<std::size_t>(y.size()) != m_)
    throw std::invalid_argument("apply_adjoint: size mismatch");
  if (kind_ == Kind::Dense) return entries_.adjoint() * y;
  Eigen::VectorXcd full = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n_));
  for (std::size_t j = 0; j < m_; ++j)
    full(static_cast<Eigen::Index>(dft_rows_[j])) =
        y(static_cast<Eigen::Index>(j));
  return plans_->run(plans_->bwd, full,
                     1.0 / std::sqrt(static_cast<double>(n_)));
}

Eigen::VectorXcd SensingMatrix::unitary_dft(const Eigen::VectorXcd& x) const {
  if (kind_ != Kind::PartialDft)
    throw std::logic_error("unitary_dft requires a partial-DFT matrix");
  return plans_->run(plans_->fwd, x, 1.0 / std::sqrt(static_cast<double>(n_)));
}

Eigen::VectorXcd SensingMatrix::unitary_idft(const Eigen::VectorXcd& w) const {
  if (kind_ != Kind::PartialDft)
    throw std::logic_error("unitary_idft requires a partial-DFT matrix");
  return plans_->run(plans_->bwd, w, 1.0 / std::sqrt(static_cast<double>(n_)));
}

const Eigen::MatrixXcd& SensingMatrix::entries() const {
  if (kind_ != Kind::Dense)
    throw std::logic_error("entries are not stored for this matrix kind");
  return entries_;
}

bool SensingMatrix::has_svd() const { return has_svd_; }

const Eigen::MatrixXcd& SensingMatrix::svd_u() const {
  if (!has_svd_) throw std::logic_error("no singular-value cache");
  return svd_u_;
}

const Eigen::VectorXd& SensingMatrix::singular_values() const {
  if (!has_svd_) throw std::logic_error("no singular-value cache");
  return singular_values_;
}

const Eigen::MatrixXcd& SensingMatrix::svd_v() const {
  if (!has_svd_) throw std::logic_error("no singular-value cache");
  return svd_v_;
}

void SensingMatrix::compute_svd() {
  if (has_svd_) return;
  if (kind_ != Kind::Dense)
    throw std::logic_error("svd cache applies to dense matrices only");
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(entries_,
                                      Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd_u_ = svd.matrixU();
  svd_v_ = svd.matrixV();
  singular_values_ = svd.singularValues();
  has_svd_ = true;
}

Eigen::VectorXd SensingMatrix::spectrum() const {
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m_));
  if (kind_ == Kind::PartialDft) {
    lam.setOnes();  // rows of a unitary matrix
    return lam;
  }
  if (has_svd_) {
    for (Eigen::Index j = 0; j < singular_values_.size(); ++j)
      lam(j) = singular_values_(j) * singular_values_(j);
    return lam;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(entries_ *
                                                     entries_.adjoint());
  return es.eigenvalues();
}

double SensingMatrix::p_z(double p_x) const {
  double tr = 0.0;
  if (kind_ == Kind::PartialDft) {
    tr = static_cast<double>(m_);
  } else if (has_svd_) {
    tr = singular_values_.squaredNorm();
  } else {
    tr = entries_.squaredNorm();
  }
  return p_x * tr / static_cast<double>(m_);
}

Eigen::MatrixXcd SensingMatrix::materialize() const {
  if (kind_ == Kind::Dense) return entries_;
  Eigen::MatrixXcd a(static_cast<Eigen::Index>(m_),
                     static_cast<Eigen::Index>(n_));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_));
  for (std::size_t j = 0; j < m_; ++j) {
    const double k = static_cast<double>(dft_rows_[j]);
    for (std::size_t i = 0; i < n_; ++i) {
      const double ang = -2.0 * M_PI * k * static_cast<double>(i) /
                         static_cast<double>(n_);
      a(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          scale * std::complex<double>(std::cos(ang), std::sin(ang));
    }
  }
  return a;
}

const std::vector<std::size_t>& SensingMatrix::dft_rows() const {
  if (kind_ != Kind::PartialDft)
    throw std::logic_error("dft_rows applies to partial-DFT matrices only");
  return dft_rows_;
}

SensingMatrix make_partial_dft(std::size_t n, std::size_t m, Rng& rng) {
  if (m == 0 || m > n) throw std::invalid_argument("need 0 < m <= n");
  // Partial Fisher-Yates: uniform m-subset without replacement.
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(pool[i], pool[j]);
  }
  std::vector<std::size_t> rows(pool.begin(), pool.begin() + m);
  std::sort(rows.begin(), rows.end());
  return SensingMatrix::partial_dft(n, std::move(rows));
}

namespace {

// Columns of a Haar unitary: QR of a Ginibre draw with the R diagonal's
// phases absorbed into Q.
Eigen::MatrixXcd haar_columns(std::size_t rows, std::size_t cols, Rng& rng) {
  Eigen::MatrixXcd g(static_cast<Eigen::Index>(rows),
                     static_cast<Eigen::Index>(cols));
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    for (Eigen::Index r = 0; r < g.rows(); ++r)
      g(r, c) = rng.complex_gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  Eigen::MatrixXcd q = qr.householderQ() *
                       Eigen::MatrixXcd::Identity(g.rows(), g.cols());
  for (Eigen::Index c = 0; c < q.cols(); ++c) {
    const std::complex<double> rcc = qr.matrixQR()(c, c);
    const double mag = std::abs(rcc);
    if (mag > 0.0) q.col(c) *= rcc / mag;
  }
  return q;
}

}  // namespace

SensingMatrix make_svd_matrix(std::size_t n, std::size_t m,
                              const Eigen::VectorXd& singular_values,
                              Rng& rng) {
  const std::size_t r = std::min(m, n);
  if (static_cast<std::size_t>(singular_values.size()) != r)
    throw std::invalid_argument("need min(m, n) singular values");
  Eigen::MatrixXcd u = haar_columns(m, r, rng);
  Eigen::MatrixXcd v = haar_columns(n, r, rng);
  return SensingMatrix::from_svd(std::move(u), singular_values, std::move(v));
}

ProblemInstance generate_instance(const SensingMatrix& a,
                                  const BernoulliGaussianPrior& prior,
                                  const Quantizer& q, double sigma2,
                                  std::uint64_t seed) {
  Rng rng(seed);
  ProblemInstance inst = generate_instance(a, prior, q, sigma2, rng);
  inst.seed = seed;
  return inst;
}

ProblemInstance generate_instance(const SensingMatrix& a,
                                  const BernoulliGaussianPrior& prior,
                                  const Quantizer& q, double sigma2,
                                  Rng& rng) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be >= 0");
  ProblemInstance inst;
  inst.x_true = sample_prior(prior, a.cols(), rng);
  inst.z_true = a.apply(inst.x_true);
  const double sigma = std::sqrt(sigma2);
  Eigen::VectorXcd noisy = inst.z_true;
  for (Eigen::Index i = 0; i < noisy.size(); ++i)
    noisy(i) += sigma * rng.complex_gaussian();
  inst.y_quantized = q.quantize(noisy);
  inst.sigma2 = sigma2;
  inst.bits = q.bits();
  inst.step = q.step();
  inst.seed = 0;
  return inst;
}

// ---------------------------------------------------------------------------
// File round trips

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void write_bytes(std::ofstream& f, const void* p, std::size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& f, void* p, std::size_t n) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (!f) throw std::runtime_error("truncated file");
}

template <typename T>
void write_pod(std::ofstream& f, T v) {
  write_bytes(f, &v, sizeof v);
}

template <typename T>
T read_pod(std::ifstream& f) {
  T v;
  read_bytes(f, &v, sizeof v);
  return v;
}

void write_complex_vec(std::ofstream& f, const Eigen::VectorXcd& v) {
  write_bytes(f, v.data(), static_cast<std::size_t>(v.size()) * 2 * sizeof(double));
}

Eigen::VectorXcd read_complex_vec(std::ifstream& f, std::size_t n) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(n));
  read_bytes(f, v.data(), n * 2 * sizeof(double));
  return v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  return f;
}

void check_magic(std::ifstream& f, const char (&magic)[5]) {
  char got[4];
  read_bytes(f, got, 4);
  if (std::memcmp(got, magic, 4) != 0)
    throw std::runtime_error("bad file magic");
  const auto version = read_pod<std::uint32_t>(f);
  if (version != kFormatVersion)
    throw std::runtime_error("unsupported file version");
}

}  // namespace

void save_matrix(const std::string& path, const SensingMatrix& a) {
  std::ofstream f = open_out(path);
  write_bytes(f, "GECM", 4);
  write_pod(f, kFormatVersion);
  write_pod(f, static_cast<std::uint64_t>(a.rows()));
  write_pod(f, static_cast<std::uint64_t>(a.cols()));
  const Eigen::MatrixXcd dense = a.materialize();
  for (Eigen::Index i = 0; i < dense.rows(); ++i)
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      write_pod(f, dense(i, j).real());
      write_pod(f, dense(i, j).imag());
    }
  if (!f) throw std::runtime_error("write failed: " + path);
}

SensingMatrix load_matrix(const std::string& path) {
  std::ifstream f = open_in(path);
  check_magic(f, "GECM");
  const auto m = read_pod<std::uint64_t>(f);
  const auto n = read_pod<std::uint64_t>(f);
  if (m == 0 || n == 0 || m > (1u << 20) || n > (1u << 20))
    throw std::runtime_error("matrix dimensions out of range");
  Eigen::MatrixXcd dense(static_cast<Eigen::Index>(m),
                         static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < dense.rows(); ++i)
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      const double re = read_pod<double>(f);
      const double im = read_pod<double>(f);
      dense(i, j) = {re, im};
    }
  return SensingMatrix::dense(std::move(dense));
}

void save_instance(const std::string& path, const ProblemInstance& inst) {
  std::ofstream f = open_out(path);
  write_bytes(f, "GECI", 4);
  write_pod(f, kFormatVersion);
  write_pod(f, static_cast<std::uint64_t>(inst.x_true.size()));
  write_pod(f, static_cast<std::uint64_t>(inst.y_quantized.size()));
  write_pod(f, inst.sigma2);
  write_pod(f, static_cast<std::uint32_t>(inst.bits));
  write_pod(f, inst.step);
  write_pod(f, inst.seed);
  write_complex_vec(f, inst.x_true);
  write_complex_vec(f, inst.y_quantized);
  if (!f) throw std::runtime_error("write failed: " + path);
}

ProblemInstance load_instance(const std::string& path, const SensingMatrix* a) {
  std::ifstream f = open_in(path);
  check_magic(f, "GECI");
  const auto n = read_pod<std::uint64_t>(f);
  const auto m = read_pod<std::uint64_t>(f);
  if (n == 0 || m == 0 || n > (1u << 24) || m > (1u << 24))
    throw std::runtime_error("instance dimensions out of range");
  ProblemInstance inst;
  inst.sigma2 = read_pod<double>(f);
  inst.bits = static_cast<int>(read_pod<std::uint32_t>(f));
  inst.step = read_pod<double>(f);
  inst.seed = read_pod<std::uint64_t>(f);
  inst.x_true = read_complex_vec(f, n);
  inst.y_quantized = read_complex_vec(f, m);
  if (a) {
    if (a->cols() != n || a->rows() != m)
      throw std::runtime_error("matrix does not match instance dimensions");
    inst.z_true = a->apply(inst.x_true);
  }
  return inst;
}

}  // namespace gecsr
