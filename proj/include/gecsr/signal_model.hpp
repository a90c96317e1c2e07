#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gecsr/rng.hpp"
#include "gecsr/scalar_math.hpp"

namespace gecsr {

// Sparse signal: each entry is 0 with probability 1-rho, otherwise circular
// complex normal with variance 1/rho, so the per-entry power is 1.
struct BernoulliGaussianPrior {
  double rho;
  explicit BernoulliGaussianPrior(double rho);
};

Eigen::VectorXcd sample_prior(const BernoulliGaussianPrior& prior,
                              std::size_t n, Rng& rng);

// Uniform midrise quantizer applied separately to real and imaginary parts.
// Output levels are (b - 1/2) * step for integer b in
// [-2^(bits-1)+1, 2^(bits-1)]; the two extreme cells absorb the tails.
class Quantizer {
 public:
  Quantizer(int bits, double step);
  static Quantizer with_default_step(int bits);  // step = 2^(1-bits)

  int bits() const { return bits_; }
  double step() const { return step_; }
  int min_level() const { return min_level_; }
  int max_level() const { return max_level_; }

  std::vector<double> codebook() const;

  double quantize(double y) const;
  std::complex<double> quantize(std::complex<double> y) const;
  Eigen::VectorXcd quantize(const Eigen::VectorXcd& y) const;

  // Input cell that produces the given output level; throws
  // std::invalid_argument if the value is not in the codebook.
  Bin bin_of(double output) const;

 private:
  int bits_;
  double step_;
  int min_level_;
  int max_level_;
};

// Measurement operator together with whatever structure makes it cheap to
// apply: dense entries (with an optional singular-value cache) or a
// row-selected unitary DFT applied through FFTs.
class SensingMatrix {
 public:
  enum class Kind { Dense, PartialDft };

  static SensingMatrix dense(Eigen::MatrixXcd entries);
  // Dense matrix assembled as u * diag(s) * v^H; the factors are kept as the
  // singular-value cache.
  static SensingMatrix from_svd(Eigen::MatrixXcd u, Eigen::VectorXd s,
                                Eigen::MatrixXcd v);
  // Rows (unitary-DFT indices, strictly increasing, < n) of the n x n
  // unitary DFT; never materialized.
  static SensingMatrix partial_dft(std::size_t n, std::vector<std::size_t> rows);

  SensingMatrix(SensingMatrix&&) noexcept;
  SensingMatrix& operator=(SensingMatrix&&) noexcept;
  ~SensingMatrix();

  Kind kind() const { return kind_; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const;          // A x
  Eigen::VectorXcd apply_adjoint(const Eigen::VectorXcd& y) const;  // A^H y

  // Full-length unitary transforms (PartialDft only); apply() is these plus
  // row selection, and the fast linear path needs the unselected rows too.
  Eigen::VectorXcd unitary_dft(const Eigen::VectorXcd& x) const;
  Eigen::VectorXcd unitary_idft(const Eigen::VectorXcd& w) const;

  // Dense kinds only.
  const Eigen::MatrixXcd& entries() const;
  bool has_svd() const;
  const Eigen::MatrixXcd& svd_u() const;
  const Eigen::VectorXd& singular_values() const;
  const Eigen::MatrixXcd& svd_v() const;
  void compute_svd();  // fill the cache if absent

  // PartialDft only.
  const std::vector<std::size_t>& dft_rows() const;

  // Eigenvalues of A A^H (length rows()), in no particular order.
  Eigen::VectorXd spectrum() const;

  // Measurement power P_z = p_x * tr(A A^H) / rows().
  double p_z(double p_x = 1.0) const;

  Eigen::MatrixXcd materialize() const;  // dense entries for any kind

 private:
  SensingMatrix();

  Kind kind_ = Kind::Dense;
  std::size_t m_ = 0, n_ = 0;
  Eigen::MatrixXcd entries_;
  bool has_svd_ = false;
  Eigen::MatrixXcd svd_u_, svd_v_;
  Eigen::VectorXd singular_values_;
  std::vector<std::size_t> dft_rows_;
  struct DftPlans;
  std::unique_ptr<DftPlans> plans_;  // FFTW plans, PartialDft only
};

// m distinct DFT rows drawn uniformly without replacement, sorted.
SensingMatrix make_partial_dft(std::size_t n, std::size_t m, Rng& rng);

// Haar-distributed u and v (QR of complex Ginibre draws, phases fixed from
// the R diagonal) around the given singular values.
SensingMatrix make_svd_matrix(std::size_t n, std::size_t m,
                              const Eigen::VectorXd& singular_values, Rng& rng);

struct ProblemInstance {
  Eigen::VectorXcd x_true;
  Eigen::VectorXcd z_true;  // A x_true; empty when not recoverable
  Eigen::VectorXcd y_quantized;
  double sigma2 = 0.0;
  int bits = 0;
  double step = 0.0;
  std::uint64_t seed = 0;
};

// y = Q(A x + w) with x from the prior and w circular complex noise of
// per-entry variance sigma2.  The x draw consumes the stream before the
// noise draw does.
ProblemInstance generate_instance(const SensingMatrix& a,
                                  const BernoulliGaussianPrior& prior,
                                  const Quantizer& q, double sigma2,
                                  std::uint64_t seed);

// Same, continuing an existing stream (seed field left 0).
ProblemInstance generate_instance(const SensingMatrix& a,
                                  const BernoulliGaussianPrior& prior,
                                  const Quantizer& q, double sigma2, Rng& rng);

// Binary round-trip formats (little-endian float64 payloads).
void save_matrix(const std::string& path, const SensingMatrix& a);
SensingMatrix load_matrix(const std::string& path);
void save_instance(const std::string& path, const ProblemInstance& inst);
ProblemInstance load_instance(const std::string& path,
                              const SensingMatrix* a = nullptr);

}  // namespace gecsr
