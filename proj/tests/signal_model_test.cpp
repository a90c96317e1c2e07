#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <set>
#include <vector>

#include "gecsr/signal_model.hpp"
#include "oracle_utils.hpp"

using gecsr::Bin;
using gecsr::Quantizer;
using gecsr::Rng;
using gecsr::SensingMatrix;
using oracle::rel_err;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

std::string temp_path(const char* tag) {
  return std::string("signal_model_test_") + tag + ".bin";
}

}  // namespace

TEST_CASE("codebook levels are the odd half-step grid") {
  const Quantizer q3(3, 0.25);
  CHECK(q3.min_level() == -3);
  CHECK(q3.max_level() == 4);
  const std::vector<double> book = q3.codebook();
  REQUIRE(book.size() == 8);
  const std::vector<double> want = {-0.875, -0.625, -0.375, -0.125,
                                    0.125,  0.375,  0.625,  0.875};
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(book[i] == doctest::Approx(want[i]).epsilon(1e-15));

  // One bit: the two cells split at zero.
  const Quantizer q1(1, 1.0);
  const std::vector<double> b1 = q1.codebook();
  REQUIRE(b1.size() == 2);
  CHECK(b1[0] == doctest::Approx(-0.5));
  CHECK(b1[1] == doctest::Approx(0.5));

  for (int bits = 1; bits <= 6; ++bits) {
    const Quantizer q = Quantizer::with_default_step(bits);
    CHECK(q.step() == doctest::Approx(std::ldexp(1.0, 1 - bits)));
    const std::vector<double> b = q.codebook();
    REQUIRE(static_cast<int>(b.size()) == 1 << bits);
    // Uniform spacing, symmetric about zero.
    for (std::size_t i = 1; i < b.size(); ++i)
      CHECK(b[i] - b[i - 1] == doctest::Approx(q.step()).epsilon(1e-13));
    CHECK(b.front() == doctest::Approx(-b.back()).epsilon(1e-13));
  }
}

TEST_CASE("quantization assigns the containing cell and saturates") {
  const Quantizer q(3, 0.25);
  CHECK(q.quantize(0.2) == doctest::Approx(0.125));
  CHECK(q.quantize(-0.01) == doctest::Approx(-0.125));
  CHECK(q.quantize(100.0) == doctest::Approx(0.875));
  CHECK(q.quantize(-100.0) == doctest::Approx(-0.875));
  // Edge input k*step belongs to the lower cell ((k-1)*step, k*step].
  CHECK(q.quantize(0.25) == doctest::Approx(0.125));
  CHECK(q.quantize(0.0) == doctest::Approx(-0.125));

  const std::complex<double> v = q.quantize(std::complex<double>(0.2, -3.0));
  CHECK(v.real() == doctest::Approx(0.125));
  CHECK(v.imag() == doctest::Approx(-0.875));
}

TEST_CASE("cells tile the line and round-trip through bin_of") {
  for (int bits : {1, 2, 3, 4, 5, 6}) {
    const Quantizer q = Quantizer::with_default_step(bits);
    const std::vector<double> book = q.codebook();

    // Interior edges shared, extremes open.
    CHECK(q.bin_of(book.front()).low == -kInf);
    CHECK(q.bin_of(book.back()).up == kInf);
    for (std::size_t i = 1; i < book.size(); ++i)
      CHECK(q.bin_of(book[i]).low ==
            doctest::Approx(q.bin_of(book[i - 1]).up).epsilon(1e-13));

    // Output level sits inside its own cell (saturating cells excepted).
    for (std::size_t i = 1; i + 1 < book.size(); ++i) {
      const Bin b = q.bin_of(book[i]);
      CHECK(b.low < book[i]);
      CHECK(book[i] <= b.up);
    }
  }

  const Quantizer q(3, 0.25);
  CHECK_THROWS_AS(q.bin_of(0.3), std::invalid_argument);
  CHECK_THROWS_AS(q.bin_of(1.125), std::invalid_argument);  // beyond the grid

  // Random inputs: the quantized value's cell contains the input.
  Rng rng(7);
  for (int k = 0; k < 2000; ++k) {
    const double y = 4.0 * (2.0 * rng.uniform01() - 1.0);
    const double out = q.quantize(y);
    const Bin b = q.bin_of(out);
    CHECK(b.low < y);
    CHECK(y <= b.up);
  }
}

TEST_CASE("row-selected unitary transform matches explicit entries") {
  const std::vector<std::size_t> rows = {0, 2, 3, 7};
  SensingMatrix a = SensingMatrix::partial_dft(8, rows);
  CHECK(a.rows() == 4);
  CHECK(a.cols() == 8);

  Eigen::MatrixXcd f(4, 8);
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 8; ++j) {
      const double ang = -2.0 * oracle::kPi *
                         static_cast<double>(rows[k] * j) / 8.0;
      f(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          std::polar(1.0 / std::sqrt(8.0), ang);
    }
  CHECK((a.materialize() - f).cwiseAbs().maxCoeff() < 1e-12);

  Rng rng(11);
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXcd x(8);
    for (Eigen::Index i = 0; i < 8; ++i) x(i) = rng.complex_gaussian();
    CHECK((a.apply(x) - f * x).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXcd y(4);
    for (Eigen::Index i = 0; i < 4; ++i) y(i) = rng.complex_gaussian();
    CHECK((a.apply_adjoint(y) - f.adjoint() * y).cwiseAbs().maxCoeff() <
          1e-12);
  }

  // Selected rows of a unitary matrix: A A^H = I, flat spectrum, unit power.
  const Eigen::MatrixXcd gram = f * f.adjoint();
  CHECK((gram - Eigen::MatrixXcd::Identity(4, 4)).cwiseAbs().maxCoeff() <
        1e-12);
  const Eigen::VectorXd spec = a.spectrum();
  for (Eigen::Index i = 0; i < spec.size(); ++i)
    CHECK(spec(i) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.p_z() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("random row draws are distinct, sorted, in range") {
  Rng rng(3);
  SensingMatrix a = gecsr::make_partial_dft(64, 20, rng);
  const std::vector<std::size_t>& rows = a.dft_rows();
  REQUIRE(rows.size() == 20);
  std::set<std::size_t> uniq(rows.begin(), rows.end());
  CHECK(uniq.size() == 20);
  CHECK(std::is_sorted(rows.begin(), rows.end()));
  CHECK(*uniq.rbegin() < 64);
}

TEST_CASE("spectrum-shaped matrices carry their designed singular values") {
  Eigen::VectorXd sv(4);
  sv << 1.0, 1.0, 1.0, 3.0;
  Rng rng(5);
  SensingMatrix a = gecsr::make_svd_matrix(8, 4, sv, rng);
  CHECK(a.rows() == 4);
  CHECK(a.cols() == 8);
  REQUIRE(a.has_svd());

  // Factors are isometries and reassemble the entries.
  const Eigen::MatrixXcd& u = a.svd_u();
  const Eigen::MatrixXcd& v = a.svd_v();
  CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  CHECK((v.adjoint() * v - Eigen::MatrixXcd::Identity(4, 4))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
  const Eigen::MatrixXcd rebuilt =
      u * a.singular_values().asDiagonal() * v.adjoint();
  CHECK((a.entries() - rebuilt).cwiseAbs().maxCoeff() < 1e-12);

  // Spectrum of A A^H = squared singular values.
  Eigen::VectorXd spec = a.spectrum();
  std::sort(spec.data(), spec.data() + spec.size());
  CHECK(spec(0) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(spec(1) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(spec(2) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(spec(3) == doctest::Approx(9.0).epsilon(1e-10));
  CHECK(a.p_z() == doctest::Approx(3.0).epsilon(1e-10));

  // A fresh decomposition of the bare entries finds the same values.
  SensingMatrix plain = SensingMatrix::dense(a.entries());
  CHECK_FALSE(plain.has_svd());
  plain.compute_svd();
  Eigen::VectorXd found = plain.singular_values();
  std::sort(found.data(), found.data() + found.size());
  CHECK(std::abs(found(0) - 1.0) < 1e-10);
  CHECK(std::abs(found(3) - 3.0) < 1e-10);
}

TEST_CASE("tall spectrum-shaped matrices keep rank min(m, n)") {
  Eigen::VectorXd sv(3);
  sv << 2.0, 1.0, 0.5;
  Rng rng(9);
  SensingMatrix a = gecsr::make_svd_matrix(3, 5, sv, rng);  // m > n
  CHECK(a.rows() == 5);
  CHECK(a.cols() == 3);
  Eigen::VectorXd spec = a.spectrum();
  REQUIRE(spec.size() == 5);
  std::sort(spec.data(), spec.data() + spec.size());
  // Two zero modes, then 0.25, 1, 4.
  CHECK(std::abs(spec(0)) < 1e-10);
  CHECK(std::abs(spec(1)) < 1e-10);
  CHECK(spec(2) == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(spec(4) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("sparse draws have the right support rate and power") {
  const gecsr::BernoulliGaussianPrior prior(0.5);
  Rng rng(13);
  const Eigen::VectorXcd x = gecsr::sample_prior(prior, 5000, rng);
  int zeros = 0;
  double power = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) == std::complex<double>(0.0, 0.0)) ++zeros;
    power += std::norm(x(i));
  }
  const double zero_frac = zeros / 5000.0;
  CHECK(zero_frac > 0.45);
  CHECK(zero_frac < 0.55);
  power /= 5000.0;
  CHECK(power > 0.85);
  CHECK(power < 1.15);
}

TEST_CASE("instance generation is seed-deterministic and self-consistent") {
  Rng mrng(21);
  SensingMatrix a = gecsr::make_partial_dft(64, 44, mrng);
  const gecsr::BernoulliGaussianPrior prior(0.4);
  const Quantizer q = Quantizer::with_default_step(3);

  const gecsr::ProblemInstance inst =
      gecsr::generate_instance(a, prior, q, 1e-3, 77);
  CHECK(inst.x_true.size() == 64);
  CHECK(inst.z_true.size() == 44);
  CHECK(inst.y_quantized.size() == 44);
  CHECK((a.apply(inst.x_true) - inst.z_true).cwiseAbs().maxCoeff() < 1e-12);

  // Quantized observations live on the codebook.
  const std::vector<double> book = q.codebook();
  auto on_book = [&](double v) {
    for (double b : book)
      if (std::abs(b - v) < 1e-12) return true;
    return false;
  };
  for (Eigen::Index i = 0; i < inst.y_quantized.size(); ++i) {
    CHECK(on_book(inst.y_quantized(i).real()));
    CHECK(on_book(inst.y_quantized(i).imag()));
  }

  const gecsr::ProblemInstance again =
      gecsr::generate_instance(a, prior, q, 1e-3, 77);
  CHECK(inst.x_true == again.x_true);
  CHECK(inst.y_quantized == again.y_quantized);
  const gecsr::ProblemInstance other =
      gecsr::generate_instance(a, prior, q, 1e-3, 78);
  CHECK(inst.x_true != other.x_true);
}

TEST_CASE("matrix files round-trip exactly") {
  Rng rng(31);
  Eigen::VectorXd sv(3);
  sv << 1.0, 2.0, 3.0;
  SensingMatrix a = gecsr::make_svd_matrix(6, 3, sv, rng);

  const std::string path = temp_path("matrix");
  gecsr::save_matrix(path, a);
  SensingMatrix back = gecsr::load_matrix(path);
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 6);
  CHECK(back.entries() == a.entries());  // bit-exact

  // Row-selected transforms persist through their dense form.
  SensingMatrix d = SensingMatrix::partial_dft(8, {1, 4, 6});
  gecsr::save_matrix(path, d);
  SensingMatrix dback = gecsr::load_matrix(path);
  CHECK(dback.entries() == d.materialize());
  std::remove(path.c_str());
}

TEST_CASE("instance files round-trip and recompute the clean measurement") {
  Rng rng(41);
  SensingMatrix a = gecsr::make_partial_dft(32, 20, rng);
  const gecsr::BernoulliGaussianPrior prior(0.4);
  const Quantizer q = Quantizer::with_default_step(2);
  const gecsr::ProblemInstance inst =
      gecsr::generate_instance(a, prior, q, 1e-4, 5);

  const std::string path = temp_path("instance");
  gecsr::save_instance(path, inst);

  const gecsr::ProblemInstance bare = gecsr::load_instance(path);
  CHECK(bare.x_true == inst.x_true);
  CHECK(bare.y_quantized == inst.y_quantized);
  CHECK(bare.sigma2 == inst.sigma2);
  CHECK(bare.bits == inst.bits);
  CHECK(bare.step == inst.step);
  CHECK(bare.seed == inst.seed);
  CHECK(bare.z_true.size() == 0);  // not stored, no matrix to rebuild it

  const gecsr::ProblemInstance full = gecsr::load_instance(path, &a);
  CHECK((full.z_true - inst.z_true).cwiseAbs().maxCoeff() < 1e-12);
  std::remove(path.c_str());
}
