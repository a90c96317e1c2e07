#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "gecsr/linear_module.hpp"
#include "gecsr/rng.hpp"
#include "oracle_utils.hpp"

using gecsr::GaussianMessage;
using gecsr::LinearPosterior;
using gecsr::Rng;
using gecsr::SensingMatrix;
using oracle::rel_err;

namespace {

Eigen::VectorXcd random_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.complex_gaussian();
  return v;
}

GaussianMessage message(Eigen::VectorXcd mean, double variance) {
  GaussianMessage m;
  m.mean = std::move(mean);
  m.variance = variance;
  return m;
}

// Textbook joint-Gaussian conditioning with an explicit matrix inverse:
// the covariance route the production paths avoid.
LinearPosterior brute_force(const Eigen::MatrixXcd& a,
                            const GaussianMessage& mx,
                            const GaussianMessage& mz) {
  const Eigen::Index n = a.cols(), m = a.rows();
  const Eigen::MatrixXcd h =
      Eigen::MatrixXcd::Identity(n, n) / mx.variance +
      a.adjoint() * a / mz.variance;
  const Eigen::MatrixXcd cov = h.inverse();
  LinearPosterior out;
  out.x_mean = cov * (mx.mean / mx.variance + a.adjoint() * mz.mean / mz.variance);
  out.x_avg_var = cov.trace().real() / static_cast<double>(n);
  out.z_mean = a * out.x_mean;
  out.z_avg_var =
      (a * cov * a.adjoint()).trace().real() / static_cast<double>(m);
  return out;
}

void expect_same(const LinearPosterior& got, const LinearPosterior& want,
                 double tol_mean, double tol_var) {
  const double xs = want.x_mean.cwiseAbs().maxCoeff() + 1.0;
  const double zs = want.z_mean.cwiseAbs().maxCoeff() + 1.0;
  CHECK((got.x_mean - want.x_mean).cwiseAbs().maxCoeff() / xs < tol_mean);
  CHECK((got.z_mean - want.z_mean).cwiseAbs().maxCoeff() / zs < tol_mean);
  CHECK(rel_err(got.x_avg_var, want.x_avg_var) < tol_var);
  CHECK(rel_err(got.z_avg_var, want.z_avg_var) < tol_var);
}

}  // namespace

TEST_CASE("direct path reproduces explicit-covariance conditioning") {
  Rng rng(17);
  for (auto [n, m] : {std::pair<int, int>{6, 4}, {5, 5}, {4, 7}}) {
    Eigen::MatrixXcd entries(m, n);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        entries(i, j) = rng.complex_gaussian() / std::sqrt(double(n));
    SensingMatrix a = SensingMatrix::dense(entries);

    for (auto [vx, vz] : {std::pair<double, double>{1.0, 0.5},
                          {1e-3, 2.0},
                          {5.0, 1e-4}}) {
      const GaussianMessage mx = message(random_vector(n, rng), vx);
      const GaussianMessage mz = message(random_vector(m, rng), vz);
      const LinearPosterior got = gecsr::linear_estimate_dense(a, mx, mz);
      const LinearPosterior want = brute_force(entries, mx, mz);
      expect_same(got, want, 1e-11, 1e-11);

      // The posterior can only sharpen the x-side belief.
      CHECK(got.x_avg_var > 0.0);
      CHECK(got.x_avg_var < vx * (1.0 + 1e-12));
      CHECK(got.z_avg_var > 0.0);
    }
  }
}

TEST_CASE("factored path equals the direct one") {
  Rng rng(23);
  for (auto [n, m] : {std::pair<int, int>{12, 8}, {9, 9}, {6, 10}}) {
    Eigen::VectorXd sv(std::min(n, m));
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      sv(i) = 0.25 + 3.0 * rng.uniform01();
    SensingMatrix a = gecsr::make_svd_matrix(
        static_cast<std::size_t>(n), static_cast<std::size_t>(m), sv, rng);
    REQUIRE(a.has_svd());

    for (auto [vx, vz] : {std::pair<double, double>{0.7, 0.3},
                          {1e-4, 10.0},
                          {20.0, 1e-3}}) {
      const GaussianMessage mx = message(random_vector(n, rng), vx);
      const GaussianMessage mz = message(random_vector(m, rng), vz);
      const LinearPosterior fast = gecsr::linear_estimate_svd(a, mx, mz);
      const LinearPosterior direct = gecsr::linear_estimate_dense(a, mx, mz);
      expect_same(fast, direct, 1e-10, 1e-11);
    }
  }
}

TEST_CASE("transform path equals the direct one on selected-row operators") {
  Rng rng(29);
  for (std::size_t n : {16u, 64u}) {
    SensingMatrix fft = gecsr::make_partial_dft(n, (n * 3) / 4, rng);
    SensingMatrix dense = SensingMatrix::dense(fft.materialize());

    for (auto [vx, vz] : {std::pair<double, double>{1.0, 0.2},
                          {3e-3, 5.0},
                          {40.0, 7e-4}}) {
      const GaussianMessage mx =
          message(random_vector(static_cast<Eigen::Index>(n), rng), vx);
      const GaussianMessage mz = message(
          random_vector(static_cast<Eigen::Index>(fft.rows()), rng), vz);
      const LinearPosterior fast = gecsr::linear_estimate_dft(fft, mx, mz);
      const LinearPosterior direct = gecsr::linear_estimate_dense(dense, mx, mz);
      expect_same(fast, direct, 1e-10, 1e-11);
    }
  }
}

TEST_CASE("dispatcher picks an equivalent route for every kind") {
  Rng rng(31);

  // Selected-row transform: dispatcher must agree with the transform path.
  SensingMatrix fft = gecsr::make_partial_dft(32, 20, rng);
  GaussianMessage mx = message(random_vector(32, rng), 0.8);
  GaussianMessage mz = message(random_vector(20, rng), 0.4);
  expect_same(gecsr::linear_estimate(fft, mx, mz),
              gecsr::linear_estimate_dft(fft, mx, mz), 1e-14, 1e-14);

  // Cached factorization.
  Eigen::VectorXd sv(6);
  sv << 1.0, 1.0, 2.0, 2.0, 3.0, 3.0;
  SensingMatrix svd = gecsr::make_svd_matrix(10, 6, sv, rng);
  mx = message(random_vector(10, rng), 1.2);
  mz = message(random_vector(6, rng), 0.6);
  expect_same(gecsr::linear_estimate(svd, mx, mz),
              gecsr::linear_estimate_svd(svd, mx, mz), 1e-14, 1e-14);

  // Plain dense falls back to the direct solve.
  SensingMatrix plain = SensingMatrix::dense(svd.entries());
  expect_same(gecsr::linear_estimate(plain, mx, mz),
              gecsr::linear_estimate_dense(plain, mx, mz), 1e-14, 1e-14);
}

TEST_CASE("shape mismatches are rejected") {
  Rng rng(37);
  SensingMatrix a = gecsr::make_partial_dft(16, 8, rng);
  const GaussianMessage good_x = message(random_vector(16, rng), 1.0);
  const GaussianMessage good_z = message(random_vector(8, rng), 1.0);
  const GaussianMessage bad_x = message(random_vector(15, rng), 1.0);
  const GaussianMessage bad_v = message(random_vector(16, rng), -1.0);
  CHECK_NOTHROW(gecsr::linear_estimate(a, good_x, good_z));
  CHECK_THROWS_AS(gecsr::linear_estimate(a, bad_x, good_z),
                  std::invalid_argument);
  CHECK_THROWS_AS(gecsr::linear_estimate(a, bad_v, good_z),
                  std::invalid_argument);
}
