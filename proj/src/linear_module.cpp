#include "gecsr/linear_module.hpp"

#include <cmath>
#include <stdexcept>

namespace gecsr {

namespace {

void check_messages(const SensingMatrix& a, const GaussianMessage& msg_x,
                    const GaussianMessage& msg_z) {
  if (static_cast<std::size_t>(msg_x.mean.size()) != a.cols() ||
      static_cast<std::size_t>(msg_z.mean.size()) != a.rows())
    throw std::invalid_argument("message sizes do not match the matrix");
  if (!(msg_x.variance > 0.0) || !(msg_z.variance > 0.0))
    throw std::invalid_argument("message variances must be positive");
}

}  // namespace

LinearPosterior linear_estimate_dense(const SensingMatrix& a,
                                      const GaussianMessage& msg_x,
                                      const GaussianMessage& msg_z) {
  check_messages(a, msg_x, msg_z);
  const double vx = msg_x.variance, vz = msg_z.variance;
  const Eigen::MatrixXcd& mat = a.entries();
  const Eigen::Index n = mat.cols(), m = mat.rows();
  const Eigen::MatrixXcd gram = mat.adjoint() * mat;
  Eigen::MatrixXcd h = gram / vz;
  h.diagonal().array() += 1.0 / vx;
  const Eigen::LLT<Eigen::MatrixXcd> llt(h);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("linear solve failed");
  const Eigen::MatrixXcd cov =
      llt.solve(Eigen::MatrixXcd::Identity(n, n));
  LinearPosterior post;
  post.x_mean =
      llt.solve((msg_x.mean / vx + mat.adjoint() * msg_z.mean / vz).eval());
  post.z_mean = mat * post.x_mean;
  post.x_avg_var = cov.trace().real() / static_cast<double>(n);
  post.z_avg_var = cov.cwiseProduct(gram.conjugate()).sum().real() /
                   static_cast<double>(m);
  return post;
}

LinearPosterior linear_estimate_svd(const SensingMatrix& a,
                                    const GaussianMessage& msg_x,
                                    const GaussianMessage& msg_z) {
  check_messages(a, msg_x, msg_z);
  if (!a.has_svd())
    throw std::logic_error("singular-value cache required");
  const double vx = msg_x.variance, vz = msg_z.variance;
  const Eigen::MatrixXcd& u = a.svd_u();
  const Eigen::MatrixXcd& v = a.svd_v();
  const Eigen::VectorXd& d = a.singular_values();
  const Eigen::Index r = d.size();
  const Eigen::Index n = v.rows(), m = u.rows();

  Eigen::VectorXd g(r);
  for (Eigen::Index j = 0; j < r; ++j)
    g(j) = 1.0 / (1.0 / vx + d(j) * d(j) / vz);

  const Eigen::VectorXcd b = v.adjoint() * msg_x.mean;
  const Eigen::VectorXcd c = u.adjoint() * msg_z.mean;
  Eigen::VectorXcd t(r), dt(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    t(j) = g(j) * (b(j) / vx + d(j) * c(j) / vz);
    dt(j) = d(j) * t(j);
  }
  LinearPosterior post;
  post.x_mean = v * t + (msg_x.mean - v * b);
  post.z_mean = u * dt;
  post.x_avg_var =
      (g.sum() + static_cast<double>(n - r) * vx) / static_cast<double>(n);
  post.z_avg_var =
      (d.array() * d.array() * g.array()).sum() / static_cast<double>(m);
  return post;
}

LinearPosterior linear_estimate_dft(const SensingMatrix& a,
                                    const GaussianMessage& msg_x,
                                    const GaussianMessage& msg_z) {
  check_messages(a, msg_x, msg_z);
  if (a.kind() != SensingMatrix::Kind::PartialDft)
    throw std::logic_error("dft path requires a partial-DFT matrix");
  const double vx = msg_x.variance, vz = msg_z.variance;
  const double g1 = 1.0 / (1.0 / vx + 1.0 / vz);
  const Eigen::Index n = static_cast<Eigen::Index>(a.cols());
  const Eigen::Index m = static_cast<Eigen::Index>(a.rows());
  const std::vector<std::size_t>& rows = a.dft_rows();

  // In the transform domain the posterior is diagonal: selected coordinates
  // blend the two beliefs, unselected ones keep the x belief untouched.
  Eigen::VectorXcd w = a.unitary_dft(msg_x.mean);
  LinearPosterior post;
  post.z_mean.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index k = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(j)]);
    w(k) = g1 * (w(k) / vx + msg_z.mean(j) / vz);
    post.z_mean(j) = w(k);
  }
  post.x_mean = a.unitary_idft(w);
  post.x_avg_var = (static_cast<double>(m) * g1 +
                    static_cast<double>(n - m) * vx) /
                   static_cast<double>(n);
  post.z_avg_var = g1;
  return post;
}

LinearPosterior linear_estimate(const SensingMatrix& a,
                                const GaussianMessage& msg_x,
                                const GaussianMessage& msg_z) {
  if (a.kind() == SensingMatrix::Kind::PartialDft)
    return linear_estimate_dft(a, msg_x, msg_z);
  if (a.has_svd()) return linear_estimate_svd(a, msg_x, msg_z);
  return linear_estimate_dense(a, msg_x, msg_z);
}

}  // namespace gecsr
