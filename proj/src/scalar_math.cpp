#include "gecsr/scalar_math.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace gecsr {

namespace {

constexpr double kLogSqrt2Pi = 0.9189385332046727417803297;  // log sqrt(2 pi)
constexpr double kSqrt2 = 1.4142135623730950488016887;
constexpr double kInf = std::numeric_limits<double>::infinity();

// exp(z^2) erfc(z) for large positive z, via the asymptotic series
// 1/(z sqrt(pi)) * (1 - 1/(2z^2) + 3/(2z^2)^2 * 1*3/2... ).  Accurate to
// full double precision for z >= 26 (eight terms suffice there).
double erfcx_asymptotic(double z) {
  const double iz2 = 1.0 / (2.0 * z * z);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2 * k - 1) * iz2;
    sum += term;
  }
  return sum / (z * std::sqrt(M_PI));
}

}  // namespace

double norm_pdf(double z) {
  return std::exp(-0.5 * z * z - kLogSqrt2Pi);
}

double norm_cdf(double z) {
  // 0.5 erfc(-z/sqrt2): keeps full relative accuracy in the lower tail,
  // unlike 0.5 (1 + erf(...)).
  return 0.5 * std::erfc(-z / kSqrt2);
}

double log_norm_cdf(double z) {
  if (z >= -1.0) return std::log(norm_cdf(z));
  const double a = -z / kSqrt2;
  if (a < 26.0) return std::log(0.5 * std::erfc(a));  // erfc still normal here
  // erfc underflows around a ~ 27: switch to log(0.5 erfcx(a)) - a^2.
  return std::log(0.5 * erfcx_asymptotic(a)) - a * a;
}

double bin_prob(const Bin& bin, double z, double c2) {
  const double c = std::sqrt(c2);
  const double a = (bin.low - z) / c;
  const double b = (bin.up - z) / c;
  if (a >= 6.0 || b <= -6.0) return std::exp(log_bin_prob(bin, z, c2));
  if (a >= 0.0) {
    // Both edges in the upper half: difference of upper-tail masses.
    return 0.5 * (std::erfc(a / kSqrt2) - std::erfc(b / kSqrt2));
  }
  if (b <= 0.0) {
    return 0.5 * (std::erfc(-b / kSqrt2) - std::erfc(-a / kSqrt2));
  }
  return norm_cdf(b) - norm_cdf(a);  // straddles z: no cancellation
}

double log_bin_prob(const Bin& bin, double z, double c2) {
  const double c = std::sqrt(c2);
  const double a = (bin.low - z) / c;
  const double b = (bin.up - z) / c;
  if (a >= 0.0) {
    // log(Q(a) - Q(b)) with Q the upper tail, via log Phi(-a) > log Phi(-b).
    const double la = log_norm_cdf(-a);
    const double lb = log_norm_cdf(-b);
    if (la == -kInf) return -kInf;
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0) {
    const double la = log_norm_cdf(b);
    const double lb = log_norm_cdf(a);
    if (la == -kInf) return -kInf;
    return la + std::log1p(-std::exp(lb - la));
  }
  return std::log(norm_cdf(b) - norm_cdf(a));
}

double bin_prob_deriv(const Bin& bin, double z, double c2) {
  const double c = std::sqrt(c2);
  const double a = (bin.low - z) / c;
  const double b = (bin.up - z) / c;
  const double pa = std::isinf(a) ? 0.0 : norm_pdf(a);
  const double pb = std::isinf(b) ? 0.0 : norm_pdf(b);
  return (pa - pb) / c;
}

LogAbsDeriv log_bin_prob_deriv(const Bin& bin, double z, double c2) {
  const double c = std::sqrt(c2);
  const double a = (bin.low - z) / c;
  const double b = (bin.up - z) / c;
  const double la = std::isinf(a) ? -kInf : -0.5 * a * a - kLogSqrt2Pi;
  const double lb = std::isinf(b) ? -kInf : -0.5 * b * b - kLogSqrt2Pi;
  const double lc = std::log(c);
  if (la == lb) return {-kInf, 0};
  if (la > lb) return {la + std::log1p(-std::exp(lb - la)) - lc, +1};
  return {lb + std::log1p(-std::exp(la - lb)) - lc, -1};
}

namespace {

// Nodes/weights from the Jacobi matrix of the orthogonal-polynomial
// recurrence: eigenvalues are the nodes, mu0 * v0^2 the weights.
QuadratureRule golub_welsch(QuadratureKind kind, const Eigen::VectorXd& diag,
                            const Eigen::VectorXd& subdiag, double mu0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, subdiag);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("quadrature eigensolve failed");
  const auto n = static_cast<std::size_t>(diag.size());
  QuadratureRule rule{kind, std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
    const double v0 = es.eigenvectors()(0, static_cast<Eigen::Index>(i));
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

void check_order(std::size_t n) {
  if (n == 0) throw std::invalid_argument("quadrature order must be positive");
}

}  // namespace

QuadratureRule gauss_hermite(std::size_t n) {
  check_order(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
  for (std::size_t k = 1; k < n; ++k)
    sub(static_cast<Eigen::Index>(k - 1)) = std::sqrt(static_cast<double>(k));
  return golub_welsch(QuadratureKind::GaussHermiteProbabilist, diag, sub, 1.0);
}

QuadratureRule gauss_laguerre(std::size_t n) {
  check_order(n);
  Eigen::VectorXd diag(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
  for (std::size_t k = 0; k < n; ++k)
    diag(static_cast<Eigen::Index>(k)) = 2.0 * static_cast<double>(k) + 1.0;
  for (std::size_t k = 1; k < n; ++k)
    sub(static_cast<Eigen::Index>(k - 1)) = static_cast<double>(k);
  return golub_welsch(QuadratureKind::GaussLaguerre, diag, sub, 1.0);
}

QuadratureRule gauss_legendre(std::size_t n) {
  check_order(n);
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd sub(static_cast<Eigen::Index>(n > 1 ? n - 1 : 0));
  for (std::size_t k = 1; k < n; ++k) {
    const double kk = static_cast<double>(k);
    sub(static_cast<Eigen::Index>(k - 1)) =
        kk / std::sqrt(4.0 * kk * kk - 1.0);
  }
  return golub_welsch(QuadratureKind::GaussLegendre, diag, sub, 2.0);
}

}  // namespace gecsr
