#include "gecsr/denoisers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gecsr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt2 = 1.4142135623730950488016887;
constexpr double kSqrt2OverPi = 0.7978845608028653558798921;  // sqrt(2/pi)

// exp(x^2) erfc(x) for x >= 0.
double erfcx(double x) {
  if (x < 26.0) return std::exp(x * x) * std::erfc(x);
  const double iz2 = 1.0 / (2.0 * x * x);
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 8; ++k) {
    term *= -(2 * k - 1) * iz2;
    sum += term;
  }
  return sum / (x * std::sqrt(M_PI));
}

// Moments for a bin lying entirely in the far upper tail (lo > 8), written
// in terms of scaled complementary error functions so nothing underflows no
// matter how far out the bin sits.
ScalarMoments far_tail_moments(double r, double u, double s2, double lo,
                               double hi) {
  const double s = std::sqrt(s2);
  const double el = erfcx(lo / kSqrt2);
  double damp = 0.0, eu = 0.0;
  if (!std::isinf(hi)) {
    damp = std::exp(-0.5 * (hi - lo) * (hi + lo));  // e^{-(hi^2-lo^2)/2}
    eu = erfcx(hi / kSqrt2);
  }
  const double denom = el - damp * eu;
  if (!(denom > 0.0))
    throw DegenerateBinError("bin carries no numerical probability mass");
  // R1 = (phi(lo) - phi(hi)) / p,  T1 = (lo phi(lo) - hi phi(hi)) / p.
  const double r1 = kSqrt2OverPi * (1.0 - damp) / denom;
  const double t1 = kSqrt2OverPi * (lo - (std::isinf(hi) ? 0.0 : hi * damp)) /
                    denom;
  ScalarMoments out;
  out.mean = r + (u / s) * r1;
  out.var = u + (u * u / s2) * (t1 - r1 * r1);
  return out;
}

ScalarMoments moments_impl(double r, double u, const Bin& bin, double c2) {
  const double s2 = u + c2;
  const double s = std::sqrt(s2);
  const double lo = (bin.low - r) / s;
  const double hi = (bin.up - r) / s;
  if (!(hi > lo))
    throw DegenerateBinError("empty quantizer bin");
  if (lo > 8.0) return far_tail_moments(r, u, s2, lo, hi);
  if (hi < -8.0) {
    // Mirror: moments of -X for the reflected bin.
    const Bin flipped{-bin.up, -bin.low};
    ScalarMoments m = far_tail_moments(-r, u, s2, -hi, -lo);
    m.mean = -m.mean;
    return m;
  }
  const double p = bin_prob(bin, r, s2);
  if (!(p > 0.0))
    throw DegenerateBinError("bin carries no numerical probability mass");
  // Long double keeps the T1 - R1^2 cancellation harmless.
  const long double pl = p;
  const long double phi_lo =
      std::isinf(lo) ? 0.0L
                     : expl(-0.5L * static_cast<long double>(lo) * lo) *
                           0.39894228040143267793994606L;
  const long double phi_hi =
      std::isinf(hi) ? 0.0L
                     : expl(-0.5L * static_cast<long double>(hi) * hi) *
                           0.39894228040143267793994606L;
  const long double r1 = (phi_lo - phi_hi) / pl;
  const long double t_lo = std::isinf(lo) ? 0.0L : lo * phi_lo;
  const long double t_hi = std::isinf(hi) ? 0.0L : hi * phi_hi;
  const long double t1 = (t_lo - t_hi) / pl;
  ScalarMoments out;
  out.mean = static_cast<double>(r + (u / s) * r1);
  out.var = static_cast<double>(u + (u * u / s2) * (t1 - r1 * r1));
  return out;
}

}  // namespace

ScalarMoments truncated_gaussian_moments(double r, double u, const Bin& bin,
                                         double c2) {
  if (!(u > 0.0) || !(c2 >= 0.0) || !(u + c2 > 0.0))
    throw std::invalid_argument("variances must be positive");
  return moments_impl(r, u, bin, c2);
}

ComplexMoments bg_posterior(std::complex<double> r, double v, double rho) {
  if (!(v > 0.0)) throw std::invalid_argument("variance must be positive");
  const double r2 = std::norm(r);
  const double slab_var = v + 1.0 / rho;
  // Log odds of the slab against the spike under the observation r.
  const double la = std::log(rho) - std::log(slab_var) - r2 / slab_var;
  const double lb = std::log1p(-rho) - std::log(v) - r2 / v;
  const double c = 1.0 / (1.0 + std::exp(lb - la));
  const double gamma = (1.0 / rho) / slab_var;  // slab shrinkage factor
  ComplexMoments out;
  out.mean = c * gamma * r;
  out.var = c * v * gamma + c * (1.0 - c) * gamma * gamma * r2;
  return out;
}

PosteriorMoments prior_denoise(const GaussianMessage& msg,
                               const BernoulliGaussianPrior& prior) {
  PosteriorMoments post;
  post.mean.resize(msg.mean.size());
  double var_sum = 0.0;
  for (Eigen::Index i = 0; i < msg.mean.size(); ++i) {
    const ComplexMoments m = bg_posterior(msg.mean(i), msg.variance, prior.rho);
    post.mean(i) = m.mean;
    var_sum += m.var;
  }
  post.avg_variance =
      std::max(var_sum / static_cast<double>(msg.mean.size()), 1e-300);
  return post;
}

PosteriorMoments quantized_denoise(const GaussianMessage& msg,
                                   const Eigen::VectorXcd& y_quantized,
                                   const Quantizer& q, double sigma2) {
  if (msg.mean.size() != y_quantized.size())
    throw std::invalid_argument("message/observation size mismatch");
  const double u = 0.5 * msg.variance;  // per real dimension
  const double c2 = 0.5 * sigma2;
  PosteriorMoments post;
  post.mean.resize(msg.mean.size());
  double var_sum = 0.0;
  for (Eigen::Index i = 0; i < msg.mean.size(); ++i) {
    const Bin bin_re = q.bin_of(y_quantized(i).real());
    const Bin bin_im = q.bin_of(y_quantized(i).imag());
    const ScalarMoments re =
        truncated_gaussian_moments(msg.mean(i).real(), u, bin_re, c2);
    const ScalarMoments im =
        truncated_gaussian_moments(msg.mean(i).imag(), u, bin_im, c2);
    post.mean(i) = {re.mean, im.mean};
    var_sum += re.var + im.var;
  }
  post.avg_variance =
      std::max(var_sum / static_cast<double>(msg.mean.size()), 1e-300);
  return post;
}

GaussianMessage extrinsic(const PosteriorMoments& post,
                          const GaussianMessage& incoming,
                          long* clamp_events) {
  const double prec_post = 1.0 / post.avg_variance;
  const double prec_in = 1.0 / incoming.variance;
  const double prec_ext = prec_post - prec_in;
  GaussianMessage out;
  if (!(prec_ext > 1.0 / kVarianceCeiling)) {
    // Posterior no sharper than the input: no extrinsic information.  The
    // natural-parameter ratio degenerates to the posterior mean in the limit.
    out.variance = kVarianceCeiling;
    out.mean = post.mean;
    if (clamp_events) ++*clamp_events;
    return out;
  }
  out.mean = (post.mean * prec_post - incoming.mean * prec_in) / prec_ext;
  out.variance = 1.0 / prec_ext;
  if (out.variance < kVarianceFloor) {
    out.variance = kVarianceFloor;
    if (clamp_events) ++*clamp_events;
  }
  return out;
}

}  // namespace gecsr
