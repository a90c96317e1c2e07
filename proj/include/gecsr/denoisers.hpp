#pragma once

#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "gecsr/scalar_math.hpp"
#include "gecsr/signal_model.hpp"

namespace gecsr {

// Variance clamp window for extrinsic messages.
inline constexpr double kVarianceFloor = 1e-11;
inline constexpr double kVarianceCeiling = 1e11;

// Gaussian belief about a vector: per-entry means, one shared variance
// (component variances are averaged wherever they arise).
struct GaussianMessage {
  Eigen::VectorXcd mean;
  double variance = 0.0;
};

struct PosteriorMoments {
  Eigen::VectorXcd mean;
  double avg_variance = 0.0;
};

// A quantizer cell carrying zero probability mass under the incoming belief
// (numerically), so posterior moments are undefined.
struct DegenerateBinError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScalarMoments {
  double mean = 0.0;
  double var = 0.0;
};

struct ComplexMoments {
  std::complex<double> mean;
  double var = 0.0;
};

// Posterior mean/variance of a real scalar with prior N(r, u) observed to lie
// in the given bin through additive N(0, c2) noise.
ScalarMoments truncated_gaussian_moments(double r, double u, const Bin& bin,
                                         double c2);

// Posterior under the sparse prior for one entry, from the pseudo-observation
// r = x + CN(0, v).
ComplexMoments bg_posterior(std::complex<double> r, double v, double rho);

// Entrywise sparse-prior denoiser; variance is the component average.
PosteriorMoments prior_denoise(const GaussianMessage& msg,
                               const BernoulliGaussianPrior& prior);

// Componentwise quantization-channel denoiser: real and imaginary parts are
// handled as independent real problems with half the complex variances.
PosteriorMoments quantized_denoise(const GaussianMessage& msg,
                                   const Eigen::VectorXcd& y_quantized,
                                   const Quantizer& q, double sigma2);

// Extrinsic message: subtract the incoming belief from the posterior in
// natural parameters.  Precisions at or below 1/kVarianceCeiling clamp to the
// ceiling (mean falls back to the posterior mean, its limit there); variances
// below kVarianceFloor clamp to the floor.  Each clamped call bumps the
// counter once.
GaussianMessage extrinsic(const PosteriorMoments& post,
                          const GaussianMessage& incoming,
                          long* clamp_events = nullptr);

}  // namespace gecsr
