#pragma once

#include <Eigen/Dense>

#include "gecsr/denoisers.hpp"
#include "gecsr/signal_model.hpp"

namespace gecsr {

// Joint Gaussian posterior of (x, z = A x) given the two incoming beliefs,
// with componentwise variances averaged into scalars.
struct LinearPosterior {
  Eigen::VectorXcd x_mean;
  double x_avg_var = 0.0;
  Eigen::VectorXcd z_mean;
  double z_avg_var = 0.0;
};

// Direct evaluation: one Hermitian solve against I/v_x + A^H A / v_z.
LinearPosterior linear_estimate_dense(const SensingMatrix& a,
                                      const GaussianMessage& msg_x,
                                      const GaussianMessage& msg_z);

// Same posterior through the cached singular-value decomposition: O(mn)
// per call instead of a fresh n^3 solve.
LinearPosterior linear_estimate_svd(const SensingMatrix& a,
                                    const GaussianMessage& msg_x,
                                    const GaussianMessage& msg_z);

// Same posterior for row-selected unitary DFT operators: two FFTs per call.
LinearPosterior linear_estimate_dft(const SensingMatrix& a,
                                    const GaussianMessage& msg_x,
                                    const GaussianMessage& msg_z);

// Picks the cheapest applicable path (dft, then svd cache, then dense).
LinearPosterior linear_estimate(const SensingMatrix& a,
                                const GaussianMessage& msg_x,
                                const GaussianMessage& msg_z);

}  // namespace gecsr
