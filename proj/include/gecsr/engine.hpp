#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gecsr/denoisers.hpp"
#include "gecsr/linear_module.hpp"
#include "gecsr/signal_model.hpp"

namespace gecsr {

struct GecConfig {
  int max_iters = 50;
  // Memory on the previous message, blended in natural parameters;
  // 0 keeps the plain schedule.
  double damping = 0.0;
  // Stop once ||x_hat - prev|| / max(1, ||x_hat||) drops below this;
  // <= 0 disables early stopping.
  double convergence_tol = 1e-8;
  bool record_history = true;
};

struct IterationRecord {
  int iter = 0;          // 1-based
  double mse = 0.0;      // against x_true; NaN when no truth was given
  double v_1z = 0.0, v_2z = 0.0, v_1x = 0.0, v_2x = 0.0;
  long clamp_events = 0;  // cumulative
};

// Full message state.  Message subscripts: 1z into the quantization
// denoiser, 2z back to the linear stage, 1x into the prior denoiser, 2x
// back to the linear stage.
struct GecState {
  GaussianMessage msg_1z, msg_2z, msg_1x, msg_2x;
  Eigen::VectorXcd x_hat;
  int iterations = 0;
  bool converged = false;
  long clamp_events = 0;
  std::vector<IterationRecord> history;
};

class DivergedError : public std::runtime_error {
 public:
  DivergedError(const std::string& what, GecState state_in)
      : std::runtime_error(what), state(std::move(state_in)) {}
  GecState state;
};

double mse(const Eigen::VectorXcd& estimate, const Eigen::VectorXcd& truth);
double to_db(double value);

// Flat-start state: zero means with the raw signal and measurement powers
// as variances (P_x = 1 under the unit-power prior, P_z = P_x tr(AA^H)/m).
GecState gec_sr_init(const SensingMatrix& a);

// One sweep: quantization denoiser -> linear stage (x side) -> prior
// denoiser -> linear stage again (z side), each followed by an extrinsic
// step.  The second linear pass reuses the fresh x message; skipping it
// destabilizes the loop.  Throws DivergedError when a non-finite value
// appears.
void gec_sr_step(GecState& state, const SensingMatrix& a,
                 const Eigen::VectorXcd& y_quantized, const Quantizer& q,
                 double sigma2, const BernoulliGaussianPrior& prior,
                 const GecConfig& cfg);

GecState gec_sr_run(const SensingMatrix& a, const Eigen::VectorXcd& y_quantized,
                    const Quantizer& q, double sigma2,
                    const BernoulliGaussianPrior& prior, const GecConfig& cfg,
                    const Eigen::VectorXcd* x_true = nullptr);

}  // namespace gecsr
