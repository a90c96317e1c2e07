#include "gecsr/engine.hpp"

#include <cmath>
#include <limits>

namespace gecsr {

double mse(const Eigen::VectorXcd& estimate, const Eigen::VectorXcd& truth) {
  if (estimate.size() != truth.size())
    throw std::invalid_argument("mse: size mismatch");
  return (estimate - truth).squaredNorm() /
         static_cast<double>(estimate.size());
}

double to_db(double value) { return 10.0 * std::log10(value); }

GecState gec_sr_init(const SensingMatrix& a) {
  GecState s;
  const double p_x = 1.0;  // unit-power prior
  s.msg_2x.mean = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(a.cols()));
  s.msg_2x.variance = p_x;
  s.msg_1z.mean = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(a.rows()));
  s.msg_1z.variance = a.p_z(p_x);
  return s;
}

namespace {

bool message_finite(const GaussianMessage& msg) {
  return std::isfinite(msg.variance) && msg.mean.allFinite();
}

// Blend toward the previous message in natural parameters.  Both variances
// sit inside the clamp window, so the blended precision does too.
GaussianMessage damp(const GaussianMessage& fresh, const GaussianMessage& prev,
                     double beta) {
  if (beta <= 0.0 || prev.mean.size() == 0) return fresh;
  const double prec_new = 1.0 / fresh.variance;
  const double prec_old = 1.0 / prev.variance;
  const double prec = (1.0 - beta) * prec_new + beta * prec_old;
  GaussianMessage out;
  out.variance = 1.0 / prec;
  out.mean = ((1.0 - beta) * prec_new * fresh.mean +
              beta * prec_old * prev.mean) /
             prec;
  return out;
}

}  // namespace

void gec_sr_step(GecState& state, const SensingMatrix& a,
                 const Eigen::VectorXcd& y_quantized, const Quantizer& q,
                 double sigma2, const BernoulliGaussianPrior& prior,
                 const GecConfig& cfg) {
  const double beta = cfg.damping;

  // Quantization channel, then its news for the linear stage.
  const PosteriorMoments post_z =
      quantized_denoise(state.msg_1z, y_quantized, q, sigma2);
  state.msg_2z = damp(extrinsic(post_z, state.msg_1z, &state.clamp_events),
                      state.msg_2z, beta);

  // Linear stage, x side.
  const LinearPosterior lin = linear_estimate(a, state.msg_2x, state.msg_2z);
  state.msg_1x = damp(extrinsic({lin.x_mean, lin.x_avg_var}, state.msg_2x,
                                &state.clamp_events),
                      state.msg_1x, beta);

  // Prior denoiser; its posterior mean is the running estimate.
  const PosteriorMoments post_x = prior_denoise(state.msg_1x, prior);
  state.x_hat = post_x.mean;
  state.msg_2x = damp(extrinsic(post_x, state.msg_1x, &state.clamp_events),
                      state.msg_2x, beta);

  // Linear stage again with the fresh x message, feeding the z side.
  const LinearPosterior lin2 = linear_estimate(a, state.msg_2x, state.msg_2z);
  state.msg_1z = damp(extrinsic({lin2.z_mean, lin2.z_avg_var}, state.msg_2z,
                                &state.clamp_events),
                      state.msg_1z, beta);

  ++state.iterations;

  if (!message_finite(state.msg_2z) || !message_finite(state.msg_1x) ||
      !message_finite(state.msg_2x) || !message_finite(state.msg_1z) ||
      !state.x_hat.allFinite())
    throw DivergedError("non-finite message after iteration " +
                            std::to_string(state.iterations),
                        state);
}

GecState gec_sr_run(const SensingMatrix& a, const Eigen::VectorXcd& y_quantized,
                    const Quantizer& q, double sigma2,
                    const BernoulliGaussianPrior& prior, const GecConfig& cfg,
                    const Eigen::VectorXcd* x_true) {
  if (static_cast<std::size_t>(y_quantized.size()) != a.rows())
    throw std::invalid_argument("observation length does not match the matrix");
  if (cfg.max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  GecState state = gec_sr_init(a);
  Eigen::VectorXcd prev_x_hat;
  for (int t = 0; t < cfg.max_iters; ++t) {
    gec_sr_step(state, a, y_quantized, q, sigma2, prior, cfg);
    if (cfg.record_history) {
      IterationRecord rec;
      rec.iter = state.iterations;
      rec.mse = x_true ? mse(state.x_hat, *x_true)
                       : std::numeric_limits<double>::quiet_NaN();
      rec.v_1z = state.msg_1z.variance;
      rec.v_2z = state.msg_2z.variance;
      rec.v_1x = state.msg_1x.variance;
      rec.v_2x = state.msg_2x.variance;
      rec.clamp_events = state.clamp_events;
      state.history.push_back(rec);
    }
    if (cfg.convergence_tol > 0.0 && prev_x_hat.size() == state.x_hat.size()) {
      const double delta = (state.x_hat - prev_x_hat).norm() /
                           std::max(1.0, state.x_hat.norm());
      if (delta <= cfg.convergence_tol) {
        state.converged = true;
        break;
      }
    }
    prev_x_hat = state.x_hat;
  }
  return state;
}

}  // namespace gecsr
