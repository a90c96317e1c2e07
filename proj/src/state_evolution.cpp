#include "gecsr/state_evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gecsr/denoisers.hpp"

namespace gecsr {

Spectrum spectrum_of(const SensingMatrix& a) {
  Spectrum s;
  s.eigenvalues = a.spectrum();
  s.alpha = static_cast<double>(a.rows()) / static_cast<double>(a.cols());
  return s;
}

namespace {

double clamp_variance(double v) {
  if (!(v > 0.0) || v > kVarianceCeiling) return kVarianceCeiling;
  return std::max(v, kVarianceFloor);
}

// J = (1/a^2) int_0^inf s e^{-s/a} / (1 + (rho/c) e^s) ds with
// c = (1-rho)(1+a): the logistic factor switches off at s0 = log(c/rho).
double mmse_knee_integral(double a, double rho, double c,
                          const QuadratureRule& laguerre) {
  const double s0 = std::log(c / rho);
  double integral = 0.0;
  if (s0 > 0.0) {
    // Head [0, s0]: smooth ramp, Legendre after an affine map.
    const QuadratureRule leg = gauss_legendre(laguerre.size());
    for (std::size_t i = 0; i < leg.size(); ++i) {
      const double s = 0.5 * s0 * (leg.nodes[i] + 1.0);
      const double f =
          s * std::exp(-s / a) / (1.0 + std::exp(s - s0));
      integral += 0.5 * s0 * leg.weights[i] * f;
    }
    // Tail [s0, inf): shift u = s - s0 and absorb e^{-u} into the weight.
    const double head = std::exp(-s0 / a);
    for (std::size_t i = 0; i < laguerre.size(); ++i) {
      const double u = laguerre.nodes[i];
      const double f = (s0 + u) * std::exp(-u / a) / (1.0 + std::exp(-u));
      integral += head * laguerre.weights[i] * f;
    }
  } else {
    // No interior knee: the integrand already decays like the weight.
    const double ratio = rho / c;  // >= 1 here
    for (std::size_t i = 0; i < laguerre.size(); ++i) {
      const double s = laguerre.nodes[i];
      const double f = s * std::exp(-s / a) / (std::exp(-s) + ratio);
      integral += laguerre.weights[i] * f;
    }
  }
  return integral / (a * a);
}

}  // namespace

double mmse_bg(double eta, double rho, std::size_t quad_order) {
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
  if (!(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("rho must lie in (0, 1]");
  if (eta == 0.0) return 1.0;
  if (rho == 1.0) return 1.0 / (1.0 + eta);  // plain Gaussian signal
  const double a = eta / rho;
  const QuadratureRule laguerre = gauss_laguerre(quad_order);
  if (a <= 0.5) {
    // Direct form: mmse = 1 - (eta/(1+a)) int e^{-t} t / (rho + c e^{-a t}).
    // Its integrand has complex poles pi/a off the axis, so the Laguerre
    // rule is only reliable while a stays small.
    const double c = (1.0 - rho) * (1.0 + a);
    double integral = 0.0;
    for (std::size_t i = 0; i < laguerre.size(); ++i) {
      const double t = laguerre.nodes[i];
      integral += laguerre.weights[i] * t / (rho + c * std::exp(-a * t));
    }
    return 1.0 - eta / (1.0 + a) * integral;
  }
  // Exact rewrite mmse = (1 + a J)/(1 + a): splitting J at the knee pins the
  // nearest singularities at a fixed distance pi regardless of a, so both
  // sub-rules stay at machine precision for every a above the crossover.
  const double c = (1.0 - rho) * (1.0 + a);
  const double j = mmse_knee_integral(a, rho, c, laguerre);
  return (1.0 + a * j) / (1.0 + a);
}

namespace {

// (d Psi / d mean)^2 / Psi for one cell, driven into the log domain when the
// cell sits out in a tail (where the ratio decays to zero).
double fisher_cell_term(const Bin& bin, double mean, double c2) {
  const double c = std::sqrt(c2);
  const double lo = (bin.low - mean) / c;
  const double hi = (bin.up - mean) / c;
  if (lo <= 8.0 && hi >= -8.0) {
    const double p = bin_prob(bin, mean, c2);
    if (!(p > 0.0)) return 0.0;
    const double d = bin_prob_deriv(bin, mean, c2);
    return d * d / p;
  }
  const double lp = log_bin_prob(bin, mean, c2);
  if (lp == -std::numeric_limits<double>::infinity()) return 0.0;
  const LogAbsDeriv ld = log_bin_prob_deriv(bin, mean, c2);
  if (ld.sign == 0) return 0.0;
  return std::exp(2.0 * ld.log_abs - lp);
}

}  // namespace

double fisher_quantized(double eta_z, double p_z, double sigma2,
                        const Quantizer& q, std::size_t quad_order) {
  if (!(eta_z >= 0.0) || eta_z > p_z)
    throw std::invalid_argument("need 0 <= eta_z <= p_z");
  const double c2 = 0.5 * (sigma2 + p_z - eta_z);  // per real dimension
  if (!(c2 > 0.0)) throw std::invalid_argument("degenerate channel variance");
  const double scale = std::sqrt(0.5 * eta_z);
  const QuadratureRule hermite = gauss_hermite(quad_order);
  const std::vector<double> levels = q.codebook();
  std::vector<Bin> bins;
  bins.reserve(levels.size());
  for (double y : levels) bins.push_back(q.bin_of(y));
  double total = 0.0;
  for (std::size_t i = 0; i < hermite.size(); ++i) {
    const double mean = scale * hermite.nodes[i];
    double node_sum = 0.0;
    for (const Bin& bin : bins) node_sum += fisher_cell_term(bin, mean, c2);
    total += hermite.weights[i] * node_sum;
  }
  return total;
}

double spectral_eta_z_tilde(double v_x, double v_z, const Spectrum& s) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j)
    sum += 1.0 / (v_z + s.eigenvalues(j) * v_x);
  return sum / static_cast<double>(s.eigenvalues.size());
}

double spectral_eta_x_tilde(double v_x, double v_z, const Spectrum& s,
                            double p_x) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j)
    sum += 1.0 / (1.0 / v_x + s.eigenvalues(j) / v_z);
  const double avg = sum / static_cast<double>(s.eigenvalues.size());
  const double posterior_var = (1.0 - s.alpha) * v_x + s.alpha * avg;
  return p_x - posterior_var;
}

namespace {

void check_finite(const SeState& st, std::vector<SeState>& traj,
                  const char* where) {
  if (std::isfinite(st.v_x) && std::isfinite(st.v_z) &&
      std::isfinite(st.eta_x) && std::isfinite(st.eta_z) &&
      std::isfinite(st.mse))
    return;
  throw SeDivergedError(std::string("non-finite state in ") + where,
                        std::move(traj));
}

}  // namespace

std::vector<SeState> se_run(const Spectrum& s, double rho, double sigma2,
                            const Quantizer& q, double p_x, int iters,
                            std::size_t quad_order) {
  if (s.eigenvalues.size() == 0 || !(s.alpha > 0.0))
    throw std::invalid_argument("empty spectrum");
  const double p_z = p_x * s.eigenvalues.mean();
  std::vector<SeState> traj;
  traj.reserve(static_cast<std::size_t>(iters));
  double v_x = p_x;
  double eta_z = 0.0;
  for (int t = 0; t < iters; ++t) {
    SeState st;
    st.iter = t + 1;
    // The channel integral is per real dimension; the complex-variance
    // bookkeeping uses half of it (one complex observation = two real ones
    // of twice the precision scale).
    st.eta_tilde_z =
        0.5 * fisher_quantized(eta_z, p_z, sigma2, q, quad_order);
    const double v_z =
        clamp_variance(1.0 / st.eta_tilde_z - (p_z - eta_z));
    st.v_z = v_z;
    st.eta_tilde_x = spectral_eta_x_tilde(v_x, v_z, s, p_x);
    st.eta_x = 1.0 / (p_x - st.eta_tilde_x) - 1.0 / v_x;
    st.eta_x = std::clamp(st.eta_x, 1.0 / kVarianceCeiling,
                          1.0 / kVarianceFloor);
    st.mse = mmse_bg(st.eta_x, rho, quad_order);
    st.mse_db = 10.0 * std::log10(st.mse);
    v_x = clamp_variance(1.0 / (1.0 / st.mse - st.eta_x));
    st.v_x = v_x;
    const double etz = spectral_eta_z_tilde(v_x, v_z, s);
    eta_z = p_z - clamp_variance(1.0 / etz - v_z);
    st.eta_z = eta_z;
    check_finite(st, traj, "se_run");
    traj.push_back(st);
  }
  return traj;
}

std::vector<SeState> se_run_row_orthogonal(double alpha, double rho,
                                           double sigma2, const Quantizer& q,
                                           double p_x, int iters,
                                           std::size_t quad_order) {
  if (!(alpha > 0.0) || alpha > 1.0)
    throw std::invalid_argument("row-orthogonal form needs 0 < alpha <= 1");
  const double p_z = p_x;  // orthonormal rows preserve the power
  std::vector<SeState> traj;
  traj.reserve(static_cast<std::size_t>(iters));
  double v_x = p_x;
  for (int t = 0; t < iters; ++t) {
    SeState st;
    st.iter = t + 1;
    const double eta_z = p_z - v_x;
    st.eta_tilde_z =
        0.5 * fisher_quantized(eta_z, p_z, sigma2, q, quad_order);
    st.v_z = clamp_variance(1.0 / st.eta_tilde_z - v_x);
    st.eta_x = 1.0 / (1.0 / (alpha * st.eta_tilde_z) - v_x);
    st.eta_x = std::clamp(st.eta_x, 1.0 / kVarianceCeiling,
                          1.0 / kVarianceFloor);
    st.eta_tilde_x = p_x - 1.0 / (st.eta_x + 1.0 / v_x);
    st.mse = mmse_bg(st.eta_x, rho, quad_order);
    st.mse_db = 10.0 * std::log10(st.mse);
    v_x = clamp_variance(1.0 / (1.0 / st.mse - st.eta_x));
    st.v_x = v_x;
    st.eta_z = p_z - v_x;
    check_finite(st, traj, "se_run_row_orthogonal");
    traj.push_back(st);
  }
  return traj;
}

}  // namespace gecsr
