#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gecsr/scalar_math.hpp"
#include "gecsr/signal_model.hpp"

namespace gecsr {

// Eigenvalue profile of A A^H (length = measurement count) plus the
// measurement ratio alpha = m/n.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  double alpha = 0.0;
};

Spectrum spectrum_of(const SensingMatrix& a);

// Deterministic per-iteration prediction of the recovery error.
struct SeState {
  int iter = 0;
  double eta_z = 0.0, eta_tilde_z = 0.0;
  double eta_x = 0.0, eta_tilde_x = 0.0;
  double v_z = 0.0, v_x = 0.0;
  double mse = 0.0;     // predicted recovery error at this iteration
  double mse_db = 0.0;
};

class SeDivergedError : public std::runtime_error {
 public:
  SeDivergedError(const std::string& what, std::vector<SeState> traj)
      : std::runtime_error(what), trajectory(std::move(traj)) {}
  std::vector<SeState> trajectory;
};

// Scalar error of the sparse prior under a Gaussian pseudo-observation of
// precision eta (unit signal power).  Positive-half-line quadrature of the
// given order; the integrand is re-split around its internal knee once the
// effective precision is high, so one fixed order holds to ~1e-12 across
// the whole range.
double mmse_bg(double eta, double rho, std::size_t quad_order = 64);

// Information gain of one quantized complex measurement: sum over quantizer
// cells of (d Psi / d mean)^2 / Psi, with the Gaussian measurement average
// taken by Hermite quadrature.
double fisher_quantized(double eta_z, double p_z, double sigma2,
                        const Quantizer& q, std::size_t quad_order = 64);

// Spectral averages behind the linear stage: E 1/(v_z + lambda v_x), and
// the x-side posterior variance p_x - eta_tilde_x
//   = (1 - alpha) v_x + alpha E 1/(1/v_x + lambda/v_z).
double spectral_eta_z_tilde(double v_x, double v_z, const Spectrum& s);
double spectral_eta_x_tilde(double v_x, double v_z, const Spectrum& s,
                            double p_x);

std::vector<SeState> se_run(const Spectrum& s, double rho, double sigma2,
                            const Quantizer& q, double p_x, int iters,
                            std::size_t quad_order = 64);

// Closed-form specialization for row-orthogonal operators (A A^H = I):
// the spectral averages collapse and eta_z tracks p_z - v_x directly.
std::vector<SeState> se_run_row_orthogonal(double alpha, double rho,
                                           double sigma2, const Quantizer& q,
                                           double p_x, int iters,
                                           std::size_t quad_order = 64);

}  // namespace gecsr
