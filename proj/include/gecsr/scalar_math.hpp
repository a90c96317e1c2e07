#pragma once

#include <cstddef>
#include <vector>

namespace gecsr {

// One quantizer cell: inputs in (low, up] map to a single output level.
// Saturating cells use -inf / +inf edges.
struct Bin {
  double low;
  double up;
};

double norm_pdf(double z);
double norm_cdf(double z);

// log Phi(z), stable arbitrarily deep into the lower tail.
double log_norm_cdf(double z);

// Probability that a N(z, c2) real variable lands in the bin, i.e.
// Phi((up-z)/c) - Phi((low-z)/c).  Computed through tail-matched
// complementary-error-function differences (log domain when the whole bin
// sits more than 6 sigma away) so it stays relatively accurate instead of
// underflowing to a cancelled zero.
double bin_prob(const Bin& bin, double z, double c2);

// d/dz of bin_prob: (phi((low-z)/c) - phi((up-z)/c)) / c.
double bin_prob_deriv(const Bin& bin, double z, double c2);

// log of bin_prob, usable far beyond the double underflow threshold.
double log_bin_prob(const Bin& bin, double z, double c2);

// log |bin_prob_deriv|; second member is the sign (-1, 0, +1).
struct LogAbsDeriv {
  double log_abs;
  int sign;
};
LogAbsDeriv log_bin_prob_deriv(const Bin& bin, double z, double c2);

enum class QuadratureKind {
  GaussHermiteProbabilist,  // weight phi(z) dz over (-inf, inf); weights sum to 1
  GaussLaguerre,            // weight e^-t dt over [0, inf)
  GaussLegendre,            // weight 1 over [-1, 1]
};

struct QuadratureRule {
  QuadratureKind kind;
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

// Golub-Welsch construction (symmetric tridiagonal eigenproblem).
QuadratureRule gauss_hermite(std::size_t n);
QuadratureRule gauss_laguerre(std::size_t n);
QuadratureRule gauss_legendre(std::size_t n);

}  // namespace gecsr
