#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "icl/rng.hpp"

namespace icl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Probabilists' Hermite polynomial He_k(z) by the three-term recurrence
// He_{k+1}(z) = z He_k(z) - k He_{k-1}(z). Guarded at k <= 64.
double he(int k, double z);

constexpr int kMaxHermiteOrder = 64;

// sqrt(k!) for the orthonormal basis He_k / sqrt(k!).
double sqrt_factorial(int k);

// Gauss-Hermite rule rescaled to the standard Gaussian weight:
// E[f(Z)] ~ sum_i w[i] f(z[i]) for Z ~ N(0,1). Exact for polynomials of
// degree <= 2*nodes - 1.
struct GaussHermiteRule {
  Vec nodes;
  Vec weights;
  explicit GaussHermiteRule(int n);
};

// H(h, k) = E[h(Z) He_k(Z)] by quadrature. Throws NumericalError if the
// integrand is non-finite at any node.
double gauss_hermite_inner(const std::function<double(double)>& h, int k, int nodes);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Unbiased Monte-Carlo estimate of E[h(Z) He_k(Z)] with its standard error.
McEstimate mc_inner(const std::function<double(double)>& h, int k, std::int64_t samples,
                    RngStream rng);

// Polynomial link function stored in the orthonormal Hermite basis:
// g(z) = sum_k c_k He_k(z) / sqrt(k!). Normalized form has c_0 = 0 and
// sum c_k^2 = 1, i.e. Gaussian mean zero and unit variance.
class LinkFunction {
 public:
  // Coefficients c_0..c_K in the orthonormal basis; normalizes unless the
  // input already is. Throws ValidationError on an all-zero function.
  explicit LinkFunction(std::vector<double> orthonormal_coeffs);

  // Named presets: "he1".."he4" are single modes He_k / sqrt(k!).
  static LinkFunction preset(const std::string& name);

  double operator()(double z) const;
  const std::vector<double>& coeffs() const { return coeffs_; }
  int degree() const { return degree_; }
  // H(g, k) = c_k sqrt(k!) in the non-orthonormal convention.
  double hermite_coeff(int k) const;
  bool is_even(double tol = 1e-12) const;

 private:
  std::vector<double> coeffs_;
  int degree_ = 0;
};

// Gate scale, gate bias and label noise level. rho > 0, tau >= 0.
struct GatingConstants {
  double rho = 2.0;
  double b = -4.0;
  double tau = 0.1;
};

void validate(const GatingConstants& gc);

double sigmoid(double x);

// Closed-form k-th derivative of the sigmoid, k <= 3.
double sigmoid_derivative(int k, double z);

// Smallest i >= 1 with |H(g, i)| > tol, by exact quadrature.
// Throws NumericalError if no index up to deg(g) qualifies.
int information_exponent(const LinkFunction& g, double tol = 1e-8);

// 2 if g is even (all odd-order coefficients below tol), else 1.
int generative_exponent(const LinkFunction& g, double tol = 1e-8);

// Hermite coefficients H(h, p) for p = 0..max_order in the non-orthonormal
// convention, with per-coefficient error estimates (0 for quadrature).
struct HermiteExpansion {
  std::vector<double> coeffs;
  std::vector<double> std_errors;
  int max_order = 0;
};

// Estimator choice for expansions of non-polynomial integrands.
struct EstimatorSpec {
  enum Kind { kQuadrature, kMonteCarlo } kind = kQuadrature;
  int nodes = 150;                  // quadrature
  std::int64_t samples = 10000000;  // Monte Carlo
  RngStream rng;                    // Monte Carlo
  int workers = 1;

  static EstimatorSpec quadrature(int nodes = 150);
  static EstimatorSpec monte_carlo(std::int64_t samples, RngStream rng, int workers = 1);
};

// The gating-transformed label function
//   A(z) = 1/2 [ (rho gbar(z) + tau) sigma(gbar(z) + tau/rho + b)
//              + (rho gbar(z) - tau) sigma(gbar(z) - tau/rho + b) ],
// gbar = g/rho, optionally truncated to 0 where |g/rho| exceeds the
// threshold. Returns a_p = H(A, p) for p = 0..p_max.
struct TruncationSpec {
  bool enabled = false;
  double threshold = 0.5;
};

HermiteExpansion a_coeffs(const LinkFunction& g, const GatingConstants& gc,
                          const TruncationSpec& trunc, int p_max, const EstimatorSpec& est);

// Generic Hermite expansion of an arbitrary scalar function under the
// chosen estimator; the building block behind a_coeffs and the
// exponent-reduction diagnostics.
HermiteExpansion hermite_expand(const std::function<double(double)>& h, int p_max,
                                const EstimatorSpec& est);

// Checks e^z / 2 <= sigma^(k)(z) <= 2 e^z on the grid; every z must satisfy
// z < -k - 2 (ValidationError otherwise).
struct BoundsReport {
  bool holds = true;
  std::vector<double> violations;  // grid points where the bound fails
};

BoundsReport sigmoid_derivative_bounds_check(int k, const std::vector<double>& z_grid);

}  // namespace icl
