#pragma once

#include <array>
#include <optional>

#include "icl/pretraining.hpp"

namespace icl {

// Least-squares fit of the normalized Mamba scalar against
// {1, (<beta, x>/r)^ge} over an evaluation set with known features.
struct FeatureFitReport {
  int ge_used = 1;
  double p1 = 0.0;  // intercept
  double p2 = 0.0;  // coefficient of the power term
  double r_squared = 0.0;
  double baseline_r_squared = 0.0;  // constant-only fit
  double residual_rms = 0.0;
  bool singular_design = false;  // constant regressor, fit meaningless
};

FeatureFitReport feature_learning_fit(const MambaParams& trained,
                                      const std::vector<Prompt>& prompts, int r, int ge);

// Share of |gamma*| mass on phi slots touching only feature coordinates.
// A cross slot counts as a feature slot only when both coordinates lie in
// the index set; the constant slot is excluded.
struct AlignmentReport {
  double mass_on_feature_slots = 0.0;
  double uniform_share = 0.0;
  double ratio = 0.0;
};

AlignmentReport gamma_alignment(const Vec& gamma_star, const FeatureSpace& space);

// B(z) = g(z) 1[a0 g0^2 + a1 z + (a2 g0 / 2) He2(z) > 0], the indicator
// being the population pre-activation at the stage-I initialization with
// scale g0. Coefficients b_p = H(B, p) via Monte Carlo.
HermiteExpansion b_coeffs(const LinkFunction& g, const std::array<double, 3>& a,
                          double gamma0_scale, int p_max, std::int64_t samples, RngStream rng,
                          int workers = 1);

// Analytic one-step prediction 2 eta E_beta[psi(beta, a) .* psi(beta, b)]
// with a from quadrature on A(z), b from b_coeffs, and the sphere average
// by Monte Carlo over beta ~ Unif(S_r).
Vec predict_gamma_star(const LinkFunction& g, const GatingConstants& gc, double gamma0_scale,
                       const FeatureSpace& space, double eta, std::int64_t samples, RngStream rng,
                       const TruncationSpec& trunc = {}, int workers = 1);

// Lower-level variant with explicit coefficient triples.
Vec gamma_star_oracle(const std::array<double, 3>& a, const std::array<double, 3>& b,
                      const FeatureSpace& space, double eta, std::int64_t samples, RngStream rng);

// Gaussian-RBF kernel ridge regression: yhat = k(query)' (K + ridge I)^{-1} y
// with k(x, x') = exp(-||x - x'||^2 / (2 bandwidth^2)). Inputs are the
// caller's choice of coordinates (full or intrinsic).
double kernel_ridge_predict(const Mat& xs, const Vec& ys, const Vec& query, double bandwidth,
                            double ridge);

// Hermite significance scan of the gated label transformation
// T(z) = g(z) sigma(g(z)/rho + b): first index p in 1..ie(g) whose
// coefficient clears 5 standard errors, compared with ge(g).
struct ExponentReductionReport {
  int ie = 0;
  int ge = 0;
  std::optional<int> first_significant;  // empty: inconclusive at 5 se
  bool matches_ge = false;
  std::vector<double> estimates;   // p = 1..ie
  std::vector<double> std_errors;
};

ExponentReductionReport exponent_reduction_report(const LinkFunction& g,
                                                  const GatingConstants& gc,
                                                  std::int64_t samples, RngStream rng,
                                                  int workers = 1);

}  // namespace icl
