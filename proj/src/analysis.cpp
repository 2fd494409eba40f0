#include "icl/analysis.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "icl/errors.hpp"
#include "icl/parallel.hpp"

namespace icl {

namespace {
struct LeastSquares2 {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 0.0;
  double residual_rms = 0.0;
  bool singular = false;
};

// Fit s ~ intercept + slope * t by the 2x2 normal equations.
LeastSquares2 fit_affine(const Vec& t, const Vec& s) {
  LeastSquares2 out;
  const int m = static_cast<int>(t.size());
  const double tbar = t.mean();
  const double sbar = s.mean();
  const double stt = (t.array() - tbar).square().sum();
  const double sst = (s.array() - sbar).square().sum();
  if (stt <= 1e-14 * std::max(1.0, tbar * tbar) * m) {
    out.singular = true;
    out.intercept = sbar;
    out.residual_rms = std::sqrt(sst / m);
    return out;
  }
  out.slope = (t.array() - tbar).cwiseProduct(s.array() - sbar).sum() / stt;
  out.intercept = sbar - out.slope * tbar;
  const Eigen::ArrayXd resid = s.array() - (out.intercept + out.slope * t.array());
  const double ssr = resid.square().sum();
  out.r_squared = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
  out.residual_rms = std::sqrt(ssr / m);
  return out;
}
}  // namespace

FeatureFitReport feature_learning_fit(const MambaParams& trained,
                                      const std::vector<Prompt>& prompts, int r, int ge) {
  if (ge != 1 && ge != 2) throw ValidationError("feature_learning_fit: ge must be 1 or 2");
  if (prompts.size() < 3) throw ValidationError("feature_learning_fit: need at least 3 prompts");
  if (r < 1) throw ValidationError("feature_learning_fit: r must be positive");
  const int m = static_cast<int>(prompts.size());
  Vec s(m), t(m);
  for (int i = 0; i < m; ++i) {
    const Prompt& p = prompts[i];
    if (p.n < 1) throw ValidationError("feature_learning_fit: empty prompt");
    s[i] = mamba_scalar(embed_prompt(p, embedding_kind_for(trained, static_cast<int>(p.query.size()))),
                        trained) /
           static_cast<double>(p.n);
    const double base = p.beta.dot(p.query) / static_cast<double>(r);
    t[i] = ge == 1 ? base : base * base;
  }
  const LeastSquares2 ls = fit_affine(t, s);
  FeatureFitReport rep;
  rep.ge_used = ge;
  rep.p1 = ls.intercept;
  rep.p2 = ls.slope;
  rep.r_squared = ls.r_squared;
  rep.residual_rms = ls.residual_rms;
  rep.singular_design = ls.singular;
  rep.baseline_r_squared = 0.0;  // constant-only fit predicts the mean
  return rep;
}

AlignmentReport gamma_alignment(const Vec& gamma_star, const FeatureSpace& space) {
  validate(space);
  if (gamma_star.size() != phi_dim(space.d))
    throw ValidationError("gamma_alignment: gamma size does not match phi(d)");
  std::vector<bool> in_set(space.d, false);
  for (int idx : space.index_set) in_set[idx] = true;
  double feature_mass = 0.0, total_mass = 0.0;
  int feature_slots = 0, total_slots = 0;
  for (int slot = 1; slot < gamma_star.size(); ++slot) {
    const SlotInfo info = slot_info(slot, space.d);
    bool feature_only = false;
    if (info.kind == SlotKind::kLinear || info.kind == SlotKind::kSquare)
      feature_only = in_set[info.i];
    else if (info.kind == SlotKind::kCross)
      feature_only = in_set[info.i] && in_set[info.j];
    const double mass = std::abs(gamma_star[slot]);
    total_mass += mass;
    ++total_slots;
    if (feature_only) {
      feature_mass += mass;
      ++feature_slots;
    }
  }
  AlignmentReport rep;
  rep.uniform_share = static_cast<double>(feature_slots) / static_cast<double>(total_slots);
  rep.mass_on_feature_slots = total_mass > 0.0 ? feature_mass / total_mass : 0.0;
  rep.ratio = rep.uniform_share > 0.0 ? rep.mass_on_feature_slots / rep.uniform_share : 0.0;
  return rep;
}

HermiteExpansion b_coeffs(const LinkFunction& g, const std::array<double, 3>& a,
                          double gamma0_scale, int p_max, std::int64_t samples, RngStream rng,
                          int workers) {
  const double g0 = gamma0_scale;
  auto B = [&, g0](double z) {
    const double q = a[0] * g0 * g0 + a[1] * z + 0.5 * a[2] * g0 * (z * z - 1.0);
    return q > 0.0 ? g(z) : 0.0;
  };
  return hermite_expand(B, p_max, EstimatorSpec::monte_carlo(samples, rng, workers));
}

Vec gamma_star_oracle(const std::array<double, 3>& a, const std::array<double, 3>& b,
                      const FeatureSpace& space, double eta, std::int64_t samples, RngStream rng) {
  validate(space);
  if (samples < 1) throw ValidationError("gamma_star_oracle: samples must be positive");
  Vec acc = Vec::Zero(phi_dim(space.d));
  for (std::int64_t i = 0; i < samples; ++i) {
    const Vec beta = sample_feature(space, rng.child(i));
    acc += psi(beta, a[0], a[1], a[2]).cwiseProduct(psi(beta, b[0], b[1], b[2]));
  }
  return (2.0 * eta / static_cast<double>(samples)) * acc;
}

Vec predict_gamma_star(const LinkFunction& g, const GatingConstants& gc, double gamma0_scale,
                       const FeatureSpace& space, double eta, std::int64_t samples, RngStream rng,
                       const TruncationSpec& trunc, int workers) {
  const HermiteExpansion a = a_coeffs(g, gc, trunc, 2, EstimatorSpec::quadrature(150));
  const std::array<double, 3> a3 = {a.coeffs[0], a.coeffs[1], a.coeffs[2]};
  const HermiteExpansion b =
      b_coeffs(g, a3, gamma0_scale, 2, samples, rng.child(0), workers);
  const std::array<double, 3> b3 = {b.coeffs[0], b.coeffs[1], b.coeffs[2]};
  // The sphere average needs far fewer draws than the scalar expansions.
  const std::int64_t sphere_samples = std::max<std::int64_t>(10000, samples / 50);
  return gamma_star_oracle(a3, b3, space, eta, sphere_samples, rng.child(1));
}

double kernel_ridge_predict(const Mat& xs, const Vec& ys, const Vec& query, double bandwidth,
                            double ridge) {
  const int n = static_cast<int>(xs.cols());
  if (n < 1) throw ValidationError("kernel_ridge_predict: need at least one context pair");
  if (ys.size() != n || xs.rows() != query.size())
    throw ValidationError("kernel_ridge_predict: shape mismatch");
  if (!(bandwidth > 0.0)) throw ValidationError("kernel_ridge_predict: bandwidth must be positive");
  if (ridge < 0.0) throw ValidationError("kernel_ridge_predict: ridge must be nonnegative");
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  Mat k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = 1.0 + ridge;
    for (int j = i + 1; j < n; ++j) {
      const double v = std::exp(-(xs.col(i) - xs.col(j)).squaredNorm() * inv);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  Eigen::LDLT<Mat> ldlt(k);
  Vec alpha = ldlt.solve(ys);
  const double resid = (k * alpha - ys).norm();
  if (ldlt.info() != Eigen::Success || !alpha.allFinite() ||
      resid > 1e-6 * std::max(1.0, ys.norm()))
    throw NumericalError("kernel_ridge_predict: ill-conditioned system (ridge too small)");
  double out = 0.0;
  for (int i = 0; i < n; ++i)
    out += alpha[i] * std::exp(-(xs.col(i) - query).squaredNorm() * inv);
  return out;
}

ExponentReductionReport exponent_reduction_report(const LinkFunction& g,
                                                  const GatingConstants& gc,
                                                  std::int64_t samples, RngStream rng,
                                                  int workers) {
  validate(gc);
  ExponentReductionReport rep;
  rep.ie = information_exponent(g);
  rep.ge = generative_exponent(g);
  auto transformed = [&](double z) {
    const double v = g(z);
    return v * sigmoid(v / gc.rho + gc.b);
  };
  const HermiteExpansion h =
      hermite_expand(transformed, rep.ie, EstimatorSpec::monte_carlo(samples, rng, workers));
  for (int p = 1; p <= rep.ie; ++p) {
    rep.estimates.push_back(h.coeffs[p]);
    rep.std_errors.push_back(h.std_errors[p]);
    if (!rep.first_significant && std::abs(h.coeffs[p]) > 5.0 * h.std_errors[p])
      rep.first_significant = p;
  }
  rep.matches_ge = rep.first_significant.has_value() && *rep.first_significant == rep.ge;
  return rep;
}

}  // namespace icl
