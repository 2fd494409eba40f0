#include "icl/pretraining.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "icl/errors.hpp"
#include "icl/parallel.hpp"

namespace icl {

std::pair<MambaParams, MlpParams> init_params(int d, double gamma0_scale,
                                              const GatingConstants& gc, int m,
                                              EmbeddingKind kind) {
  if (d < 1) throw ValidationError("init_params: d must be positive");
  if (m < 1) throw ValidationError("init_params: MLP width must be positive");
  validate(gc);
  MambaParams mp;
  mp.gc = gc;
  if (kind == EmbeddingKind::kQuadratic) {
    mp.gamma.resize(phi_dim(d));
    mp.gamma[0] = gamma0_scale * gamma0_scale;
    mp.gamma.segment(1, d).setOnes();
    mp.gamma.segment(1 + d, phi_dim(d) - 1 - d).setConstant(gamma0_scale);
  } else {
    // No constant or quadratic slots to scale in the standard embedding.
    mp.gamma = Vec::Ones(d);
  }
  MlpParams hp;
  hp.u = Vec::Constant(m, 1.0 / static_cast<double>(m));
  hp.v = Vec::Ones(m);
  hp.a = Vec::Zero(m);
  return {std::move(mp), std::move(hp)};
}

Stage1TaskTerm stage1_task_term(const EmbeddedPrompt& zp, double query_label,
                                const MambaParams& init) {
  Stage1TaskTerm term;
  term.y = query_label;
  const Vec gates = gating_last_column(zp, init.gc);
  const int dt = zp.d_tilde;
  Vec context = Vec::Zero(dt);  // sum_j G[j,n+1] y_j phi(x_j)
  for (int j = 0; j < zp.n; ++j)
    context += gates[j] * zp.z(dt, j) * zp.z.col(j).head(dt);
  context /= static_cast<double>(zp.n);
  const Vec query_phi = zp.z.col(zp.n).head(dt);
  term.preact = context.dot(init.gamma.cwiseProduct(query_phi));
  term.f = std::max(0.0, term.preact);
  // Strict indicator: the subgradient at the kink is zero.
  if (term.preact > 0.0)
    term.grad_f = context.cwiseProduct(query_phi);
  else
    term.grad_f = Vec::Zero(dt);
  if (!std::isfinite(term.preact)) throw NumericalError("stage1_task_term: non-finite pre-activation");
  return term;
}

namespace {
Vec reduce_terms(const std::vector<Stage1TaskTerm>& terms, Stage1Diagnostics* diag) {
  const int t1 = static_cast<int>(terms.size());
  Vec grad = Vec::Zero(terms.front().grad_f.size());
  int active = 0, near_kink = 0;
  double min_abs = std::abs(terms.front().preact);
  const double eps = diag ? diag->kink_eps : 1e-9;
  for (const Stage1TaskTerm& t : terms) {
    grad += (t.f - t.y) * t.grad_f;
    if (t.preact > 0.0) ++active;
    if (std::abs(t.preact) <= eps) ++near_kink;
    min_abs = std::min(min_abs, std::abs(t.preact));
  }
  grad *= 2.0 / static_cast<double>(t1);
  if (diag) {
    diag->activation_rate = static_cast<double>(active) / t1;
    diag->near_kink_count = near_kink;
    diag->min_abs_preact = min_abs;
  }
  return grad;
}
}  // namespace

Vec stage1_gradient(std::span<const EmbeddedPrompt> tasks, std::span<const double> labels,
                    const MambaParams& init, Stage1Diagnostics* diag) {
  if (tasks.empty() || tasks.size() != labels.size())
    throw ValidationError("stage1_gradient: need matching nonempty tasks and labels");
  std::vector<Stage1TaskTerm> terms(tasks.size());
  for (std::size_t t = 0; t < tasks.size(); ++t)
    terms[t] = stage1_task_term(tasks[t], labels[t], init);
  return reduce_terms(terms, diag);
}

Vec stage1_gradient_sampled(const TaskDistribution& dist, int n_pt, int t1,
                            const MambaParams& init, RngStream root, int workers,
                            Stage1Diagnostics* diag) {
  if (t1 < 1) throw ValidationError("stage1_gradient_sampled: t1 must be positive");
  std::vector<Stage1TaskTerm> terms(t1);
  const EmbeddingKind kind = embedding_kind_for(init, dist.space.d);
  parallel_for(static_cast<std::size_t>(t1), workers, [&](std::size_t t) {
    const Prompt prompt = sample_prompt(dist, n_pt, task_stream(root, kStreamStage1, t), 0, t);
    terms[t] = stage1_task_term(embed_prompt(prompt, kind), prompt.query_label, init);
  });
  return reduce_terms(terms, diag);
}

Stage1Result stage1_update(const Stage1Spec& spec, const Vec& gradient, const Vec& gamma0) {
  if (!gradient.allFinite()) throw ValidationError("stage1_update: non-finite gradient");
  Stage1Result res;
  res.raw_gradient = gradient;
  if (spec.lambda1_inv_eta) {
    // gamma* = gamma0 - eta (grad + gamma0 / eta) = -eta grad.
    double eta = spec.eta;
    if (spec.eta_auto) {
      const double gmax = gradient.cwiseAbs().maxCoeff();
      if (gmax <= 0.0)
        throw NumericalError("stage1_update: zero gradient, auto-scale undefined");
      eta = 1.0 / gmax;
    }
    res.eta_used = eta;
    res.gamma_star = -eta * gradient;
  } else {
    if (spec.eta_auto)
      throw ValidationError("stage1_update: auto-scale requires lambda1 = 1/eta");
    res.eta_used = spec.eta;
    res.gamma_star = gamma0 - spec.eta * (gradient + spec.lambda1 * gamma0);
  }
  return res;
}

std::pair<Vec, double> ridge_solve(const Mat& features, const Vec& targets, double lambda) {
  const int t = static_cast<int>(features.rows());
  if (targets.size() != t) throw ValidationError("ridge_solve: shape mismatch");
  const double scale = 2.0 / static_cast<double>(t);
  Mat normal = scale * (features.transpose() * features);
  normal.diagonal().array() += lambda;
  const Vec rhs = scale * (features.transpose() * targets);
  Eigen::LDLT<Mat> ldlt(normal);
  if (ldlt.info() != Eigen::Success)
    throw NumericalError("ridge_solve: LDLT factorization failed (ill-conditioned normal matrix)");
  Vec u = ldlt.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) u -= ldlt.solve(normal * u - rhs);
  const double kkt = (scale * (features.transpose() * (features * u - targets)) + lambda * u).norm();
  if (!u.allFinite() || !std::isfinite(kkt))
    throw NumericalError("ridge_solve: non-finite solution (ill-conditioned normal matrix)");
  return {std::move(u), kkt};
}

Stage2Result stage2_fit(const TaskDistribution& dist, const MambaParams& trained,
                        const Stage2Spec& spec, RngStream root) {
  if (spec.t2 < 1) throw ValidationError("stage2_fit: t2 must be positive");
  if (spec.m < 1) throw ValidationError("stage2_fit: m must be positive");
  Stage2Result res;
  // Per-unit reinitialization; widths nest because unit k owns stream k.
  RngStream init_stream = root.child(kStreamStage2Init);
  res.v_star.resize(spec.m);
  res.a_star.resize(spec.m);
  for (int k = 0; k < spec.m; ++k) {
    RngStream unit = init_stream.child(k);
    res.v_star[k] = static_cast<double>(unit.sign());
    res.a_star[k] = unit.uniform(-1.0, 1.0);
  }
  // Normalized Mamba outputs on fresh stage-2 tasks.
  Vec s(spec.t2), y(spec.t2);
  const EmbeddingKind kind = embedding_kind_for(trained, dist.space.d);
  parallel_for(static_cast<std::size_t>(spec.t2), spec.workers, [&](std::size_t t) {
    const Prompt prompt = sample_prompt(dist, spec.n_pt, task_stream(root, kStreamStage2, t), 0, t);
    s[t] = mamba_scalar(embed_prompt(prompt, kind), trained) / static_cast<double>(spec.n_pt);
    y[t] = prompt.query_label;
  });
  auto features_for = [&](const Vec& svals) {
    Mat phi_mat(svals.size(), spec.m);
    for (int t = 0; t < svals.size(); ++t)
      for (int k = 0; k < spec.m; ++k)
        phi_mat(t, k) = std::max(0.0, res.v_star[k] * svals[t] + res.a_star[k]);
    return phi_mat;
  };
  const Mat features = features_for(s);

  double lambda = spec.lambda2;
  if (spec.lambda2_grid) {
    if (spec.grid.empty()) throw ValidationError("stage2_fit: empty lambda2 grid");
    std::vector<double> grid = spec.grid;
    std::sort(grid.begin(), grid.end());
    const int n_val = std::max(1, spec.t2 / 5);
    const int n_train = spec.t2 - n_val;
    if (n_train < 1) throw ValidationError("stage2_fit: not enough tasks for validation split");
    const Mat train_f = features.topRows(n_train);
    const Vec train_y = y.head(n_train);
    const Mat val_f = features.bottomRows(n_val);
    const Vec val_y = y.tail(n_val);
    double best_err = std::numeric_limits<double>::infinity();
    for (double cand : grid) {
      auto [u, kkt] = ridge_solve(train_f, train_y, cand);
      res.max_kkt_residual = std::max(res.max_kkt_residual, kkt);
      res.grid_norms.push_back(u.norm());
      const double val_err = (val_f * u - val_y).squaredNorm() / n_val;
      res.grid_val_errors.push_back(val_err);
      if (val_err <= best_err) {  // ties resolve toward stronger regularization
        best_err = val_err;
        lambda = cand;
      }
    }
  }
  auto [u, kkt] = ridge_solve(features, y, lambda);
  res.u_star = std::move(u);
  res.kkt_residual = kkt;
  res.max_kkt_residual = std::max(res.max_kkt_residual, kkt);
  res.chosen_lambda2 = lambda;
  res.train_loss = (features * res.u_star - y).squaredNorm() / spec.t2;
  return res;
}

}  // namespace icl
