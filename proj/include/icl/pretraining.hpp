#pragma once

#include <span>
#include <vector>

#include "icl/predictor.hpp"

namespace icl {

// Stage hyperparameters. eta_auto rescales eta so that max|gamma*| = 1
// (valid only with lambda1 = 1/eta, where gamma* = -eta grad L1).
struct Stage1Spec {
  double eta = 1.0;
  bool eta_auto = true;
  double lambda1 = 0.0;
  bool lambda1_inv_eta = true;
};

struct Stage2Spec {
  int m = 64;
  double lambda2 = 1e-3;
  bool lambda2_grid = true;
  std::vector<double> grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  int t2 = 64;
  int n_pt = 100;
  int workers = 1;
};

// gamma(0) = (gamma0^2 | 1 .. 1 | gamma0 .. gamma0) in phi's ordering:
// squared scale on the constant slot, ones on the d linear slots, the raw
// scale on every quadratic slot. MLP: u = 1/m, v = 1, a = 0 (pure ReLU).
std::pair<MambaParams, MlpParams> init_params(int d, double gamma0_scale,
                                              const GatingConstants& gc, int m,
                                              EmbeddingKind kind = EmbeddingKind::kQuadratic);

struct Stage1TaskTerm {
  Vec grad_f;          // d~; zero when the ReLU indicator is off
  double f = 0.0;      // model output at initialization
  double y = 0.0;      // query label
  double preact = 0.0; // pre-activation s = Mamba scalar / n
};

// Per-task gradient of f at the exact stage-I initialization, where the
// MLP is a single ReLU and the chain rule reduces to an indicator.
Stage1TaskTerm stage1_task_term(const EmbeddedPrompt& zp, double query_label,
                                const MambaParams& init);

struct Stage1Diagnostics {
  double activation_rate = 0.0;  // fraction of tasks with positive pre-activation
  int near_kink_count = 0;       // |preact| <= kink_eps: ambiguous subgradient
  double kink_eps = 1e-9;
  double min_abs_preact = 0.0;
};

// Full-batch grad L1 = (2/T1) sum_t (f_t - y_t) grad f_t at initialization.
Vec stage1_gradient(std::span<const EmbeddedPrompt> tasks, std::span<const double> labels,
                    const MambaParams& init, Stage1Diagnostics* diag = nullptr);

// Streaming variant: samples the T1 tasks from their per-task streams,
// accumulating in task-index order regardless of worker count.
Vec stage1_gradient_sampled(const TaskDistribution& dist, int n_pt, int t1,
                            const MambaParams& init, RngStream root, int workers,
                            Stage1Diagnostics* diag = nullptr);

struct Stage1Result {
  Vec gamma_star;
  Vec raw_gradient;
  double eta_used = 0.0;
  Stage1Diagnostics diagnostics;
};

// gamma* = gamma(0) - eta (grad L1 + lambda1 gamma(0)); reduces to
// -eta grad L1 when lambda1 = 1/eta. Auto-scale picks eta so that
// max|gamma*| = 1 and fails on a zero gradient.
Stage1Result stage1_update(const Stage1Spec& spec, const Vec& gradient, const Vec& gamma0);

struct Stage2Result {
  Vec u_star;
  Vec v_star;
  Vec a_star;
  double train_loss = 0.0;     // L2 at the returned solution
  double kkt_residual = 0.0;   // final solve
  double max_kkt_residual = 0.0;  // worst over all solves (grid included)
  double chosen_lambda2 = 0.0;
  std::vector<double> grid_norms;       // ||u*(lambda)|| along the grid
  std::vector<double> grid_val_errors;  // held-out squared error along the grid
};

// Stage II: reinitialize (v*, a*) per unit from the stage-2 init stream
// (nested across widths), compute s_t = Mamba scalar / n_pt on T2 fresh
// tasks, and ridge-solve the outer layer via the m x m normal equations.
// Grid mode selects lambda2 on the last 20% of tasks, then refits on all.
Stage2Result stage2_fit(const TaskDistribution& dist, const MambaParams& trained,
                        const Stage2Spec& spec, RngStream root);

// Ridge solve (2/T) Phi'(Phi u - y) + lambda u = 0 with iterative
// refinement; returns u and its KKT residual.
std::pair<Vec, double> ridge_solve(const Mat& features, const Vec& targets, double lambda);

}  // namespace icl
