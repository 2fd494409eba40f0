#pragma once

#include <functional>

#include "icl/mamba.hpp"

namespace icl {

// Two-layer ReLU MLP: sum_k u[k] ReLU(v[k] z + a[k]).
struct MlpParams {
  Vec u;
  Vec v;
  Vec a;
  int width() const { return static_cast<int>(u.size()); }
};

void validate(const MlpParams& p);

double mlp_forward(double z, const MlpParams& p);

struct Model {
  MambaParams mamba;
  MlpParams mlp;
};

// f(Z) = MLP(Mamba(Z; gamma)[d~+1, n+1] / n).
double predict(const EmbeddedPrompt& zp, const MambaParams& mp, const MlpParams& hp);
double predict(const Prompt& p, const Model& m);

enum class Metric { kAbs, kSquared };

struct EvalOptions {
  int n = 1;
  int tasks = 1;
  int prompts_per_task = 1;
  Metric metric = Metric::kAbs;
  int workers = 1;
};

struct EvalResult {
  double mean = 0.0;
  double std_across_tasks = 0.0;  // sample std of per-task means; 0 for one task
  std::vector<double> per_task;
  double std_error() const;  // std_across_tasks / sqrt(tasks)
};

using PredictorFn = std::function<double(const Prompt&)>;

// Monte-Carlo estimate of E[err(f(Z), y)] over D(n): per-task means,
// their overall mean, and the across-task standard deviation. Tasks are
// evaluated under per-task streams and reduced in task-index order.
EvalResult evaluate_predictor(const PredictorFn& f, const TaskDistribution& dist,
                              const EvalOptions& opts, RngStream eval_root);

EvalResult test_error(const Model& m, const TaskDistribution& dist, const EvalOptions& opts,
                      RngStream eval_root);

}  // namespace icl
