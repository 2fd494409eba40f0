#include "icl/predictor.hpp"

#include <cmath>

#include "icl/errors.hpp"
#include "icl/parallel.hpp"

namespace icl {

void validate(const MlpParams& p) {
  if (p.u.size() != p.v.size() || p.u.size() != p.a.size())
    throw ValidationError("MlpParams: u, v, a must share one width");
  if (p.u.size() == 0) throw ValidationError("MlpParams: zero width");
  if (!p.u.allFinite() || !p.v.allFinite() || !p.a.allFinite())
    throw ValidationError("MlpParams: non-finite parameters");
}

double mlp_forward(double z, const MlpParams& p) {
  double acc = 0.0;
  for (int k = 0; k < p.width(); ++k) acc += p.u[k] * std::max(0.0, p.v[k] * z + p.a[k]);
  return acc;
}

double predict(const EmbeddedPrompt& zp, const MambaParams& mp, const MlpParams& hp) {
  if (zp.n < 1) throw ValidationError("predict: need at least one context example");
  return mlp_forward(mamba_scalar(zp, mp) / static_cast<double>(zp.n), hp);
}

double predict(const Prompt& p, const Model& m) {
  const EmbeddingKind kind = embedding_kind_for(m.mamba, static_cast<int>(p.query.size()));
  return predict(embed_prompt(p, kind), m.mamba, m.mlp);
}

double EvalResult::std_error() const {
  return per_task.empty() ? 0.0 : std_across_tasks / std::sqrt(static_cast<double>(per_task.size()));
}

EvalResult evaluate_predictor(const PredictorFn& f, const TaskDistribution& dist,
                              const EvalOptions& opts, RngStream eval_root) {
  if (opts.n < 1 || opts.tasks < 1 || opts.prompts_per_task < 1)
    throw ValidationError("evaluate_predictor: counts must be positive");
  EvalResult res;
  res.per_task.assign(opts.tasks, 0.0);
  parallel_for(static_cast<std::size_t>(opts.tasks), opts.workers, [&](std::size_t t) {
    RngStream ts = eval_root.child(t);
    double acc = 0.0;
    for (int p = 0; p < opts.prompts_per_task; ++p) {
      const Prompt prompt = sample_prompt(dist, opts.n, ts, p, t);
      const double err = f(prompt) - prompt.query_label;
      acc += opts.metric == Metric::kAbs ? std::abs(err) : err * err;
    }
    res.per_task[t] = acc / opts.prompts_per_task;
  });
  double mean = 0.0;
  for (double m : res.per_task) mean += m;
  mean /= opts.tasks;
  double var = 0.0;
  for (double m : res.per_task) var += (m - mean) * (m - mean);
  res.mean = mean;
  res.std_across_tasks = opts.tasks > 1 ? std::sqrt(var / (opts.tasks - 1)) : 0.0;
  if (!std::isfinite(res.mean)) throw NumericalError("evaluate_predictor: non-finite mean error");
  return res;
}

EvalResult test_error(const Model& m, const TaskDistribution& dist, const EvalOptions& opts,
                      RngStream eval_root) {
  return evaluate_predictor([&m](const Prompt& p) { return predict(p, m); }, dist, opts, eval_root);
}

}  // namespace icl
