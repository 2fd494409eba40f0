#pragma once

#include <string>
#include <vector>

#include "icl/hermite.hpp"
#include "icl/rng.hpp"

namespace icl {

// Ambient dimension d, intrinsic dimension r, and the sorted coordinate
// index set I (0-based) that carries the feature vectors.
struct FeatureSpace {
  int d = 0;
  int r = 0;
  std::vector<int> index_set;  // r distinct, sorted, in [0, d)

  static FeatureSpace first_r(int d, int r);
};

void validate(const FeatureSpace& space);

// One ICL prompt: n context pairs, a query with its held-out label, and
// the hidden feature direction (diagnostics only; never fed to a model).
struct Prompt {
  Mat xs;              // d x n
  Vec ys;              // n
  Vec query;           // d
  double query_label = 0.0;
  Vec beta;            // d, unit norm, supported on index_set
  int n = 0;
  std::uint64_t task_id = 0;
};

// beta ~ Unif(S_r): i.i.d. Gaussians on the index set, normalized.
// Resamples the measure-zero all-zeros draw.
Vec sample_feature(const FeatureSpace& space, RngStream rng);

// x ~ N(0, I_d), y = g(<beta, x>) + zeta with zeta = +-tau.
// The noise sign is drawn before the coordinates, so datasets restricted
// to a shared index set coincide across ambient dimensions.
std::pair<Vec, double> sample_example(const Vec& beta, const LinkFunction& g, double tau,
                                      RngStream rng);

struct TaskDistribution {
  FeatureSpace space;
  LinkFunction link;
  double tau = 0.1;
};

// Stream layout: task_stream.child(kRoleFeature) draws beta;
// task_stream.child(kRoleExamples).child(prompt).child(j) draws example j,
// with j = n being the query. Prompts of one task share beta.
Prompt sample_prompt(const TaskDistribution& dist, int n, RngStream task_stream,
                     std::uint64_t prompt_index = 0, std::uint64_t task_id = 0);

RngStream task_stream(RngStream root, StreamStage stage, std::uint64_t task);

// Columnar text dump: a header with counts, then one whitespace-separated
// record per prompt (task_id, beta, xs column-major, ys, query, label).
void dump_prompts(const std::string& path, const std::vector<Prompt>& prompts);
std::vector<Prompt> load_prompts(const std::string& path);

}  // namespace icl
