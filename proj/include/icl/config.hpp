#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "icl/predictor.hpp"

namespace icl {

// Flat key-value experiment configuration with dotted sections; see
// configs/reference.cfg for the annotated key list. Unknown keys and
// invalid values are collected and reported together.
struct ExperimentConfig {
  std::uint64_t master_seed = 42;
  std::string out_dir = "runs/out";

  std::string link_preset = "he3";     // he1..he4 or "custom"
  std::vector<double> link_coeffs;     // orthonormal basis, used when custom

  int d = 16;
  int r = 8;
  std::vector<int> index_set;          // empty: first r coordinates
  double tau = 0.1;
  EmbeddingKind embed = EmbeddingKind::kQuadratic;

  GatingConstants gate;                // rho, b (tau mirrored from data.tau)
  TruncationSpec trunc;

  double gamma0 = 0.5;
  double eta = 1.0;
  bool eta_auto = true;
  double lambda1 = 0.0;
  bool lambda1_inv_eta = true;
  double lambda2 = 1e-3;
  bool lambda2_grid = true;
  std::vector<double> lambda2_grid_values = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
  int n_pt = 100;
  int t1 = 100;
  int t2 = 64;
  int m = 64;

  std::vector<int> n_grid = {1, 5, 10, 20, 40};
  int eval_tasks = 32;
  int eval_prompts = 32;
  std::string metric = "abs";          // abs | sq

  bool baseline_zero = true;
  bool baseline_krr_full = false;
  bool baseline_krr_intrinsic = true;
  double krr_bandwidth = 1.0;
  double krr_ridge = 1.0;

  int diag_fit_prompts = 256;
  int diag_fit_n = 0;                  // 0: use n_pt
  double diag_r2_margin = 0.5;
  double diag_mass_ratio_min = 2.0;
  double diag_cosine_min = 0.9;
  std::int64_t diag_oracle_samples = 4000000;
  std::int64_t diag_reduction_samples = 10000000;

  int dump_prompts = 0;

  LinkFunction link() const;
  FeatureSpace space() const;
  TaskDistribution distribution() const;
  GatingConstants gating() const;      // gate with tau filled in
  Metric metric_kind() const;
  int fit_n() const { return diag_fit_n > 0 ? diag_fit_n : n_pt; }
};

// Parses the flat key-value text. Throws ValidationError listing every
// offending field on a separate line.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Canonical serialization: every key, fixed order, fmt_g17 numbers.
std::string config_to_string(const ExperimentConfig& cfg);

}  // namespace icl
