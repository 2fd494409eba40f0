#pragma once

#include <optional>
#include <string>

#include "icl/analysis.hpp"
#include "icl/config.hpp"
#include "icl/io.hpp"

namespace icl {

// Trained parameters plus the config they were trained under; the text
// serialization is byte-stable for a fixed (config, seed).
struct Checkpoint {
  ExperimentConfig config;
  Vec gamma_star;
  Vec u_star;
  Vec v_star;
  Vec a_star;
  double eta_used = 0.0;
  double chosen_lambda2 = 0.0;
  double kkt_residual = 0.0;
  double train_loss = 0.0;
  double activation_rate = 0.0;

  Model model() const;
};

std::string checkpoint_to_string(const Checkpoint& cp);
Checkpoint parse_checkpoint(const std::string& text);
void write_checkpoint(const std::string& path, const Checkpoint& cp);
Checkpoint read_checkpoint(const std::string& path);

struct RunOptions {
  int workers = 1;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_dir_override;
};

// pretrain: init -> stage I -> stage II; writes checkpoint.txt and
// manifest.txt under the output directory and returns the checkpoint.
Checkpoint run_pretrain(ExperimentConfig cfg, const RunOptions& opts);

// sweep: evaluates the checkpointed model and the enabled baselines on
// every context length of the grid; writes results.csv. One prompt of
// length max(grid) is drawn per (task, prompt) pair and every grid value
// is evaluated on its prefix, shared across models.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg, const Checkpoint& cp,
                                 const RunOptions& opts);

// diagnose: feature-learning fit, alignment, exponent reduction, and the
// one-step oracle comparison; writes diagnostics.csv.
ReportMap run_diagnose(const ExperimentConfig& cfg, const Checkpoint& cp, const RunOptions& opts);

// plot: CSV in the sweep schema -> SVG.
void run_plot(const std::string& csv_path, const std::string& svg_path);

// selftest: fast invariant suites, one PASS/FAIL line each; returns the
// number of failures.
int run_selftest(int workers);

}  // namespace icl
