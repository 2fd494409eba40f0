#include "icl/expcli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "icl/errors.hpp"
#include "icl/parallel.hpp"
#include "icl/svg.hpp"

namespace icl {

namespace fs = std::filesystem;

Model Checkpoint::model() const {
  Model m;
  m.mamba.gamma = gamma_star;
  m.mamba.gc = config.gating();
  m.mlp.u = u_star;
  m.mlp.v = v_star;
  m.mlp.a = a_star;
  return m;
}

namespace {
std::string vec_to_line(const Vec& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt_g17(v[i]);
  }
  return out;
}

Vec line_to_vec(const std::string& line) {
  std::istringstream in(line);
  std::vector<double> vals;
  double v;
  while (in >> v) vals.push_back(v);
  return Eigen::Map<Vec>(vals.data(), static_cast<int>(vals.size()));
}
}  // namespace

std::string checkpoint_to_string(const Checkpoint& cp) {
  std::ostringstream out;
  out << "icl_checkpoint_v1\n";
  out << config_to_string(cp.config);
  out << "ckpt.eta_used = " << fmt_g17(cp.eta_used) << "\n";
  out << "ckpt.chosen_lambda2 = " << fmt_g17(cp.chosen_lambda2) << "\n";
  out << "ckpt.kkt_residual = " << fmt_g17(cp.kkt_residual) << "\n";
  out << "ckpt.train_loss = " << fmt_g17(cp.train_loss) << "\n";
  out << "ckpt.activation_rate = " << fmt_g17(cp.activation_rate) << "\n";
  out << "ckpt.rng_paths = stage1:" << kStreamStage1 << " stage2:" << kStreamStage2
      << " stage2_init:" << kStreamStage2Init << " eval:" << kStreamEval << " diag:" << kStreamDiag
      << " diag_mc:" << kStreamDiagMc << "\n";
  out << "ckpt.gamma_star = " << vec_to_line(cp.gamma_star) << "\n";
  out << "ckpt.u_star = " << vec_to_line(cp.u_star) << "\n";
  out << "ckpt.v_star = " << vec_to_line(cp.v_star) << "\n";
  out << "ckpt.a_star = " << vec_to_line(cp.a_star) << "\n";
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "icl_checkpoint_v1")
    throw ValidationError("checkpoint: missing icl_checkpoint_v1 header");
  std::ostringstream config_text;
  Checkpoint cp;
  bool have_gamma = false, have_u = false, have_v = false, have_a = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw ValidationError("checkpoint: malformed line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key.rfind("ckpt.", 0) != 0) {
      config_text << line << "\n";
      continue;
    }
    if (key == "ckpt.eta_used") cp.eta_used = std::stod(value);
    else if (key == "ckpt.chosen_lambda2") cp.chosen_lambda2 = std::stod(value);
    else if (key == "ckpt.kkt_residual") cp.kkt_residual = std::stod(value);
    else if (key == "ckpt.train_loss") cp.train_loss = std::stod(value);
    else if (key == "ckpt.activation_rate") cp.activation_rate = std::stod(value);
    else if (key == "ckpt.rng_paths") { /* informational */ }
    else if (key == "ckpt.gamma_star") { cp.gamma_star = line_to_vec(value); have_gamma = true; }
    else if (key == "ckpt.u_star") { cp.u_star = line_to_vec(value); have_u = true; }
    else if (key == "ckpt.v_star") { cp.v_star = line_to_vec(value); have_v = true; }
    else if (key == "ckpt.a_star") { cp.a_star = line_to_vec(value); have_a = true; }
    else throw ValidationError("checkpoint: unknown key " + key);
  }
  if (!(have_gamma && have_u && have_v && have_a))
    throw ValidationError("checkpoint: missing parameter vectors");
  cp.config = parse_config(config_text.str());
  const int expect =
      cp.config.embed == EmbeddingKind::kQuadratic ? phi_dim(cp.config.d) : cp.config.d;
  if (cp.gamma_star.size() != expect)
    throw ValidationError("checkpoint: gamma_star length does not match config dimensions");
  return cp;
}

void write_checkpoint(const std::string& path, const Checkpoint& cp) {
  write_file(path, checkpoint_to_string(cp));
}

Checkpoint read_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path)); }

namespace {
ExperimentConfig apply_overrides(ExperimentConfig cfg, const RunOptions& opts) {
  if (opts.seed_override) cfg.master_seed = *opts.seed_override;
  if (opts.out_dir_override) cfg.out_dir = *opts.out_dir_override;
  return cfg;
}

void ensure_out_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + cfg.out_dir);
}
}  // namespace

Checkpoint run_pretrain(ExperimentConfig cfg, const RunOptions& opts) {
  cfg = apply_overrides(cfg, opts);
  ensure_out_dir(cfg);
  const auto t_start = std::chrono::steady_clock::now();
  const TaskDistribution dist = cfg.distribution();
  RngStream root(cfg.master_seed);

  auto [mamba0, mlp0] = init_params(cfg.d, cfg.gamma0, cfg.gating(), cfg.m, cfg.embed);
  (void)mlp0;

  Stage1Diagnostics diag;
  const Vec grad =
      stage1_gradient_sampled(dist, cfg.n_pt, cfg.t1, mamba0, root, opts.workers, &diag);
  Stage1Spec s1spec;
  s1spec.eta = cfg.eta;
  s1spec.eta_auto = cfg.eta_auto;
  s1spec.lambda1 = cfg.lambda1;
  s1spec.lambda1_inv_eta = cfg.lambda1_inv_eta;
  const Stage1Result s1 = stage1_update(s1spec, grad, mamba0.gamma);

  MambaParams trained;
  trained.gamma = s1.gamma_star;
  trained.gc = cfg.gating();
  Stage2Spec s2spec;
  s2spec.m = cfg.m;
  s2spec.lambda2 = cfg.lambda2;
  s2spec.lambda2_grid = cfg.lambda2_grid;
  s2spec.grid = cfg.lambda2_grid_values;
  s2spec.t2 = cfg.t2;
  s2spec.n_pt = cfg.n_pt;
  s2spec.workers = opts.workers;
  const Stage2Result s2 = stage2_fit(dist, trained, s2spec, root);

  Checkpoint cp;
  cp.config = cfg;
  cp.gamma_star = s1.gamma_star;
  cp.u_star = s2.u_star;
  cp.v_star = s2.v_star;
  cp.a_star = s2.a_star;
  cp.eta_used = s1.eta_used;
  cp.chosen_lambda2 = s2.chosen_lambda2;
  cp.kkt_residual = s2.kkt_residual;
  cp.train_loss = s2.train_loss;
  cp.activation_rate = diag.activation_rate;
  write_checkpoint(cfg.out_dir + "/checkpoint.txt", cp);

  if (cfg.dump_prompts > 0) {
    std::vector<Prompt> dump(static_cast<std::size_t>(std::min(cfg.dump_prompts, cfg.t1)));
    for (std::size_t t = 0; t < dump.size(); ++t)
      dump[t] = sample_prompt(dist, cfg.n_pt, task_stream(root, kStreamStage1, t), 0, t);
    dump_prompts(cfg.out_dir + "/prompts_stage1.txt", dump);
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  std::ostringstream manifest;
  manifest << "# pretrain run manifest (not byte-stable: contains timings)\n";
  manifest << config_to_string(cfg);
  manifest << "run.wall_seconds = " << fmt_g17(wall) << "\n";
  manifest << "run.workers = " << opts.workers << "\n";
  manifest << "run.stage1_activation_rate = " << fmt_g17(diag.activation_rate) << "\n";
  manifest << "run.stage1_near_kink_tasks = " << diag.near_kink_count << "\n";
  manifest << "run.stage1_min_abs_preact = " << fmt_g17(diag.min_abs_preact) << "\n";
  manifest << "run.eta_used = " << fmt_g17(s1.eta_used) << "\n";
  manifest << "run.chosen_lambda2 = " << fmt_g17(s2.chosen_lambda2) << "\n";
  manifest << "run.stage2_kkt_residual = " << fmt_g17(s2.kkt_residual) << "\n";
  manifest << "run.stage2_max_kkt_residual = " << fmt_g17(s2.max_kkt_residual) << "\n";
  manifest << "run.stage2_train_loss = " << fmt_g17(s2.train_loss) << "\n";
  write_file(cfg.out_dir + "/manifest.txt", manifest.str());
  return cp;
}

namespace {
void check_compatible(const ExperimentConfig& cfg, const Checkpoint& cp) {
  std::vector<std::string> errs;
  if (cfg.d != cp.config.d) errs.push_back("data.d differs from checkpoint");
  if (cfg.r != cp.config.r) errs.push_back("data.r differs from checkpoint");
  if (cfg.embed != cp.config.embed) errs.push_back("embed.kind differs from checkpoint");
  if (cfg.space().index_set != cp.config.space().index_set)
    errs.push_back("data.index_set differs from checkpoint");
  if (!errs.empty()) {
    std::ostringstream msg;
    msg << "sweep/diagnose: checkpoint incompatible with config:";
    for (const auto& e : errs) msg << "\n  - " << e;
    throw ValidationError(msg.str());
  }
}

EmbeddedPrompt embed_prefix(const EmbeddedPrompt& full, int n) {
  EmbeddedPrompt pre;
  pre.d_tilde = full.d_tilde;
  pre.n = n;
  pre.z.resize(full.d_tilde + 1, n + 1);
  pre.z.leftCols(n) = full.z.leftCols(n);
  pre.z.col(n) = full.z.col(full.n);
  return pre;
}

Mat restrict_rows(const Mat& xs, const std::vector<int>& idx) {
  Mat out(static_cast<int>(idx.size()), xs.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<int>(i)) = xs.row(idx[i]);
  return out;
}

Vec restrict_entries(const Vec& x, const std::vector<int>& idx) {
  Vec out(static_cast<int>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<int>(i)] = x[idx[i]];
  return out;
}
}  // namespace

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg_in, const Checkpoint& cp,
                                 const RunOptions& opts) {
  const ExperimentConfig cfg = apply_overrides(cfg_in, opts);
  check_compatible(cfg, cp);
  ensure_out_dir(cfg);
  const TaskDistribution dist = cfg.distribution();
  const Model model = cp.model();
  RngStream root(cfg.master_seed);

  std::vector<int> grid = cfg.n_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  const int n_max = grid.back();
  const int n_grid = static_cast<int>(grid.size());

  std::vector<std::string> models = {"mamba_mlp"};
  if (cfg.baseline_krr_full) models.push_back("krr_full");
  if (cfg.baseline_krr_intrinsic) models.push_back("krr_intrinsic");
  if (cfg.baseline_zero) models.push_back("zero");
  const int n_models = static_cast<int>(models.size());

  const bool want_abs = cfg.metric_kind() == Metric::kAbs;
  const std::vector<int>& idx = dist.space.index_set;

  // per_task[t] holds n_models * n_grid mean errors in model-major order.
  std::vector<std::vector<double>> per_task(cfg.eval_tasks);
  parallel_for(static_cast<std::size_t>(cfg.eval_tasks), opts.workers, [&](std::size_t t) {
    std::vector<double> acc(static_cast<std::size_t>(n_models) * n_grid, 0.0);
    RngStream ts = task_stream(root, kStreamEval, t);
    for (int p = 0; p < cfg.eval_prompts; ++p) {
      const Prompt full = sample_prompt(dist, n_max, ts, p, t);
      const EmbeddedPrompt full_e = embed_prompt(full, cfg.embed);
      const Mat xs_intr = cfg.baseline_krr_intrinsic ? restrict_rows(full.xs, idx) : Mat();
      const Vec q_intr = cfg.baseline_krr_intrinsic ? restrict_entries(full.query, idx) : Vec();
      for (int gi = 0; gi < n_grid; ++gi) {
        const int n = grid[gi];
        for (int mi = 0; mi < n_models; ++mi) {
          double pred = 0.0;
          const std::string& name = models[mi];
          if (name == "mamba_mlp") {
            pred = predict(embed_prefix(full_e, n), model.mamba, model.mlp);
          } else if (name == "krr_full") {
            pred = kernel_ridge_predict(full.xs.leftCols(n), full.ys.head(n), full.query,
                                        cfg.krr_bandwidth, cfg.krr_ridge);
          } else if (name == "krr_intrinsic") {
            pred = kernel_ridge_predict(xs_intr.leftCols(n), full.ys.head(n), q_intr,
                                        cfg.krr_bandwidth, cfg.krr_ridge);
          }  // zero predictor stays 0
          const double err = pred - full.query_label;
          acc[static_cast<std::size_t>(mi) * n_grid + gi] += want_abs ? std::abs(err) : err * err;
        }
      }
    }
    for (double& v : acc) v /= cfg.eval_prompts;
    per_task[t] = std::move(acc);
  });

  std::vector<ResultRow> rows;
  rows.reserve(static_cast<std::size_t>(n_models) * n_grid);
  for (int mi = 0; mi < n_models; ++mi) {
    for (int gi = 0; gi < n_grid; ++gi) {
      double mean = 0.0;
      for (int t = 0; t < cfg.eval_tasks; ++t)
        mean += per_task[t][static_cast<std::size_t>(mi) * n_grid + gi];
      mean /= cfg.eval_tasks;
      double var = 0.0;
      for (int t = 0; t < cfg.eval_tasks; ++t) {
        const double d2 = per_task[t][static_cast<std::size_t>(mi) * n_grid + gi] - mean;
        var += d2 * d2;
      }
      const double std_tasks =
          cfg.eval_tasks > 1 ? std::sqrt(var / (cfg.eval_tasks - 1)) : 0.0;
      ResultRow row;
      row.model = models[mi];
      row.n_context = grid[gi];
      row.d = cfg.d;
      row.r = cfg.r;
      row.seed = cfg.master_seed;
      row.mean_err = mean;
      row.std_err = std_tasks / std::sqrt(static_cast<double>(cfg.eval_tasks));
      row.metric = cfg.metric;
      rows.push_back(std::move(row));
    }
  }
  write_csv(cfg.out_dir + "/results.csv", rows);
  return rows;
}

ReportMap run_diagnose(const ExperimentConfig& cfg_in, const Checkpoint& cp,
                       const RunOptions& opts) {
  const ExperimentConfig cfg = apply_overrides(cfg_in, opts);
  check_compatible(cfg, cp);
  if (cfg.embed != EmbeddingKind::kQuadratic)
    throw ValidationError("diagnose: analysis requires the quadratic embedding");
  ensure_out_dir(cfg);
  const TaskDistribution dist = cfg.distribution();
  const LinkFunction link = cfg.link();
  RngStream root(cfg.master_seed);

  MambaParams trained;
  trained.gamma = cp.gamma_star;
  trained.gc = cfg.gating();

  const int ge = generative_exponent(link);
  std::vector<Prompt> prompts(static_cast<std::size_t>(cfg.diag_fit_prompts));
  parallel_for(prompts.size(), opts.workers, [&](std::size_t i) {
    prompts[i] = sample_prompt(dist, cfg.fit_n(), task_stream(root, kStreamDiag, i), 0, i);
  });
  const FeatureFitReport fit = feature_learning_fit(trained, prompts, cfg.r, ge);
  const AlignmentReport align = gamma_alignment(cp.gamma_star, dist.space);
  RngStream mc = root.child(kStreamDiagMc);
  const ExponentReductionReport red =
      exponent_reduction_report(link, cfg.gating(), cfg.diag_reduction_samples, mc.child(0),
                                opts.workers);
  const Vec oracle = predict_gamma_star(link, cfg.gating(), cfg.gamma0, dist.space, 1.0,
                                        cfg.diag_oracle_samples, mc.child(1), cfg.trunc,
                                        opts.workers);
  const double denom = cp.gamma_star.norm() * oracle.norm();
  const double cosine = denom > 0.0 ? cp.gamma_star.dot(oracle) / denom : 0.0;

  const double margin = fit.r_squared - fit.baseline_r_squared;
  ReportMap reports;
  reports.push_back({"feature_fit",
                     {{"ge_used", std::to_string(fit.ge_used)},
                      {"p1", fmt_g17(fit.p1)},
                      {"p2", fmt_g17(fit.p2)},
                      {"r_squared", fmt_g17(fit.r_squared)},
                      {"baseline_r_squared", fmt_g17(fit.baseline_r_squared)},
                      {"residual_rms", fmt_g17(fit.residual_rms)},
                      {"singular_design", fit.singular_design ? "true" : "false"},
                      {"margin", fmt_g17(margin)},
                      {"margin_threshold", fmt_g17(cfg.diag_r2_margin)},
                      {"pass", margin >= cfg.diag_r2_margin ? "true" : "false"}}});
  reports.push_back({"alignment",
                     {{"mass_on_feature_slots", fmt_g17(align.mass_on_feature_slots)},
                      {"uniform_share", fmt_g17(align.uniform_share)},
                      {"ratio", fmt_g17(align.ratio)},
                      {"ratio_threshold", fmt_g17(cfg.diag_mass_ratio_min)},
                      {"pass", align.ratio > cfg.diag_mass_ratio_min ? "true" : "false"}}});
  {
    std::map<std::string, std::string> fields;
    fields["ie"] = std::to_string(red.ie);
    fields["ge"] = std::to_string(red.ge);
    fields["first_significant"] =
        red.first_significant ? std::to_string(*red.first_significant) : "none";
    fields["matches_ge"] = red.matches_ge ? "true" : "false";
    for (std::size_t p = 0; p < red.estimates.size(); ++p) {
      fields["estimate_p" + std::to_string(p + 1)] = fmt_g17(red.estimates[p]);
      fields["std_error_p" + std::to_string(p + 1)] = fmt_g17(red.std_errors[p]);
    }
    reports.push_back({"exponent_reduction", std::move(fields)});
  }
  reports.push_back({"gamma_oracle",
                     {{"cosine", fmt_g17(cosine)},
                      {"cosine_threshold", fmt_g17(cfg.diag_cosine_min)},
                      {"eta_used", fmt_g17(cp.eta_used)},
                      {"pass", cosine > cfg.diag_cosine_min ? "true" : "false"}}});
  write_file(cfg.out_dir + "/diagnostics.csv", reports_to_csv(reports));
  return reports;
}

void run_plot(const std::string& csv_path, const std::string& svg_path) {
  const std::vector<ResultRow> rows = read_csv(csv_path);
  write_file(svg_path, plot_results_svg(rows));
}

}  // namespace icl
