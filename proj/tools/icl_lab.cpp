// Command-line front end: pretrain, sweep, diagnose, plot, selftest.
#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>

#include "icl/errors.hpp"
#include "icl/expcli.hpp"

namespace {

icl::RunOptions make_options(int workers, const std::string& out_dir, bool have_seed,
                             std::uint64_t seed) {
  icl::RunOptions opts;
  opts.workers = workers;
  if (!out_dir.empty()) {
    opts.out_dir_override = out_dir;
  } else if (const char* env = std::getenv("ICL_OUT_DIR"); env && *env) {
    // The one permitted environment override: the output directory.
    opts.out_dir_override = std::string(env);
  }
  if (have_seed) opts.seed_override = seed;
  return opts;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"In-context learning lab: one-layer gated SSM on single-index tasks"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, out_dir, csv_path;
  int workers = 1;
  std::uint64_t seed = 0;
  bool have_seed = false;
  auto add_common = [&](CLI::App* sub, bool need_config, bool need_checkpoint) {
    if (need_config) sub->add_option("--config", config_path, "config file path")->required();
    if (need_checkpoint)
      sub->add_option("--checkpoint", checkpoint_path, "checkpoint file path")->required();
    sub->add_option("--out", out_dir, "output directory override");
    sub->add_option("--workers", workers, "worker thread count")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
      have_seed = true;
    });
  };

  CLI::App* pretrain = app.add_subcommand("pretrain", "run the two-stage pretraining");
  add_common(pretrain, true, false);
  CLI::App* sweep = app.add_subcommand("sweep", "evaluate model and baselines over the N grid");
  add_common(sweep, true, true);
  CLI::App* diagnose = app.add_subcommand("diagnose", "feature-learning and oracle diagnostics");
  add_common(diagnose, true, true);
  CLI::App* plot = app.add_subcommand("plot", "render a sweep CSV as an SVG chart");
  plot->add_option("csv", csv_path, "sweep CSV path")->required();
  plot->add_option("--out", out_dir, "output directory (default: alongside the CSV)");
  CLI::App* selftest = app.add_subcommand("selftest", "run the built-in invariant suites");
  selftest->add_option("--workers", workers, "worker thread count")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    const icl::RunOptions opts = make_options(workers, out_dir, have_seed, seed);
    if (app.got_subcommand(pretrain)) {
      const icl::ExperimentConfig cfg = icl::load_config(config_path);
      const icl::Checkpoint cp = icl::run_pretrain(cfg, opts);
      std::printf("checkpoint: %s/checkpoint.txt (eta=%s, lambda2=%s)\n",
                  cp.config.out_dir.c_str(), icl::fmt_g17(cp.eta_used).c_str(),
                  icl::fmt_g17(cp.chosen_lambda2).c_str());
    } else if (app.got_subcommand(sweep)) {
      const icl::ExperimentConfig cfg = icl::load_config(config_path);
      const icl::Checkpoint cp = icl::read_checkpoint(checkpoint_path);
      const auto rows = icl::run_sweep(cfg, cp, opts);
      std::printf("wrote %zu rows\n", rows.size());
    } else if (app.got_subcommand(diagnose)) {
      const icl::ExperimentConfig cfg = icl::load_config(config_path);
      const icl::Checkpoint cp = icl::read_checkpoint(checkpoint_path);
      const auto reports = icl::run_diagnose(cfg, cp, opts);
      for (const auto& [name, fields] : reports) {
        const auto pass = fields.find("pass");
        std::printf("%s%s\n", name.c_str(),
                    pass == fields.end() ? "" : (pass->second == "true" ? ": pass" : ": FAIL"));
      }
    } else if (app.got_subcommand(plot)) {
      std::string svg = csv_path;
      const auto slash = svg.find_last_of('/');
      const std::string base = slash == std::string::npos ? svg : svg.substr(slash + 1);
      const std::string stem = base.substr(0, base.find_last_of('.'));
      const std::string dir =
          !out_dir.empty() ? out_dir : (slash == std::string::npos ? "." : svg.substr(0, slash));
      icl::run_plot(csv_path, dir + "/" + stem + ".svg");
      std::printf("wrote %s/%s.svg\n", dir.c_str(), stem.c_str());
    } else if (app.got_subcommand(selftest)) {
      const int failures = icl::run_selftest(workers);
      if (failures > 0) {
        std::fprintf(stderr, "selftest: %d failure(s)\n", failures);
        return 3;
      }
      std::printf("selftest: all suites passed\n");
    }
  } catch (const icl::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const icl::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "unexpected error: %s\n", e.what());
    return 3;
  }
  return 0;
}
