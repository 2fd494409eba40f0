#include "icl/config.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "icl/errors.hpp"
#include "icl/io.hpp"

namespace icl {

LinkFunction ExperimentConfig::link() const {
  if (link_preset == "custom") return LinkFunction(link_coeffs);
  return LinkFunction::preset(link_preset);
}

FeatureSpace ExperimentConfig::space() const {
  FeatureSpace s;
  s.d = d;
  s.r = r;
  s.index_set = index_set.empty() ? FeatureSpace::first_r(d, r).index_set : index_set;
  return s;
}

TaskDistribution ExperimentConfig::distribution() const {
  return TaskDistribution{space(), link(), tau};
}

GatingConstants ExperimentConfig::gating() const {
  GatingConstants gc = gate;
  gc.tau = tau;
  return gc;
}

Metric ExperimentConfig::metric_kind() const {
  return metric == "sq" ? Metric::kSquared : Metric::kAbs;
}

namespace {

struct Parser {
  std::map<std::string, std::string> pairs;
  std::vector<std::string> errors;

  bool has(const std::string& key) const { return pairs.count(key) > 0; }

  template <typename Fn>
  void take(const std::string& key, Fn&& fn) {
    auto it = pairs.find(key);
    if (it == pairs.end()) return;
    try {
      fn(it->second);
    } catch (const std::exception& e) {
      errors.push_back(key + ": " + e.what());
    }
    pairs.erase(it);
  }

  static double to_double(const std::string& s) {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
  }

  static long long to_int(const std::string& s) {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("bad integer '" + s + "'");
    return v;
  }

  static bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "on") return true;
    if (s == "false" || s == "0" || s == "off") return false;
    throw std::invalid_argument("bad boolean '" + s + "'");
  }

  static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == sep) {
        out.push_back(cur);
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    out.push_back(cur);
    return out;
  }

  static std::vector<double> to_double_list(const std::string& s) {
    std::vector<double> out;
    for (const std::string& item : split(s, ',')) out.push_back(to_double(item));
    return out;
  }

  // "1:40" expands to 1..40; otherwise a comma list.
  static std::vector<int> to_int_list(const std::string& s) {
    std::vector<int> out;
    const auto colon = s.find(':');
    if (colon != std::string::npos) {
      const long long lo = to_int(s.substr(0, colon));
      const long long hi = to_int(s.substr(colon + 1));
      if (lo > hi) throw std::invalid_argument("empty range '" + s + "'");
      for (long long v = lo; v <= hi; ++v) out.push_back(static_cast<int>(v));
      return out;
    }
    for (const std::string& item : split(s, ',')) out.push_back(static_cast<int>(to_int(item)));
    return out;
  }
};

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Parser p;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      p.errors.push_back("line " + std::to_string(line_no) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      p.errors.push_back("line " + std::to_string(line_no) + ": empty key or value");
      continue;
    }
    if (p.pairs.count(key)) p.errors.push_back("duplicate key: " + key);
    p.pairs[key] = value;
  }

  ExperimentConfig cfg;
  p.take("seed", [&](const std::string& v) { cfg.master_seed = static_cast<std::uint64_t>(Parser::to_int(v)); });
  p.take("out.dir", [&](const std::string& v) { cfg.out_dir = v; });
  p.take("link.preset", [&](const std::string& v) { cfg.link_preset = v; });
  p.take("link.coeffs", [&](const std::string& v) { cfg.link_coeffs = Parser::to_double_list(v); });
  p.take("data.d", [&](const std::string& v) { cfg.d = static_cast<int>(Parser::to_int(v)); });
  p.take("data.r", [&](const std::string& v) { cfg.r = static_cast<int>(Parser::to_int(v)); });
  p.take("data.index_set", [&](const std::string& v) { cfg.index_set = Parser::to_int_list(v); });
  p.take("data.tau", [&](const std::string& v) { cfg.tau = Parser::to_double(v); });
  p.take("embed.kind", [&](const std::string& v) {
    if (v == "quadratic") cfg.embed = EmbeddingKind::kQuadratic;
    else if (v == "standard") cfg.embed = EmbeddingKind::kStandard;
    else throw std::invalid_argument("must be quadratic or standard");
  });
  p.take("gate.rho", [&](const std::string& v) { cfg.gate.rho = Parser::to_double(v); });
  p.take("gate.b", [&](const std::string& v) { cfg.gate.b = Parser::to_double(v); });
  p.take("trunc.enabled", [&](const std::string& v) { cfg.trunc.enabled = Parser::to_bool(v); });
  p.take("trunc.threshold", [&](const std::string& v) { cfg.trunc.threshold = Parser::to_double(v); });
  p.take("train.gamma0", [&](const std::string& v) { cfg.gamma0 = Parser::to_double(v); });
  p.take("train.eta", [&](const std::string& v) {
    if (v == "auto") {
      cfg.eta_auto = true;
    } else {
      cfg.eta_auto = false;
      cfg.eta = Parser::to_double(v);
    }
  });
  p.take("train.lambda1", [&](const std::string& v) {
    if (v == "inv_eta") {
      cfg.lambda1_inv_eta = true;
    } else {
      cfg.lambda1_inv_eta = false;
      cfg.lambda1 = Parser::to_double(v);
    }
  });
  p.take("train.lambda2", [&](const std::string& v) {
    if (v == "grid") {
      cfg.lambda2_grid = true;
    } else {
      cfg.lambda2_grid = false;
      cfg.lambda2 = Parser::to_double(v);
    }
  });
  p.take("train.lambda2_grid", [&](const std::string& v) { cfg.lambda2_grid_values = Parser::to_double_list(v); });
  p.take("train.n_pt", [&](const std::string& v) { cfg.n_pt = static_cast<int>(Parser::to_int(v)); });
  p.take("train.t1", [&](const std::string& v) { cfg.t1 = static_cast<int>(Parser::to_int(v)); });
  p.take("train.t2", [&](const std::string& v) { cfg.t2 = static_cast<int>(Parser::to_int(v)); });
  p.take("train.m", [&](const std::string& v) { cfg.m = static_cast<int>(Parser::to_int(v)); });
  p.take("eval.n_grid", [&](const std::string& v) { cfg.n_grid = Parser::to_int_list(v); });
  p.take("eval.tasks", [&](const std::string& v) { cfg.eval_tasks = static_cast<int>(Parser::to_int(v)); });
  p.take("eval.prompts_per_task", [&](const std::string& v) { cfg.eval_prompts = static_cast<int>(Parser::to_int(v)); });
  p.take("eval.metric", [&](const std::string& v) {
    if (v != "abs" && v != "sq") throw std::invalid_argument("must be abs or sq");
    cfg.metric = v;
  });
  p.take("baselines.zero", [&](const std::string& v) { cfg.baseline_zero = Parser::to_bool(v); });
  p.take("baselines.krr_full", [&](const std::string& v) { cfg.baseline_krr_full = Parser::to_bool(v); });
  p.take("baselines.krr_intrinsic", [&](const std::string& v) { cfg.baseline_krr_intrinsic = Parser::to_bool(v); });
  p.take("krr.bandwidth", [&](const std::string& v) { cfg.krr_bandwidth = Parser::to_double(v); });
  p.take("krr.ridge", [&](const std::string& v) { cfg.krr_ridge = Parser::to_double(v); });
  p.take("diag.fit_prompts", [&](const std::string& v) { cfg.diag_fit_prompts = static_cast<int>(Parser::to_int(v)); });
  p.take("diag.fit_n", [&](const std::string& v) { cfg.diag_fit_n = static_cast<int>(Parser::to_int(v)); });
  p.take("diag.r2_margin", [&](const std::string& v) { cfg.diag_r2_margin = Parser::to_double(v); });
  p.take("diag.mass_ratio_min", [&](const std::string& v) { cfg.diag_mass_ratio_min = Parser::to_double(v); });
  p.take("diag.cosine_min", [&](const std::string& v) { cfg.diag_cosine_min = Parser::to_double(v); });
  p.take("diag.oracle_samples", [&](const std::string& v) { cfg.diag_oracle_samples = Parser::to_int(v); });
  p.take("diag.reduction_samples", [&](const std::string& v) { cfg.diag_reduction_samples = Parser::to_int(v); });
  p.take("out.dump_prompts", [&](const std::string& v) { cfg.dump_prompts = static_cast<int>(Parser::to_int(v)); });

  for (const auto& [key, value] : p.pairs) p.errors.push_back("unknown key: " + key);

  // Cross-field validation; every failure is reported, not just the first.
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) p.errors.push_back(msg);
  };
  check(cfg.d >= 1, "data.d: must be positive");
  check(cfg.r >= 1, "data.r: must be positive");
  check(cfg.r <= cfg.d, "data.r: must not exceed data.d");
  if (!cfg.index_set.empty()) {
    check(static_cast<int>(cfg.index_set.size()) == cfg.r, "data.index_set: size must equal data.r");
    std::vector<int> sorted = cfg.index_set;
    std::sort(sorted.begin(), sorted.end());
    check(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "data.index_set: indices must be distinct");
    check(sorted == cfg.index_set, "data.index_set: indices must be sorted ascending");
    for (int idx : cfg.index_set)
      check(idx >= 0 && idx < cfg.d, "data.index_set: index out of [0, d)");
  }
  check(cfg.tau >= 0.0, "data.tau: must be nonnegative");
  check(cfg.gate.rho > 0.0, "gate.rho: must be positive");
  check(std::isfinite(cfg.gate.b), "gate.b: must be finite");
  check(cfg.trunc.threshold > 0.0, "trunc.threshold: must be positive");
  check(std::isfinite(cfg.gamma0), "train.gamma0: must be finite");
  if (!cfg.eta_auto) check(cfg.eta > 0.0, "train.eta: must be positive or 'auto'");
  if (!cfg.lambda1_inv_eta) check(cfg.lambda1 >= 0.0, "train.lambda1: must be nonnegative or 'inv_eta'");
  if (!cfg.lambda2_grid) check(cfg.lambda2 > 0.0, "train.lambda2: must be positive or 'grid'");
  check(!cfg.lambda2_grid_values.empty(), "train.lambda2_grid: must be nonempty");
  for (double v : cfg.lambda2_grid_values) check(v > 0.0, "train.lambda2_grid: entries must be positive");
  check(cfg.eta_auto ? cfg.lambda1_inv_eta : true,
        "train.eta: auto scaling requires train.lambda1 = inv_eta");
  check(cfg.n_pt >= 1, "train.n_pt: must be positive");
  check(cfg.t1 >= 1, "train.t1: must be positive");
  check(cfg.t2 >= 1, "train.t2: must be positive");
  check(cfg.m >= 1, "train.m: must be positive");
  check(!cfg.n_grid.empty(), "eval.n_grid: must be nonempty");
  for (int n : cfg.n_grid) check(n >= 1, "eval.n_grid: entries must be positive");
  check(cfg.eval_tasks >= 1, "eval.tasks: must be positive");
  check(cfg.eval_prompts >= 1, "eval.prompts_per_task: must be positive");
  check(cfg.krr_bandwidth > 0.0, "krr.bandwidth: must be positive");
  check(cfg.krr_ridge >= 0.0, "krr.ridge: must be nonnegative");
  check(cfg.diag_fit_prompts >= 3, "diag.fit_prompts: need at least 3");
  check(cfg.diag_fit_n >= 0, "diag.fit_n: must be nonnegative (0 = use n_pt)");
  check(cfg.diag_oracle_samples >= 1000, "diag.oracle_samples: need at least 1e3");
  check(cfg.diag_reduction_samples >= 1000, "diag.reduction_samples: need at least 1e3");
  check(cfg.dump_prompts >= 0, "out.dump_prompts: must be nonnegative");
  if (cfg.link_preset == "custom") {
    check(!cfg.link_coeffs.empty(), "link.coeffs: required when link.preset = custom");
  } else {
    check(cfg.link_preset == "he1" || cfg.link_preset == "he2" || cfg.link_preset == "he3" ||
              cfg.link_preset == "he4",
          "link.preset: must be he1..he4 or custom");
  }
  if (p.errors.empty()) {
    try {
      (void)cfg.link();
    } catch (const std::exception& e) {
      p.errors.push_back(std::string("link: ") + e.what());
    }
  }

  if (!p.errors.empty()) {
    std::ostringstream msg;
    msg << "config validation failed:";
    for (const std::string& e : p.errors) msg << "\n  - " << e;
    throw ValidationError(msg.str());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

namespace {
std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += fmt_g17(v[i]);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}
}  // namespace

std::string config_to_string(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "seed = " << cfg.master_seed << "\n";
  out << "out.dir = " << cfg.out_dir << "\n";
  out << "link.preset = " << cfg.link_preset << "\n";
  if (!cfg.link_coeffs.empty()) out << "link.coeffs = " << join_doubles(cfg.link_coeffs) << "\n";
  out << "data.d = " << cfg.d << "\n";
  out << "data.r = " << cfg.r << "\n";
  out << "data.index_set = " << join_ints(cfg.space().index_set) << "\n";
  out << "data.tau = " << fmt_g17(cfg.tau) << "\n";
  out << "embed.kind = " << (cfg.embed == EmbeddingKind::kQuadratic ? "quadratic" : "standard") << "\n";
  out << "gate.rho = " << fmt_g17(cfg.gate.rho) << "\n";
  out << "gate.b = " << fmt_g17(cfg.gate.b) << "\n";
  out << "trunc.enabled = " << (cfg.trunc.enabled ? "true" : "false") << "\n";
  out << "trunc.threshold = " << fmt_g17(cfg.trunc.threshold) << "\n";
  out << "train.gamma0 = " << fmt_g17(cfg.gamma0) << "\n";
  out << "train.eta = " << (cfg.eta_auto ? std::string("auto") : fmt_g17(cfg.eta)) << "\n";
  out << "train.lambda1 = " << (cfg.lambda1_inv_eta ? std::string("inv_eta") : fmt_g17(cfg.lambda1)) << "\n";
  out << "train.lambda2 = " << (cfg.lambda2_grid ? std::string("grid") : fmt_g17(cfg.lambda2)) << "\n";
  out << "train.lambda2_grid = " << join_doubles(cfg.lambda2_grid_values) << "\n";
  out << "train.n_pt = " << cfg.n_pt << "\n";
  out << "train.t1 = " << cfg.t1 << "\n";
  out << "train.t2 = " << cfg.t2 << "\n";
  out << "train.m = " << cfg.m << "\n";
  out << "eval.n_grid = " << join_ints(cfg.n_grid) << "\n";
  out << "eval.tasks = " << cfg.eval_tasks << "\n";
  out << "eval.prompts_per_task = " << cfg.eval_prompts << "\n";
  out << "eval.metric = " << cfg.metric << "\n";
  out << "baselines.zero = " << (cfg.baseline_zero ? "true" : "false") << "\n";
  out << "baselines.krr_full = " << (cfg.baseline_krr_full ? "true" : "false") << "\n";
  out << "baselines.krr_intrinsic = " << (cfg.baseline_krr_intrinsic ? "true" : "false") << "\n";
  out << "krr.bandwidth = " << fmt_g17(cfg.krr_bandwidth) << "\n";
  out << "krr.ridge = " << fmt_g17(cfg.krr_ridge) << "\n";
  out << "diag.fit_prompts = " << cfg.diag_fit_prompts << "\n";
  out << "diag.fit_n = " << cfg.diag_fit_n << "\n";
  out << "diag.r2_margin = " << fmt_g17(cfg.diag_r2_margin) << "\n";
  out << "diag.mass_ratio_min = " << fmt_g17(cfg.diag_mass_ratio_min) << "\n";
  out << "diag.cosine_min = " << fmt_g17(cfg.diag_cosine_min) << "\n";
  out << "diag.oracle_samples = " << cfg.diag_oracle_samples << "\n";
  out << "diag.reduction_samples = " << cfg.diag_reduction_samples << "\n";
  out << "out.dump_prompts = " << cfg.dump_prompts << "\n";
  return out.str();
}

}  // namespace icl
