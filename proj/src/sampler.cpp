#include "icl/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "icl/errors.hpp"
#include "icl/io.hpp"

namespace icl {

FeatureSpace FeatureSpace::first_r(int d, int r) {
  FeatureSpace s;
  s.d = d;
  s.r = r;
  s.index_set.resize(r);
  for (int i = 0; i < r; ++i) s.index_set[i] = i;
  return s;
}

void validate(const FeatureSpace& space) {
  if (space.d < 1) throw ValidationError("FeatureSpace: d must be positive");
  if (space.r < 1 || space.r > space.d) throw ValidationError("FeatureSpace: need 1 <= r <= d");
  if (static_cast<int>(space.index_set.size()) != space.r)
    throw ValidationError("FeatureSpace: index_set size must equal r");
  for (std::size_t i = 0; i < space.index_set.size(); ++i) {
    const int idx = space.index_set[i];
    if (idx < 0 || idx >= space.d) throw ValidationError("FeatureSpace: index out of range");
    if (i > 0 && space.index_set[i - 1] >= idx)
      throw ValidationError("FeatureSpace: index_set must be sorted and distinct");
  }
}

Vec sample_feature(const FeatureSpace& space, RngStream rng) {
  validate(space);
  Vec beta = Vec::Zero(space.d);
  for (int attempt = 0; attempt < 64; ++attempt) {
    double norm2 = 0.0;
    for (int idx : space.index_set) {
      const double v = rng.gaussian();
      beta[idx] = v;
      norm2 += v * v;
    }
    if (norm2 > 1e-280) {
      beta /= std::sqrt(norm2);
      return beta;
    }
  }
  throw NumericalError("sample_feature: repeated all-zero draws");
}

std::pair<Vec, double> sample_example(const Vec& beta, const LinkFunction& g, double tau,
                                      RngStream rng) {
  const double zeta = tau * static_cast<double>(rng.sign());
  const int d = static_cast<int>(beta.size());
  Vec x(d);
  for (int i = 0; i < d; ++i) x[i] = rng.gaussian();
  const double y = g(beta.dot(x)) + zeta;
  return {std::move(x), y};
}

Prompt sample_prompt(const TaskDistribution& dist, int n, RngStream task_stream,
                     std::uint64_t prompt_index, std::uint64_t task_id) {
  if (n < 1) throw ValidationError("sample_prompt: context length must be at least 1");
  Prompt p;
  p.n = n;
  p.task_id = task_id;
  p.beta = sample_feature(dist.space, task_stream.child(kRoleFeature));
  RngStream prompt_stream = task_stream.child(kRoleExamples).child(prompt_index);
  p.xs.resize(dist.space.d, n);
  p.ys.resize(n);
  for (int j = 0; j < n; ++j) {
    auto [x, y] = sample_example(p.beta, dist.link, dist.tau, prompt_stream.child(j));
    p.xs.col(j) = x;
    p.ys[j] = y;
  }
  auto [xq, yq] = sample_example(p.beta, dist.link, dist.tau, prompt_stream.child(n));
  p.query = std::move(xq);
  p.query_label = yq;
  return p;
}

RngStream task_stream(RngStream root, StreamStage stage, std::uint64_t task) {
  return root.child(stage).child(task);
}

void dump_prompts(const std::string& path, const std::vector<Prompt>& prompts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("dump_prompts: cannot open " + path);
  const int d = prompts.empty() ? 0 : static_cast<int>(prompts.front().beta.size());
  const int n = prompts.empty() ? 0 : prompts.front().n;
  out << "icl_prompts_v1 records=" << prompts.size() << " d=" << d << " n=" << n << "\n";
  for (const Prompt& p : prompts) {
    if (static_cast<int>(p.beta.size()) != d || p.n != n)
      throw ValidationError("dump_prompts: prompts must share (d, n)");
    out << p.task_id;
    for (int i = 0; i < d; ++i) out << ' ' << fmt_g17(p.beta[i]);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < d; ++i) out << ' ' << fmt_g17(p.xs(i, j));
    for (int j = 0; j < n; ++j) out << ' ' << fmt_g17(p.ys[j]);
    for (int i = 0; i < d; ++i) out << ' ' << fmt_g17(p.query[i]);
    out << ' ' << fmt_g17(p.query_label) << "\n";
  }
  if (!out) throw ValidationError("dump_prompts: write failed for " + path);
}

std::vector<Prompt> load_prompts(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("load_prompts: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "icl_prompts_v1") throw ValidationError("load_prompts: bad header in " + path);
  std::size_t records = 0;
  int d = 0, n = 0;
  std::string field;
  for (int i = 0; i < 3; ++i) {
    in >> field;
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw ValidationError("load_prompts: malformed header field");
    const std::string key = field.substr(0, eq);
    const std::string val = field.substr(eq + 1);
    if (key == "records") records = std::stoull(val);
    else if (key == "d") d = std::stoi(val);
    else if (key == "n") n = std::stoi(val);
    else throw ValidationError("load_prompts: unknown header field " + key);
  }
  std::vector<Prompt> prompts;
  prompts.reserve(records);
  for (std::size_t rec = 0; rec < records; ++rec) {
    Prompt p;
    p.n = n;
    p.beta.resize(d);
    p.xs.resize(d, n);
    p.ys.resize(n);
    p.query.resize(d);
    if (!(in >> p.task_id)) throw ValidationError("load_prompts: truncated record");
    for (int i = 0; i < d; ++i) in >> p.beta[i];
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < d; ++i) in >> p.xs(i, j);
    for (int j = 0; j < n; ++j) in >> p.ys[j];
    for (int i = 0; i < d; ++i) in >> p.query[i];
    in >> p.query_label;
    if (!in) throw ValidationError("load_prompts: truncated record");
    prompts.push_back(std::move(p));
  }
  return prompts;
}

}  // namespace icl
