#include "icl/hermite.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "icl/errors.hpp"
#include "icl/parallel.hpp"

namespace icl {

double he(int k, double z) {
  if (k < 0) throw ValidationError("he: order must be nonnegative");
  if (k > kMaxHermiteOrder) {
    std::ostringstream msg;
    msg << "he: order " << k << " exceeds guard " << kMaxHermiteOrder;
    throw ValidationError(msg.str());
  }
  if (k == 0) return 1.0;
  if (k == 1) return z;
  double prev = 1.0, cur = z;
  for (int i = 1; i < k; ++i) {
    const double next = z * cur - static_cast<double>(i) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double sqrt_factorial(int k) {
  static const std::vector<double> table = [] {
    std::vector<double> t(kMaxHermiteOrder + 1, 1.0);
    for (int i = 1; i <= kMaxHermiteOrder; ++i) t[i] = t[i - 1] * std::sqrt(static_cast<double>(i));
    return t;
  }();
  if (k < 0 || k > kMaxHermiteOrder) throw ValidationError("sqrt_factorial: order out of range");
  return table[k];
}

namespace {
// Orthonormal-basis Hermite values (He_k / sqrt(k!)) at x for k = n-1, n.
// The normalized recurrence keeps magnitudes tame for large n.
std::pair<long double, long double> hermite_orthonormal_pair(int n, long double x) {
  long double prev = 1.0L, cur = x;  // k = 0, 1
  for (int k = 1; k < n; ++k) {
    const long double next =
        (x * cur - std::sqrt(static_cast<long double>(k)) * prev) /
        std::sqrt(static_cast<long double>(k + 1));
    prev = cur;
    cur = next;
  }
  return {prev, cur};  // orders n-1 and n
}
}  // namespace

GaussHermiteRule::GaussHermiteRule(int n) {
  if (n < 1) throw ValidationError("GaussHermiteRule: need at least one node");
  if (n == 1) {
    nodes = Vec::Zero(1);
    weights = Vec::Ones(1);
    return;
  }
  // Golub-Welsch on the Jacobi matrix of the probabilists' recurrence
  // (off-diagonal sqrt(i)), then Newton-polish each node on the
  // orthonormal recurrence and use the analytic weights
  // w_i = 1 / (n * hat_He_{n-1}(x_i)^2).
  Mat jacobi = Mat::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double off = std::sqrt(static_cast<double>(i));
    jacobi(i - 1, i) = off;
    jacobi(i, i - 1) = off;
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(jacobi);
  if (eig.info() != Eigen::Success) throw NumericalError("GaussHermiteRule: eigensolver failed");
  nodes = eig.eigenvalues();
  weights.resize(n);
  const long double sqrt_n = std::sqrt(static_cast<long double>(n));
  for (int i = 0; i < n; ++i) {
    long double x = nodes[i];
    for (int it = 0; it < 3; ++it) {
      const auto [below, at] = hermite_orthonormal_pair(n, x);
      // He_n'(x) = n He_{n-1}(x), so the Newton step is at/(below sqrt(n)).
      if (below == 0.0L) break;
      x -= at / (below * sqrt_n);
    }
    const auto [below, at] = hermite_orthonormal_pair(n, x);
    (void)at;
    nodes[i] = static_cast<double>(x);
    weights[i] = static_cast<double>(1.0L / (static_cast<long double>(n) * below * below));
  }
  weights /= weights.sum();
}

namespace {
// Entries are never erased, so returned references stay valid.
const GaussHermiteRule& cached_rule(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(n);
  return *slot;
}
}  // namespace

double gauss_hermite_inner(const std::function<double(double)>& h, int k, int nodes) {
  const GaussHermiteRule& rule = cached_rule(nodes);
  double acc = 0.0;
  for (int i = 0; i < nodes; ++i) {
    const double z = rule.nodes[i];
    const double v = h(z) * he(k, z);
    if (!std::isfinite(v)) {
      std::ostringstream msg;
      msg << "gauss_hermite_inner: non-finite integrand at node z=" << z;
      throw NumericalError(msg.str());
    }
    acc += rule.weights[i] * v;
  }
  return acc;
}

McEstimate mc_inner(const std::function<double(double)>& h, int k, std::int64_t samples,
                    RngStream rng) {
  if (samples < 1000) throw ValidationError("mc_inner: need at least 1e3 samples");
  double sum = 0.0, sumsq = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    const double z = rng.gaussian();
    const double v = h(z) * he(k, z);
    sum += v;
    sumsq += v * v;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  if (!std::isfinite(mean)) throw NumericalError("mc_inner: non-finite sample mean");
  const double var = std::max(0.0, (sumsq - n * mean * mean) / (n - 1.0));
  return {mean, std::sqrt(var / n)};
}

LinkFunction::LinkFunction(std::vector<double> orthonormal_coeffs) : coeffs_(std::move(orthonormal_coeffs)) {
  if (coeffs_.empty()) throw ValidationError("LinkFunction: empty coefficient list");
  if (static_cast<int>(coeffs_.size()) - 1 > kMaxHermiteOrder)
    throw ValidationError("LinkFunction: degree exceeds Hermite order guard");
  coeffs_[0] = 0.0;  // center to Gaussian mean zero
  double norm2 = 0.0;
  for (double c : coeffs_) norm2 += c * c;
  if (norm2 <= 0.0) throw ValidationError("LinkFunction: zero function after centering");
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& c : coeffs_) c *= inv;
  degree_ = 0;
  for (int k = static_cast<int>(coeffs_.size()) - 1; k >= 1; --k) {
    if (std::abs(coeffs_[k]) > 1e-14) {
      degree_ = k;
      break;
    }
  }
  coeffs_.resize(degree_ + 1);
}

LinkFunction LinkFunction::preset(const std::string& name) {
  if (name == "he1") return LinkFunction({0.0, 1.0});
  if (name == "he2") return LinkFunction({0.0, 0.0, 1.0});
  if (name == "he3") return LinkFunction({0.0, 0.0, 0.0, 1.0});
  if (name == "he4") return LinkFunction({0.0, 0.0, 0.0, 0.0, 1.0});
  throw ValidationError("LinkFunction: unknown preset '" + name + "'");
}

double LinkFunction::operator()(double z) const {
  double acc = coeffs_[0];
  if (degree_ == 0) return acc;
  double prev = 1.0, cur = z;  // He_0, He_1
  acc += coeffs_[1] * cur;
  for (int k = 2; k <= degree_; ++k) {
    const double next = z * cur - static_cast<double>(k - 1) * prev;
    prev = cur;
    cur = next;
    acc += coeffs_[k] * cur / sqrt_factorial(k);
  }
  return acc;
}

double LinkFunction::hermite_coeff(int k) const {
  if (k < 0 || k > degree_) return 0.0;
  return coeffs_[k] * sqrt_factorial(k);
}

bool LinkFunction::is_even(double tol) const {
  for (int k = 1; k <= degree_; k += 2)
    if (std::abs(coeffs_[k]) > tol) return false;
  return true;
}

void validate(const GatingConstants& gc) {
  if (!(gc.rho > 0.0)) throw ValidationError("GatingConstants: rho must be positive");
  if (!(gc.tau >= 0.0)) throw ValidationError("GatingConstants: tau must be nonnegative");
  if (!std::isfinite(gc.b)) throw ValidationError("GatingConstants: b must be finite");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_derivative(int k, double z) {
  const double s = sigmoid(z);
  switch (k) {
    case 0:
      return s;
    case 1:
      return s * (1.0 - s);
    case 2:
      return s * (1.0 - s) * (1.0 - 2.0 * s);
    case 3:
      return s * (1.0 - s) * (1.0 - 6.0 * s + 6.0 * s * s);
    default:
      throw ValidationError("sigmoid_derivative: only orders 0..3 are provided");
  }
}

namespace {
// Enough nodes to integrate g * He_k exactly for every k probed here.
int exact_nodes_for(const LinkFunction& g, int k_max) {
  return (g.degree() + k_max) / 2 + 2;
}
}  // namespace

int information_exponent(const LinkFunction& g, double tol) {
  const int nodes = exact_nodes_for(g, g.degree());
  for (int i = 1; i <= g.degree(); ++i) {
    const double h = gauss_hermite_inner([&](double z) { return g(z); }, i, nodes);
    if (std::abs(h) > tol) return i;
  }
  throw NumericalError("information_exponent: no coefficient above tolerance up to deg(g)");
}

int generative_exponent(const LinkFunction& g, double tol) {
  return g.is_even(tol) ? 2 : 1;
}

EstimatorSpec EstimatorSpec::quadrature(int nodes) {
  EstimatorSpec e;
  e.kind = kQuadrature;
  e.nodes = nodes;
  return e;
}

EstimatorSpec EstimatorSpec::monte_carlo(std::int64_t samples, RngStream rng, int workers) {
  EstimatorSpec e;
  e.kind = kMonteCarlo;
  e.samples = samples;
  e.rng = rng;
  e.workers = workers;
  return e;
}

HermiteExpansion hermite_expand(const std::function<double(double)>& h, int p_max,
                                const EstimatorSpec& est) {
  HermiteExpansion out;
  out.max_order = p_max;
  out.coeffs.assign(p_max + 1, 0.0);
  out.std_errors.assign(p_max + 1, 0.0);
  if (est.kind == EstimatorSpec::kQuadrature) {
    for (int p = 0; p <= p_max; ++p) out.coeffs[p] = gauss_hermite_inner(h, p, est.nodes);
    return out;
  }
  // Monte Carlo sharing one Gaussian sample across all orders, in blocks
  // with per-block child streams and an index-ordered reduction.
  const std::int64_t block = 1 << 20;
  const std::int64_t nblocks = (est.samples + block - 1) / block;
  std::vector<std::vector<double>> sums(nblocks), sumsqs(nblocks);
  parallel_for(static_cast<std::size_t>(nblocks), est.workers, [&](std::size_t bi) {
    RngStream rng = est.rng.child(bi);
    const std::int64_t lo = static_cast<std::int64_t>(bi) * block;
    const std::int64_t hi = std::min<std::int64_t>(lo + block, est.samples);
    std::vector<double> s(p_max + 1, 0.0), s2(p_max + 1, 0.0);
    for (std::int64_t i = lo; i < hi; ++i) {
      const double z = rng.gaussian();
      const double hz = h(z);
      double prev = 1.0, cur = z;
      for (int p = 0; p <= p_max; ++p) {
        const double hep = (p == 0) ? 1.0 : cur;
        const double v = hz * hep;
        s[p] += v;
        s2[p] += v * v;
        if (p >= 1) {
          const double next = z * cur - static_cast<double>(p) * prev;
          prev = cur;
          cur = next;
        }
      }
    }
    sums[bi] = std::move(s);
    sumsqs[bi] = std::move(s2);
  });
  const double n = static_cast<double>(est.samples);
  for (int p = 0; p <= p_max; ++p) {
    double s = 0.0, s2 = 0.0;
    for (std::int64_t bi = 0; bi < nblocks; ++bi) {
      s += sums[bi][p];
      s2 += sumsqs[bi][p];
    }
    const double mean = s / n;
    const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
    out.coeffs[p] = mean;
    out.std_errors[p] = std::sqrt(var / n);
    if (!std::isfinite(mean)) throw NumericalError("hermite_expand: non-finite Monte-Carlo sum");
  }
  return out;
}

HermiteExpansion a_coeffs(const LinkFunction& g, const GatingConstants& gc,
                          const TruncationSpec& trunc, int p_max, const EstimatorSpec& est) {
  if (p_max < 2) throw ValidationError("a_coeffs: p_max must be at least 2");
  validate(gc);
  const double rho = gc.rho, b = gc.b, tau = gc.tau;
  auto gbar = [&, trunc](double z) {
    const double v = g(z) / rho;
    if (trunc.enabled && std::abs(v) > trunc.threshold) return 0.0;
    return v;
  };
  auto A = [&](double z) {
    const double gb = gbar(z);
    return 0.5 * ((rho * gb + tau) * sigmoid(gb + tau / rho + b) +
                  (rho * gb - tau) * sigmoid(gb - tau / rho + b));
  };
  return hermite_expand(A, p_max, est);
}

BoundsReport sigmoid_derivative_bounds_check(int k, const std::vector<double>& z_grid) {
  if (k < 0 || k > 3) throw ValidationError("sigmoid_derivative_bounds_check: k must be 0..3");
  for (double z : z_grid) {
    if (!(z < -static_cast<double>(k) - 2.0)) {
      std::ostringstream msg;
      msg << "sigmoid_derivative_bounds_check: grid point z=" << z << " violates z < " << (-k - 2);
      throw ValidationError(msg.str());
    }
  }
  BoundsReport report;
  for (double z : z_grid) {
    const double d = sigmoid_derivative(k, z);
    const double ez = std::exp(z);
    if (!(d >= 0.5 * ez && d <= 2.0 * ez)) {
      report.holds = false;
      report.violations.push_back(z);
    }
  }
  return report;
}

}  // namespace icl
