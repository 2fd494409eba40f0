#include "icl/mamba.hpp"

#include <cmath>
#include <sstream>

#include "icl/errors.hpp"

namespace icl {

namespace {
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// Gate arguments w'z_l + b for the simplified gate: y_l / rho + b with the
// query slot contributing exactly b.
Vec simplified_gate_args(const EmbeddedPrompt& zp, const GatingConstants& gc) {
  const int cols = zp.n + 1;
  Vec args(cols);
  for (int l = 0; l < cols; ++l) args[l] = zp.z(zp.d_tilde, l) / gc.rho + gc.b;
  return args;
}
}  // namespace

EmbeddingKind embedding_kind_for(const MambaParams& p, int d) {
  if (p.gamma.size() == phi_dim(d)) return EmbeddingKind::kQuadratic;
  if (p.gamma.size() == d) return EmbeddingKind::kStandard;
  throw ValidationError("MambaParams: gamma length matches neither embedding for this d");
}

Mat recurrence_forward(const EmbeddedPrompt& zp, const GeneralMambaParams& p) {
  const int channels = zp.d_tilde + 1;
  const int cols = zp.n + 1;
  if (p.w_b.cols() != channels || p.w_c.cols() != channels || p.w_b.rows() != p.w_c.rows() ||
      p.w.size() != channels)
    throw ValidationError("recurrence_forward: parameter shapes do not match embedding");
  const int d_h = static_cast<int>(p.w_b.rows());
  // hidden(:, i) is the state of channel i.
  Mat hidden = Mat::Zero(d_h, channels);
  Mat outputs(channels, cols);
  for (int l = 0; l < cols; ++l) {
    const Vec z = zp.z.col(l);
    const double delta = softplus(p.w.dot(z) + p.b);
    const double decay = std::exp(-delta);          // exp(Delta * A) with A = -I
    const Vec inject = (1.0 - decay) * (p.w_b * z); // (Delta A)^{-1}(exp(Delta A)-I) Delta B_l
    hidden = decay * hidden + inject * z.transpose();
    if (!hidden.allFinite()) {
      std::ostringstream msg;
      msg << "recurrence_forward: non-finite hidden state at token " << l + 1;
      throw NumericalError(msg.str());
    }
    outputs.col(l) = hidden.transpose() * (p.w_c * z);
  }
  return outputs;
}

Mat gating_weights(const EmbeddedPrompt& zp, const GatingConstants& gc) {
  validate(gc);
  const int cols = zp.n + 1;
  const Vec args = simplified_gate_args(zp, gc);
  Mat g = Mat::Zero(cols, cols);
  for (int l = 0; l < cols; ++l) {
    double suffix = 1.0;  // prod_{k=j+1..l} (1 - sigma_k), built backwards
    for (int j = l; j >= 0; --j) {
      g(j, l) = sigmoid(args[j]) * suffix;
      suffix *= 1.0 - sigmoid(args[j]);
    }
  }
  return g;
}

Vec gating_last_column(const EmbeddedPrompt& zp, const GatingConstants& gc) {
  validate(gc);
  const int cols = zp.n + 1;
  const Vec args = simplified_gate_args(zp, gc);
  Vec g(cols);
  double suffix = 1.0;
  for (int j = cols - 1; j >= 0; --j) {
    g[j] = sigmoid(args[j]) * suffix;
    suffix *= 1.0 - sigmoid(args[j]);
  }
  return g;
}

Mat closed_form_outputs(const EmbeddedPrompt& zp, const GeneralMambaParams& p) {
  const int channels = zp.d_tilde + 1;
  const int cols = zp.n + 1;
  if (p.w_b.cols() != channels || p.w_c.cols() != channels || p.w.size() != channels)
    throw ValidationError("closed_form_outputs: parameter shapes do not match embedding");
  const Mat product = p.w_b.transpose() * p.w_c;  // (d~+1) x (d~+1)
  Vec sigmas(cols);
  for (int l = 0; l < cols; ++l) sigmas[l] = sigmoid(p.w.dot(zp.z.col(l)) + p.b);
  Mat outputs = Mat::Zero(channels, cols);
  for (int l = 0; l < cols; ++l) {
    const Vec v = product * zp.z.col(l);
    double suffix = 1.0;
    Vec acc = Vec::Zero(channels);
    for (int j = l; j >= 0; --j) {
      const double gate = sigmas[j] * suffix;
      acc += gate * zp.z.col(j).dot(v) * zp.z.col(j);
      suffix *= 1.0 - sigmas[j];
    }
    outputs.col(l) = acc;
  }
  if (!outputs.allFinite()) throw NumericalError("closed_form_outputs: non-finite output");
  return outputs;
}

double mamba_scalar(const EmbeddedPrompt& zp, const MambaParams& p) {
  if (p.gamma.size() != zp.d_tilde)
    throw ValidationError("mamba_scalar: gamma size does not match embedding");
  const Vec gates = gating_last_column(zp, p.gc);
  const Vec weighted_query = p.gamma.cwiseProduct(zp.z.col(zp.n).head(zp.d_tilde));
  double acc = 0.0;
  // The j = n+1 term vanishes: the query's label slot is zero.
  for (int j = 0; j < zp.n; ++j) {
    const double y = zp.z(zp.d_tilde, j);
    acc += gates[j] * y * zp.z.col(j).head(zp.d_tilde).dot(weighted_query);
  }
  return acc;
}

}  // namespace icl
