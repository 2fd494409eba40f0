#include "icl/embedding.hpp"

#include <cmath>

#include "icl/errors.hpp"

namespace icl {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
}

int phi_dim(int d) { return 1 + d + d * (d + 1) / 2; }

Vec phi(const Vec& x) {
  const int d = static_cast<int>(x.size());
  if (!x.allFinite()) throw ValidationError("phi: non-finite input");
  Vec out(phi_dim(d));
  out[0] = 1.0;
  out.segment(1, d) = x;
  for (int i = 0; i < d; ++i) out[1 + d + i] = (x[i] * x[i] - 1.0) * kInvSqrt2;
  int s = 1 + 2 * d;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) out[s++] = x[i] * x[j];
  return out;
}

SlotInfo slot_info(int slot, int d) {
  if (slot < 0 || slot >= phi_dim(d)) throw ValidationError("slot_info: slot out of range");
  if (slot == 0) return {SlotKind::kConstant, -1, -1};
  if (slot <= d) return {SlotKind::kLinear, slot - 1, -1};
  if (slot <= 2 * d) return {SlotKind::kSquare, slot - d - 1, -1};
  int k = slot - 2 * d - 1;
  for (int i = 0; i < d; ++i) {
    const int row = d - i - 1;
    if (k < row) return {SlotKind::kCross, i, i + 1 + k};
    k -= row;
  }
  throw ValidationError("slot_info: bad cross slot");
}

int cross_slot(int i, int j, int d) {
  if (!(0 <= i && i < j && j < d)) throw ValidationError("cross_slot: need 0 <= i < j < d");
  return 1 + 2 * d + i * d - i * (i + 1) / 2 + (j - i - 1);
}

EmbeddedPrompt embed_prompt(const Prompt& p, EmbeddingKind kind) {
  const int d = static_cast<int>(p.query.size());
  if (p.xs.rows() != d || p.xs.cols() != p.n || p.ys.size() != p.n)
    throw ValidationError("embed_prompt: inconsistent prompt shapes");
  EmbeddedPrompt e;
  e.d_tilde = kind == EmbeddingKind::kQuadratic ? phi_dim(d) : d;
  e.n = p.n;
  e.z.resize(e.d_tilde + 1, p.n + 1);
  if (kind == EmbeddingKind::kQuadratic) {
    for (int j = 0; j < p.n; ++j) e.z.col(j).head(e.d_tilde) = phi(p.xs.col(j));
    e.z.col(p.n).head(e.d_tilde) = phi(p.query);
  } else {
    for (int j = 0; j < p.n; ++j) e.z.col(j).head(d) = p.xs.col(j);
    e.z.col(p.n).head(d) = p.query;
  }
  for (int j = 0; j < p.n; ++j) e.z(e.d_tilde, j) = p.ys[j];
  e.z(e.d_tilde, p.n) = 0.0;  // the query label never enters Z
  return e;
}

Vec psi(const Vec& theta, double c0, double c1, double c2) {
  const int d = static_cast<int>(theta.size());
  if (!theta.allFinite() || !std::isfinite(c0) || !std::isfinite(c1) || !std::isfinite(c2))
    throw ValidationError("psi: non-finite input");
  Vec out(phi_dim(d));
  out[0] = c0;
  out.segment(1, d) = c1 * theta;
  for (int i = 0; i < d; ++i) out[1 + d + i] = c2 * theta[i] * theta[i] * kInvSqrt2;
  int s = 1 + 2 * d;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) out[s++] = c2 * theta[i] * theta[j];
  return out;
}

}  // namespace icl
