#pragma once

#include "icl/sampler.hpp"

namespace icl {

// Degree-2 polynomial feature map on R^d, ordered as
//   [ 1 | x_1..x_d | (x_1^2-1)/sqrt2 .. (x_d^2-1)/sqrt2 | x_i x_j (i<j) ]
// with cross pairs lexicographic. Coordinates 2..d~ form the orthonormal
// degree-<=2 Hermite basis under the standard Gaussian.
int phi_dim(int d);  // 1 + d + d(d+1)/2

Vec phi(const Vec& x);

// Slot map helpers (0-based slots into phi's ordering).
enum class SlotKind { kConstant, kLinear, kSquare, kCross };
struct SlotInfo {
  SlotKind kind;
  int i = -1;  // first coordinate touched
  int j = -1;  // second coordinate (cross only)
};
SlotInfo slot_info(int slot, int d);
int cross_slot(int i, int j, int d);  // i < j

// Embedded prompt: columns z_1..z_{n+1} with z_j = [phi(x_j); y_j] for
// context tokens and z_{n+1} = [phi(query); 0].
struct EmbeddedPrompt {
  Mat z;  // (d~+1) x (n+1)
  int d_tilde = 0;
  int n = 0;
};

// kStandard is the plain phi(x) = x alternative for non-even links; it has
// no quadratic slots and no analysis path.
enum class EmbeddingKind { kQuadratic, kStandard };

EmbeddedPrompt embed_prompt(const Prompt& p, EmbeddingKind kind = EmbeddingKind::kQuadratic);

// psi(theta, c0, c1, c2) = [c0 | c1 theta | c2 (theta .* theta)/sqrt2 |
// c2 theta_i theta_j (i<j)] in phi's ordering.
Vec psi(const Vec& theta, double c0, double c1, double c2);

}  // namespace icl
