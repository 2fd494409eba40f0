#pragma once

#include "icl/embedding.hpp"
#include "icl/hermite.hpp"

namespace icl {

// Simplified one-layer parameters: learnable gamma with the fixed gate
// w = [0_{d~}; 1/rho] and bias b. W_B^T W_C = diag(gamma, 0) is implicit.
struct MambaParams {
  Vec gamma;  // d~
  GatingConstants gc;
};

// The gamma length determines which embedding the parameters were built
// for: phi_dim(d) for the quadratic map, d for the standard one.
EmbeddingKind embedding_kind_for(const MambaParams& p, int d);

// Dense selection parameters for the general operator.
struct GeneralMambaParams {
  Mat w_b;  // d_h x (d~+1)
  Mat w_c;  // d_h x (d~+1)
  Vec w;    // d~+1
  double b = 0.0;
};

// Sequential SSM evaluation: per-channel hidden states with scalar decay
// exp(-softplus(w'z+b)) and injection (1-exp(-softplus)) W_B z, outputs
// o_l[i] = (W_C z_l)' h_l^(i). Returns the (d~+1) x (n+1) output matrix.
// Throws NumericalError naming the first token with a non-finite state.
Mat recurrence_forward(const EmbeddedPrompt& zp, const GeneralMambaParams& p);

// Gating weights G[j,l] = sigma(w'z_j+b) prod_{k=j+1..l} (1-sigma(w'z_k+b))
// for the simplified gate (w'z = y/rho, zero on the query token). Entries
// with j > l are zero.
Mat gating_weights(const EmbeddedPrompt& zp, const GatingConstants& gc);

// Last-column gating weights G[j, n+1], computed in O(n).
Vec gating_last_column(const EmbeddedPrompt& zp, const GatingConstants& gc);

// Closed form o_l = sum_{j<=l} G[j,l] z_j z_j' W_B' W_C z_l.
Mat closed_form_outputs(const EmbeddedPrompt& zp, const GeneralMambaParams& p);

// Mamba(Z; gamma)[d~+1, n+1] = sum_j G[j,n+1] y_j <phi(x_j), gamma .* phi(x)>
// under the simplified parameterization.
double mamba_scalar(const EmbeddedPrompt& zp, const MambaParams& p);

}  // namespace icl
