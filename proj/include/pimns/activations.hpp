#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "pimns/tensor.hpp"

namespace pimns {

enum class ActivationKind { ReLU, GELU, SiLU, GEGLU, SwiGLU };

constexpr bool is_gated(ActivationKind k) {
  return k == ActivationKind::GEGLU || k == ActivationKind::SwiGLU;
}

/// The plain non-linearity applied inside a kind (GEGLU -> GELU, SwiGLU -> SiLU).
constexpr ActivationKind sigma_of(ActivationKind k) {
  switch (k) {
    case ActivationKind::GEGLU:
      return ActivationKind::GELU;
    case ActivationKind::SwiGLU:
      return ActivationKind::SiLU;
    default:
      return k;
  }
}

std::string_view to_string(ActivationKind k);
/// Case-insensitive. Throws ConfigError on unknown names.
ActivationKind parse_activation_kind(std::string_view name);

/// erf via Abramowitz & Stegun 7.1.26; |error| <= 1.5e-7 over the real line.
double erf_approx(double x);

/// Double-precision σ for a plain kind; used where the float rounding step is unwanted.
double activate_exact(ActivationKind kind, double x);

/// σ(x) for a plain kind. Throws ArgumentError for gated kinds and
/// InvalidValueError for non-finite x.
float activate(ActivationKind kind, float x);

/// sup_{x<0} |σ(x)| for the kind's σ, rounded up to the next float so it
/// bounds every float σ output.
double negative_tail_bound(ActivationKind kind);

struct MlpWeights {
  Tensor2D w_up;                 // d_model x d_ffn
  std::optional<Tensor2D> v_up;  // d_model x d_ffn, gated kinds only
  Tensor2D w_down;               // d_ffn x d_model
};

/// Receives σ(x·W_up) one input row at a time, before the down projection.
using RowSink = std::function<void(std::size_t row, std::span<const float> post_sigma)>;

/// σ(x·W_up)·W_down.
Tensor2D mlp_plain(const Tensor2D& x, const MlpWeights& w, ActivationKind kind,
                   const RowSink& sink = {});

/// (σ(x·W_up) ⊙ (x·V_up))·W_down. The sink sees σ(x·W_up), not the gated product.
Tensor2D mlp_gated(const Tensor2D& x, const MlpWeights& w, ActivationKind kind,
                   const RowSink& sink = {});

/// σ(x·W_up)·((x·V_up) ⊙ W_downᵀ)ᵀ, with the folded down projection rebuilt
/// for each input row.
Tensor2D mlp_gated_folded(const Tensor2D& x, const MlpWeights& w, ActivationKind kind);

/// Dispatches to mlp_plain or mlp_gated.
Tensor2D mlp(const Tensor2D& x, const MlpWeights& w, ActivationKind kind, const RowSink& sink = {});

/// Intermediate values of one MLP evaluation.
struct MlpTrace {
  Tensor2D post_sigma;           // σ(x·W_up)
  std::optional<Tensor2D> gate;  // x·V_up for gated kinds
};

MlpTrace mlp_trace(const Tensor2D& x, const MlpWeights& w, ActivationKind kind);

/// Down projection of a trace: (post_sigma ⊙ gate)·W_down, or post_sigma·W_down.
Tensor2D mlp_down(const Tensor2D& post_sigma, const std::optional<Tensor2D>& gate, const MlpWeights& w);

/// Shape and kind checks shared by the MLP entry points.
void validate_mlp(const Tensor2D& x, const MlpWeights& w, ActivationKind kind);

}  // namespace pimns
