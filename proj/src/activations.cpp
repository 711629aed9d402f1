#include "pimns/activations.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <vector>

#include <fmt/format.h>

#include "pimns/errors.hpp"

namespace pimns {

std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::ReLU:
      return "relu";
    case ActivationKind::GELU:
      return "gelu";
    case ActivationKind::SiLU:
      return "silu";
    case ActivationKind::GEGLU:
      return "geglu";
    case ActivationKind::SwiGLU:
      return "swiglu";
  }
  return "unknown";
}

ActivationKind parse_activation_kind(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (auto k : {ActivationKind::ReLU, ActivationKind::GELU, ActivationKind::SiLU, ActivationKind::GEGLU,
                 ActivationKind::SwiGLU}) {
    if (to_string(k) == lower) return k;
  }
  throw ConfigError(fmt::format("unknown activation '{}'", name));
}

namespace {

// 1 - erf(|x|) for the A&S 7.1.26 fit. Kept separate so GELU on negative
// inputs never cancels 1 + erf(x) catastrophically.
double erfc_abs(double ax) {
  constexpr double p = 0.3275911;
  constexpr double a1 = 0.254829592, a2 = -0.284496736, a3 = 1.421413741, a4 = -1.453152027,
                   a5 = 1.061405429;
  const double t = 1.0 / (1.0 + p * ax);
  const double poly = t * (a1 + t * (a2 + t * (a3 + t * (a4 + t * a5))));
  return poly * std::exp(-ax * ax);
}

}  // namespace

double erf_approx(double x) {
  const double r = 1.0 - erfc_abs(std::fabs(x));
  return x < 0 ? -r : r;
}

double activate_exact(ActivationKind kind, double x) {
  switch (kind) {
    case ActivationKind::ReLU:
      return x > 0.0 ? x : 0.0;
    case ActivationKind::GELU: {
      const double z = x / std::sqrt(2.0);
      // 1 + erf(z) == erfc(|z|) for z < 0.
      const double one_plus_erf = z < 0 ? erfc_abs(-z) : 1.0 + erf_approx(z);
      return 0.5 * x * one_plus_erf;
    }
    case ActivationKind::SiLU:
      return x / (1.0 + std::exp(-x));
    default:
      throw ArgumentError(fmt::format("activate: '{}' is a gated kind", to_string(kind)));
  }
}

float activate(ActivationKind kind, float x) {
  if (!std::isfinite(x)) throw InvalidValueError("activate: non-finite input");
  if (kind == ActivationKind::ReLU) return x > 0.0f ? x : 0.0f;
  return static_cast<float>(activate_exact(kind, x));
}

double negative_tail_bound(ActivationKind kind) {
  const ActivationKind s = sigma_of(kind);
  if (s == ActivationKind::ReLU) return 0.0;
  // Both GELU and SiLU are unimodal on x < 0 with a single minimum in [-4, 0].
  double lo = -4.0, hi = 0.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
  double fc = activate_exact(s, c), fd = activate_exact(s, d);
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = activate_exact(s, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = activate_exact(s, d);
    }
  }
  const double sup = -activate_exact(s, 0.5 * (lo + hi));
  return static_cast<double>(std::nextafter(static_cast<float>(sup), std::numeric_limits<float>::infinity()));
}

void validate_mlp(const Tensor2D& x, const MlpWeights& w, ActivationKind kind) {
  if (is_gated(kind) && !w.v_up) {
    throw ConfigError(fmt::format("{} MLP requires v_up", to_string(kind)));
  }
  if (!is_gated(kind) && w.v_up) {
    throw ConfigError(fmt::format("{} MLP must not carry v_up", to_string(kind)));
  }
  if (x.cols() != w.w_up.rows()) {
    throw ShapeError(fmt::format("mlp: input has {} cols, w_up has {} rows", x.cols(), w.w_up.rows()));
  }
  if (w.w_up.cols() != w.w_down.rows()) {
    throw ShapeError(fmt::format("mlp: w_up is {}x{}, w_down is {}x{}", w.w_up.rows(), w.w_up.cols(),
                                 w.w_down.rows(), w.w_down.cols()));
  }
  if (w.v_up && !w.v_up->same_shape(w.w_up)) {
    throw ShapeError("mlp: v_up shape differs from w_up");
  }
}

namespace {

Tensor2D apply_sigma(Tensor2D h, ActivationKind kind) {
  const ActivationKind s = sigma_of(kind);
  for (float& v : h.data()) v = activate(s, v);
  return h;
}

void report_rows(const Tensor2D& post_sigma, const RowSink& sink) {
  if (!sink) return;
  for (std::size_t r = 0; r < post_sigma.rows(); ++r) sink(r, post_sigma.row(r));
}

}  // namespace

MlpTrace mlp_trace(const Tensor2D& x, const MlpWeights& w, ActivationKind kind) {
  validate_mlp(x, w, kind);
  require_finite(x, "mlp input");
  MlpTrace t;
  t.post_sigma = apply_sigma(matmul(x, w.w_up), kind);
  if (is_gated(kind)) t.gate = matmul(x, *w.v_up);
  return t;
}

Tensor2D mlp_down(const Tensor2D& post_sigma, const std::optional<Tensor2D>& gate, const MlpWeights& w) {
  if (!gate) return matmul(post_sigma, w.w_down);
  if (!gate->same_shape(post_sigma) || post_sigma.cols() != w.w_down.rows()) {
    throw ShapeError("mlp_down: gate, activations and W_down disagree");
  }
  // Double accumulation keeps this path and the folded form equal to float precision.
  const std::size_t d_ffn = w.w_down.rows(), d_out = w.w_down.cols();
  Tensor2D out(post_sigma.rows(), d_out);
  std::vector<double> acc(d_out);
  for (std::size_t r = 0; r < post_sigma.rows(); ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < d_ffn; ++j) {
      const double h = double(post_sigma(r, j)) * double((*gate)(r, j));
      for (std::size_t c = 0; c < d_out; ++c) acc[c] += h * double(w.w_down(j, c));
    }
    for (std::size_t c = 0; c < d_out; ++c) out(r, c) = static_cast<float>(acc[c]);
  }
  return out;
}

Tensor2D mlp_plain(const Tensor2D& x, const MlpWeights& w, ActivationKind kind, const RowSink& sink) {
  if (is_gated(kind)) throw ConfigError(fmt::format("mlp_plain: '{}' is gated", to_string(kind)));
  MlpTrace t = mlp_trace(x, w, kind);
  report_rows(t.post_sigma, sink);
  Tensor2D out = mlp_down(t.post_sigma, std::nullopt, w);
  require_finite(out, "mlp output");
  return out;
}

Tensor2D mlp_gated(const Tensor2D& x, const MlpWeights& w, ActivationKind kind, const RowSink& sink) {
  if (!is_gated(kind)) throw ConfigError(fmt::format("mlp_gated: '{}' is not gated", to_string(kind)));
  MlpTrace t = mlp_trace(x, w, kind);
  report_rows(t.post_sigma, sink);
  Tensor2D out = mlp_down(t.post_sigma, t.gate, w);
  require_finite(out, "mlp output");
  return out;
}

Tensor2D mlp_gated_folded(const Tensor2D& x, const MlpWeights& w, ActivationKind kind) {
  if (!is_gated(kind)) throw ConfigError(fmt::format("mlp_gated_folded: '{}' is not gated", to_string(kind)));
  MlpTrace t = mlp_trace(x, w, kind);
  const std::size_t d_ffn = w.w_down.rows(), d_out = w.w_down.cols();
  Tensor2D out(x.rows(), d_out);
  std::vector<double> folded(d_ffn * d_out), acc(d_out);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    // folded[j, :] = (x_r·V_up)[j] * W_down[j, :]
    for (std::size_t j = 0; j < d_ffn; ++j) {
      const double g = (*t.gate)(r, j);
      for (std::size_t c = 0; c < d_out; ++c) folded[j * d_out + c] = g * double(w.w_down(j, c));
    }
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < d_ffn; ++j) {
      const double a = t.post_sigma(r, j);
      for (std::size_t c = 0; c < d_out; ++c) acc[c] += a * folded[j * d_out + c];
    }
    for (std::size_t c = 0; c < d_out; ++c) out(r, c) = static_cast<float>(acc[c]);
  }
  require_finite(out, "mlp output");
  return out;
}

Tensor2D mlp(const Tensor2D& x, const MlpWeights& w, ActivationKind kind, const RowSink& sink) {
  return is_gated(kind) ? mlp_gated(x, w, kind, sink) : mlp_plain(x, w, kind, sink);
}

}  // namespace pimns
