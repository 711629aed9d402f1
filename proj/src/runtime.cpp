#include "pimns/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "pimns/errors.hpp"

namespace pimns {

namespace {

constexpr float kNormEps = 1e-5f;

void normalize_rows(const Tensor2D& x, Tensor2D& out, NormKind kind, const Tensor2D& weight, const Tensor2D* bias) {
  const std::size_t d = x.cols();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto o = out.row(r);
    if (kind == NormKind::RmsNorm) {
      float ss = 0.0f;
      for (float v : in) ss += v * v;
      const float inv = 1.0f / std::sqrt(ss / static_cast<float>(d) + kNormEps);
      for (std::size_t c = 0; c < d; ++c) o[c] = in[c] * inv * weight(0, c);
    } else {
      float mean = 0.0f;
      for (float v : in) mean += v;
      mean /= static_cast<float>(d);
      float var = 0.0f;
      for (float v : in) var += (v - mean) * (v - mean);
      const float inv = 1.0f / std::sqrt(var / static_cast<float>(d) + kNormEps);
      for (std::size_t c = 0; c < d; ++c) o[c] = (in[c] - mean) * inv * weight(0, c) + (*bias)(0, c);
    }
  }
}

Tensor2D norm(const ModelBundle& b, const std::string& prefix, const Tensor2D& x) {
  Tensor2D out(x.rows(), x.cols());
  const bool ln = b.config().norm == NormKind::LayerNorm;
  normalize_rows(x, out, b.config().norm, b.weight(prefix + ".weight"), ln ? &b.weight(prefix + ".bias") : nullptr);
  return out;
}

// Rotates interleaved pairs (2i, 2i+1) of each head by position * 10000^(-2i/hd).
void apply_rotary(Tensor2D& t, std::size_t first_position, std::size_t n_heads, std::size_t head_dim) {
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const double pos = static_cast<double>(first_position + r);
    auto row = t.row(r);
    for (std::size_t i = 0; i < head_dim / 2; ++i) {
      const double inv_freq = std::pow(10000.0, -2.0 * static_cast<double>(i) / static_cast<double>(head_dim));
      const float c = static_cast<float>(std::cos(pos * inv_freq));
      const float s = static_cast<float>(std::sin(pos * inv_freq));
      for (std::size_t h = 0; h < n_heads; ++h) {
        float& a = row[h * head_dim + 2 * i];
        float& bb = row[h * head_dim + 2 * i + 1];
        const float a0 = a, b0 = bb;
        a = a0 * c - b0 * s;
        bb = a0 * s + b0 * c;
      }
    }
  }
}

class SinkAdapter {
 public:
  SinkAdapter(ProbeSink* sink, std::size_t layer, std::size_t first_position, std::size_t generation_from)
      : sink_(sink), layer_(layer), first_(first_position), generation_from_(generation_from) {}

  RowSink row_sink() const {
    if (!sink_) return {};
    return [this](std::size_t row, std::span<const float> v) {
      const std::size_t pos = first_ + row;
      sink_->on_activation({layer_, pos, pos >= generation_from_ ? Phase::Generation : Phase::Prompt, v});
    };
  }

 private:
  ProbeSink* sink_;
  std::size_t layer_, first_, generation_from_;
};

}  // namespace

Session::Session(const ModelBundle& bundle)
    : bundle_(bundle), k_cache_(bundle.config().n_layers), v_cache_(bundle.config().n_layers) {}

std::vector<float> Session::advance(std::span<const TokenId> ids, const StepHooks& hooks) {
  const ModelConfig& cfg = bundle_.config();
  if (ids.empty()) throw ArgumentError("advance: no tokens");
  if (position_ + ids.size() > cfg.max_seq) {
    throw LengthError(fmt::format("sequence of {} tokens exceeds max_seq {}", position_ + ids.size(), cfg.max_seq));
  }
  const std::size_t n = ids.size(), d = cfg.d_model, hd = cfg.head_dim(), first = position_;

  const Tensor2D& emb = bundle_.weight("tok_embeddings");
  Tensor2D x(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= cfg.vocab_size) {
      throw ArgumentError(fmt::format("token id {} outside vocab of {}", ids[r], cfg.vocab_size));
    }
    std::copy_n(emb.row(static_cast<std::size_t>(ids[r])).begin(), d, x.row(r).begin());
  }
  if (cfg.positional == PositionalKind::Learned) {
    const Tensor2D& pe = bundle_.weight("pos_embeddings");
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) x(r, c) += pe(first + r, c);
    }
  }

  const float scale = 1.0f / std::sqrt(static_cast<float>(hd));
  std::vector<float> scores;
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    const std::string p = fmt::format("layers.{}.", l);
    const Tensor2D h = norm(bundle_, p + "attn_norm", x);
    Tensor2D q = matmul(h, bundle_.weight(p + "attn.wq"));
    Tensor2D k = matmul(h, bundle_.weight(p + "attn.wk"));
    const Tensor2D v = matmul(h, bundle_.weight(p + "attn.wv"));
    if (cfg.positional == PositionalKind::Rotary) {
      apply_rotary(q, first, cfg.n_heads, hd);
      apply_rotary(k, first, cfg.n_heads, hd);
    }
    auto& kc = k_cache_[l];
    auto& vc = v_cache_[l];
    kc.resize(first * d);
    vc.resize(first * d);
    kc.insert(kc.end(), k.data().begin(), k.data().end());
    vc.insert(vc.end(), v.data().begin(), v.data().end());

    Tensor2D att(n, d);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t visible = first + r + 1;
      scores.resize(visible);
      for (std::size_t head = 0; head < cfg.n_heads; ++head) {
        const float* qh = q.row(r).data() + head * hd;
        float max_score = -std::numeric_limits<float>::infinity();
        for (std::size_t t = 0; t < visible; ++t) {
          const float* kh = kc.data() + t * d + head * hd;
          float s = 0.0f;
          for (std::size_t i = 0; i < hd; ++i) s += qh[i] * kh[i];
          scores[t] = s * scale;
          max_score = std::max(max_score, scores[t]);
        }
        float denom = 0.0f;
        for (std::size_t t = 0; t < visible; ++t) {
          scores[t] = std::exp(scores[t] - max_score);
          denom += scores[t];
        }
        float* out = att.row(r).data() + head * hd;
        for (std::size_t t = 0; t < visible; ++t) {
          const float wgt = scores[t] / denom;
          const float* vh = vc.data() + t * d + head * hd;
          for (std::size_t i = 0; i < hd; ++i) out[i] += wgt * vh[i];
        }
      }
    }
    const Tensor2D o = matmul(att, bundle_.weight(p + "attn.wo"));
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += o.data()[i];

    const Tensor2D h2 = norm(bundle_, p + "mlp_norm", x);
    Tensor2D m;
    if (hooks.interceptor) {
      m = hooks.interceptor->run(l, first, h2, bundle_.mlp_weights(l), cfg.activation);
    } else {
      SinkAdapter adapter(hooks.sink, l, first, hooks.generation_from);
      m = mlp(h2, bundle_.mlp_weights(l), cfg.activation, adapter.row_sink());
    }
    for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += m.data()[i];
  }
  position_ += n;

  Tensor2D last(1, d);
  std::copy_n(x.row(n - 1).begin(), d, last.row(0).begin());
  const Tensor2D logits = matmul(norm(bundle_, "final_norm", last), bundle_.weight("lm_head"));
  require_finite(logits, "logits");
  return logits.data();
}

std::vector<float> forward(const ModelBundle& bundle, std::span<const TokenId> ids, ProbeSink* sink, Phase phase) {
  Session s(bundle);
  StepHooks hooks;
  hooks.sink = sink;
  hooks.generation_from = phase == Phase::Generation ? 0 : std::numeric_limits<std::size_t>::max();
  return s.advance(ids, hooks);
}

TokenId argmax(std::span<const float> logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

namespace {

double log_softmax_at(std::span<const float> logits, std::size_t idx) {
  double mx = logits[0];
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  double sum = 0.0;
  for (float v : logits) sum += std::exp(static_cast<double>(v) - mx);
  return static_cast<double>(logits[idx]) - mx - std::log(sum);
}

TokenId sample(std::span<const float> logits, double temperature, std::mt19937_64& rng) {
  double mx = logits[0];
  for (float v : logits) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> w(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    w[i] = std::exp((static_cast<double>(logits[i]) - mx) / temperature);
    sum += w[i];
  }
  // 53-bit uniform in [0, 1), independent of the standard library's distributions.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * sum;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(w.size() - 1);
}

}  // namespace

std::vector<TokenId> encode_prompt(const Tokenizer& tok, std::string_view prompt) {
  std::vector<TokenId> ids{tok.bos()};
  const auto body = tok.tokenize(prompt);
  ids.insert(ids.end(), body.begin(), body.end());
  return ids;
}

GenerationResult generate_ids(const ModelBundle& bundle, std::vector<TokenId> prompt_ids,
                              const GenerationParams& params, const StepHooks& hooks,
                              std::vector<std::vector<float>>* step_logits) {
  const ModelConfig& cfg = bundle.config();
  if (params.temperature < 0.0 || !std::isfinite(params.temperature)) {
    throw ArgumentError("temperature must be a finite non-negative number");
  }
  if (prompt_ids.empty()) throw ArgumentError("empty prompt");
  const std::size_t needed = prompt_ids.size() + (params.max_new_tokens > 0 ? 1 : 0);
  if (needed > cfg.max_seq) {
    throw LengthError(fmt::format("prompt of {} tokens leaves no room in max_seq {}", prompt_ids.size(), cfg.max_seq));
  }

  GenerationResult result;
  result.prompt_ids = std::move(prompt_ids);
  if (params.max_new_tokens == 0) {
    // Prompt is still ingested so observers see the same Prompt-phase stream.
    Session s(bundle);
    StepHooks h = hooks;
    h.generation_from = std::numeric_limits<std::size_t>::max();
    s.advance(result.prompt_ids, h);
    return result;
  }

  std::mt19937_64 rng(params.seed);
  const bool greedy = params.temperature < kGreedyTemperature;
  Session session(bundle);
  StepHooks h = hooks;
  h.generation_from = result.prompt_ids.size() - 1;
  std::vector<float> logits = session.advance(result.prompt_ids, h);
  while (true) {
    const TokenId next = greedy ? argmax(logits) : sample(logits, params.temperature, rng);
    if (step_logits) step_logits->push_back(logits);
    result.generated_ids.push_back(next);
    result.logprobs.push_back(log_softmax_at(logits, static_cast<std::size_t>(next)));
    const bool stop = std::find(params.stop_ids.begin(), params.stop_ids.end(), next) != params.stop_ids.end();
    if (stop || result.generated_ids.size() >= params.max_new_tokens || session.position() >= cfg.max_seq) break;
    const TokenId one[1] = {next};
    logits = session.advance(one, h);
  }
  result.text = bundle.tokenizer().detokenize(result.generated_ids);
  return result;
}

GenerationResult generate(const ModelBundle& bundle, std::string_view prompt, const GenerationParams& params,
                          ProbeSink* sink) {
  StepHooks hooks;
  hooks.sink = sink;
  return generate_ids(bundle, encode_prompt(bundle.tokenizer(), prompt), params, hooks);
}

}  // namespace pimns
