#include <algorithm>
#include <cmath>

#include "pimns/errors.hpp"
#include "pimns/probe.hpp"

namespace pimns {

namespace {

struct LayerCheck {
  double delta = 0.0;
  double bound = 0.0;
};

// Runs every MLP with non-positive σ outputs clamped to zero and, for rows at
// emitting positions, measures the change against the unclamped output.
class PruningInterceptor : public MlpInterceptor {
 public:
  PruningInterceptor(std::size_t n_layers, std::size_t first_emitting_position, double tail)
      : n_layers_(n_layers), first_emitting_(first_emitting_position), tail_(tail) {}

  Tensor2D run(std::size_t layer, std::size_t first_position, const Tensor2D& x, const MlpWeights& w,
               ActivationKind kind) override {
    MlpTrace trace = mlp_trace(x, w, kind);
    const Tensor2D full = mlp_down(trace.post_sigma, trace.gate, w);
    Tensor2D clamped = trace.post_sigma;
    for (float& v : clamped.data()) {
      if (!(v > 0.0f)) v = 0.0f;
    }
    Tensor2D pruned = mlp_down(clamped, trace.gate, w);

    for (std::size_t r = 0; r < x.rows(); ++r) {
      const std::size_t pos = first_position + r;
      if (pos < first_emitting_) continue;
      const std::size_t step = pos - first_emitting_;
      if (checks_.size() <= step) checks_.resize(step + 1, std::vector<LayerCheck>(n_layers_));
      LayerCheck& c = checks_[step][layer];
      for (std::size_t i = 0; i < full.cols(); ++i) {
        c.delta = std::max(c.delta, std::fabs(static_cast<double>(full(r, i)) - static_cast<double>(pruned(r, i))));
      }
      double norm_sum = 0.0;
      for (std::size_t j = 0; j < trace.post_sigma.cols(); ++j) {
        if (trace.post_sigma(r, j) > 0.0f) continue;
        const double g = trace.gate ? static_cast<double>((*trace.gate)(r, j)) : 1.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < w.w_down.cols(); ++i) {
          const double e = g * static_cast<double>(w.w_down(j, i));
          sq += e * e;
        }
        norm_sum += std::sqrt(sq);
      }
      c.bound = tail_ * norm_sum;
    }
    return pruned;
  }

  const std::vector<std::vector<LayerCheck>>& checks() const { return checks_; }

 private:
  std::size_t n_layers_;
  std::size_t first_emitting_;
  double tail_;
  std::vector<std::vector<LayerCheck>> checks_;
};

}  // namespace

PruneReport prune_and_compare(const ModelBundle& bundle, std::string_view prompt, const GenerationParams& params) {
  PruneReport report{bundle.config().activation, negative_tail_bound(bundle.config().activation), {}};
  std::vector<TokenId> prompt_ids = encode_prompt(bundle.tokenizer(), prompt);
  std::vector<std::vector<float>> base_logits;
  const GenerationResult base = generate_ids(bundle, prompt_ids, params, {}, &base_logits);
  if (base.generated_ids.empty()) return report;

  // Teacher-forced replay of the same tokens through the clamped model.
  PruningInterceptor interceptor(bundle.config().n_layers, prompt_ids.size() - 1, report.tail_bound);
  StepHooks hooks;
  hooks.interceptor = &interceptor;
  Session session(bundle);
  std::vector<std::vector<float>> pruned_logits;
  pruned_logits.push_back(session.advance(prompt_ids, hooks));
  for (std::size_t t = 0; t + 1 < base.generated_ids.size(); ++t) {
    const TokenId one[1] = {base.generated_ids[t]};
    pruned_logits.push_back(session.advance(one, hooks));
  }

  const auto& checks = interceptor.checks();
  for (std::size_t t = 0; t < base.generated_ids.size(); ++t) {
    PruneStep s{t, base.generated_ids[t], 0.0, 0.0, 0.0, true};
    for (std::size_t i = 0; i < base_logits[t].size(); ++i) {
      s.logit_delta = std::max(s.logit_delta, std::fabs(static_cast<double>(pruned_logits[t][i]) -
                                                         static_cast<double>(base_logits[t][i])));
    }
    for (const LayerCheck& c : checks.at(t)) {
      s.mlp_delta = std::max(s.mlp_delta, c.delta);
      s.mlp_bound = std::max(s.mlp_bound, c.bound);
      if (c.delta > c.bound) s.within_bound = false;
    }
    report.steps.push_back(s);
  }
  return report;
}

}  // namespace pimns
