#include "pimns/probe.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "pimns/errors.hpp"

namespace pimns {

std::size_t count_activated(std::span<const float> values) {
  std::size_t n = 0;
  for (float v : values) {
    if (!std::isfinite(v)) throw InvalidValueError("count_activated: non-finite value");
    if (v > 0.0f) ++n;
  }
  return n;
}

ActivationAccumulator::ActivationAccumulator(std::size_t n_layers, std::size_t d_ffn)
    : n_layers_(n_layers), d_ffn_(d_ffn), counts_(n_layers * d_ffn, 0) {}

std::optional<TokenActivationRecord> ActivationAccumulator::ingest(std::size_t layer, std::span<const float> post_sigma,
                                                                   Phase phase) {
  if (post_sigma.size() != d_ffn_) {
    throw ShapeError(fmt::format("ingest: vector of {} values, expected {}", post_sigma.size(), d_ffn_));
  }
  if (layer >= n_layers_) throw ConfigError(fmt::format("ingest: layer {} >= {}", layer, n_layers_));
  if (phase == Phase::Prompt) return std::nullopt;

  if (layer == 0) ++generated_tokens_;
  std::size_t activated = 0;
  std::int64_t* row = counts_.data() + layer * d_ffn_;
  for (std::size_t j = 0; j < d_ffn_; ++j) {
    if (!std::isfinite(post_sigma[j])) throw InvalidValueError("ingest: non-finite value");
    if (post_sigma[j] > 0.0f) {
      ++row[j];
      ++activated;
    }
  }
  activated_sum_ += static_cast<std::int64_t>(activated);
  ++record_count_;
  return TokenActivationRecord{layer, static_cast<std::size_t>(std::max<std::int64_t>(generated_tokens_ - 1, 0)),
                               activated, d_ffn_};
}

ActivationAccumulator merge(const ActivationAccumulator& a, const ActivationAccumulator& b) {
  // An accumulator that never saw dimensions acts as the identity.
  if (a.n_layers_ == 0 && a.d_ffn_ == 0 && a.record_count_ == 0) return b;
  if (b.n_layers_ == 0 && b.d_ffn_ == 0 && b.record_count_ == 0) return a;
  if (a.n_layers_ != b.n_layers_ || a.d_ffn_ != b.d_ffn_) {
    throw ConfigError(fmt::format("merge: {}x{} vs {}x{}", a.n_layers_, a.d_ffn_, b.n_layers_, b.d_ffn_));
  }
  ActivationAccumulator out = a;
  for (std::size_t i = 0; i < out.counts_.size(); ++i) out.counts_[i] += b.counts_[i];
  out.activated_sum_ += b.activated_sum_;
  out.record_count_ += b.record_count_;
  out.generated_tokens_ += b.generated_tokens_;
  return out;
}

ActivationAccumulator ActivationAccumulator::from_counts(std::size_t n_layers, std::size_t d_ffn,
                                                         std::vector<std::int64_t> counts, std::int64_t record_count,
                                                         std::int64_t generated_tokens) {
  if (counts.size() != n_layers * d_ffn) throw ShapeError("from_counts: count matrix has the wrong size");
  ActivationAccumulator acc(n_layers, d_ffn);
  acc.counts_ = std::move(counts);
  for (auto c : acc.counts_) {
    if (c < 0) throw ArgumentError("from_counts: negative count");
    acc.activated_sum_ += c;
  }
  acc.record_count_ = record_count;
  acc.generated_tokens_ = generated_tokens;
  return acc;
}

ActivationSummary summarize(const ActivationAccumulator& acc) {
  if (acc.generated_tokens() <= 0) throw EmptyRunError("summarize: no generated tokens");
  const std::size_t L = acc.n_layers(), D = acc.d_ffn();
  ActivationSummary s;
  s.n_layers = L;
  s.d_ffn = D;
  s.generated_tokens = acc.generated_tokens();
  s.counts = acc.counts();
  const double tokens = static_cast<double>(acc.generated_tokens());
  s.proportion = 100.0 * static_cast<double>(acc.activated_sum()) / (tokens * static_cast<double>(L * D));
  s.layer_proportions.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    std::int64_t layer_sum = 0;
    for (std::size_t j = 0; j < D; ++j) layer_sum += acc.count(l, j);
    s.layer_proportions[l] = 100.0 * static_cast<double>(layer_sum) / (tokens * static_cast<double>(D));
  }
  s.ranking.reserve(L * D);
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t j = 0; j < D; ++j) s.ranking.push_back({{l, j}, acc.count(l, j)});
  }
  std::stable_sort(s.ranking.begin(), s.ranking.end(),
                   [](const RankedNeuron& a, const RankedNeuron& b) { return a.count > b.count; });
  return s;
}

std::vector<RankedNeuron> top_fraction(const ActivationSummary& summary, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ArgumentError(fmt::format("top_fraction: fraction {} not in (0, 1]", fraction));
  }
  const std::size_t total = summary.ranking.size();
  const double exact = fraction * static_cast<double>(total);
  // Treat products within rounding noise of an integer as that integer
  // (0.01 * 6400 evaluates to 64.00000000000001).
  const double nearest = std::round(exact);
  const double k = std::fabs(exact - nearest) <= 1e-9 * std::max(1.0, exact) ? nearest : std::ceil(exact);
  const std::size_t n = std::min(total, static_cast<std::size_t>(k));
  return {summary.ranking.begin(), summary.ranking.begin() + static_cast<std::ptrdiff_t>(n)};
}

std::vector<std::vector<std::int64_t>> layer_heatmap(const ActivationAccumulator& acc) {
  std::vector<std::vector<std::int64_t>> m(acc.n_layers());
  for (std::size_t l = 0; l < acc.n_layers(); ++l) {
    m[l].assign(acc.counts().begin() + static_cast<std::ptrdiff_t>(l * acc.d_ffn()),
                acc.counts().begin() + static_cast<std::ptrdiff_t>((l + 1) * acc.d_ffn()));
  }
  return m;
}

double PruneReport::max_logit_delta() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.logit_delta);
  return m;
}

double PruneReport::max_mlp_delta() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.mlp_delta);
  return m;
}

double PruneReport::max_mlp_bound() const {
  double m = 0.0;
  for (const auto& s : steps) m = std::max(m, s.mlp_bound);
  return m;
}

bool PruneReport::all_within_bound() const {
  return std::all_of(steps.begin(), steps.end(), [](const PruneStep& s) { return s.within_bound; });
}

}  // namespace pimns
