#include "pimns/metrics.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include "pimns/errors.hpp"

namespace pimns {

namespace {

constexpr std::size_t kMaxOrder = 4;

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string t; in >> t;) out.push_back(std::move(t));
  return out;
}

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& toks, std::size_t n) {
  NgramCounts c;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++c[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
  return c;
}

}  // namespace

double bleu(std::span<const std::string> hypotheses, std::span<const std::vector<std::string>> references) {
  if (hypotheses.size() != references.size()) throw ArgumentError("hypothesis and reference counts differ");
  std::array<std::size_t, kMaxOrder> matches{};
  std::array<std::size_t, kMaxOrder> totals{};
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (references[i].empty()) throw ArgumentError("hypothesis " + std::to_string(i) + " has no reference");
    const auto hyp = tokens(hypotheses[i]);
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references[i]) refs.push_back(tokens(r));

    hyp_len += hyp.size();
    std::size_t best = refs.front().size();
    for (const auto& r : refs) {
      const auto d = [&](std::size_t len) { return len > hyp.size() ? len - hyp.size() : hyp.size() - len; };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) best = r.size();
    }
    ref_len += best;

    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      NgramCounts max_ref;
      for (const auto& r : refs)
        for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
      for (const auto& [g, c] : ngrams(hyp, n)) {
        totals[n - 1] += c;
        auto it = max_ref.find(g);
        if (it != max_ref.end()) matches[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (hyp_len == 0 || matches[0] == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    const double p = matches[n] > 0 ? static_cast<double>(matches[n]) / static_cast<double>(totals[n])
                                    : 1.0 / static_cast<double>(totals[n] + 1);
    log_sum += std::log(p);
  }
  const double bp =
      hyp_len > ref_len ? 1.0 : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return 100.0 * bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

std::string default_normalize(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  auto trim = [&](std::string& t) {
    while (!t.empty() && is_space(static_cast<unsigned char>(t.back()))) t.pop_back();
    std::size_t i = 0;
    while (i < t.size() && is_space(static_cast<unsigned char>(t[i]))) ++i;
    t.erase(0, i);
  };
  trim(s);
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back())) && s.back() != '_') s.pop_back();
  trim(s);
  if (s == "true" || s == "y") return "yes";
  if (s == "false" || s == "n") return "no";
  return s;
}

double accuracy(std::span<const std::string> predictions, std::span<const std::string> labels,
                const Normalizer& normalizer) {
  if (predictions.size() != labels.size()) throw ArgumentError("prediction and label counts differ");
  if (predictions.empty()) throw ArgumentError("accuracy needs at least one prediction");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (normalizer(predictions[i]) == normalizer(labels[i])) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace pimns
