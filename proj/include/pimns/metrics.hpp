#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pimns {

/// Corpus BLEU-4 in [0, 100] over whitespace tokens, brevity penalty against
/// the closest reference length (shorter wins ties). An order n whose clipped
/// match count is zero uses the add-one precision 1 / (total_n + 1); a corpus
/// with no unigram match scores 0. Throws ArgumentError on a length mismatch
/// or a hypothesis without references.
double bleu(std::span<const std::string> hypotheses, std::span<const std::vector<std::string>> references);

using Normalizer = std::function<std::string(std::string_view)>;

/// Lowercases ASCII, trims whitespace, strips trailing punctuation and maps
/// true/y to "yes" and false/n to "no".
std::string default_normalize(std::string_view text);

/// Percentage of positions where normalizer(prediction) == normalizer(label).
/// Throws ArgumentError on a length mismatch or empty input.
double accuracy(std::span<const std::string> predictions, std::span<const std::string> labels,
                const Normalizer& normalizer = default_normalize);

}  // namespace pimns
