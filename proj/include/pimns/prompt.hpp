#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pimns/languages.hpp"
#include "pimns/templates.hpp"

namespace pimns {

enum class Provenance { Human, Machine, Paraphrase };

struct ParallelText {
  LanguageTag language;
  std::string text;
  Provenance provenance = Provenance::Human;
  std::string system;      // translator name when provenance is Machine
  std::string hypothesis;  // second sentence of an RTE pair

  friend bool operator==(const ParallelText&, const ParallelText&) = default;
};

struct TaskSpec {
  TaskKind kind = TaskKind::Translate;
  std::optional<LanguageTag> target;  // translate
  std::string question;               // boolq
  std::string hypothesis;             // nli (stated in the source language)
};

/// One task input with its parallel translations.
struct PimSpec {
  ParallelText original;
  std::vector<ParallelText> parallels;
  /// Same-language rewrites of the original, for the monolingual strategies.
  std::vector<ParallelText> variants;
  TaskSpec task;
  std::optional<std::string> template_id;

  /// Throws ArgumentError on empty texts, repeated languages or missing task fields.
  void validate() const;
};

struct LanguageScore {
  LanguageTag language;
  double score;
};

/// The k best-scoring languages, best first; equal scores keep registry order.
/// Throws ArgumentError when k exceeds the candidate count or a score is not finite.
std::vector<LanguageTag> select_languages(std::span<const LanguageScore> candidates, std::size_t k);

enum class OrderPolicy { BestLast };

/// Original first, then the parallels in ascending score order so the best
/// understood one closes the sequence. Equal scores keep the given order.
/// Throws ArgumentError when a parallel has no score.
std::vector<LanguageTag> order_languages(const LanguageTag& original, std::span<const LanguageTag> parallels,
                                         std::span<const LanguageScore> scores,
                                         OrderPolicy policy = OrderPolicy::BestLast);

struct Strategy {
  enum class Kind { Direct, Pivot, Pim, PimMs, PimPa, PimMl };
  Kind kind = Kind::Direct;
  std::size_t k = 0;                 // Pim, and PimMl when limited
  std::optional<LanguageTag> pivot;  // Pivot
  std::size_t shots = 0;             // few-shot demonstrations prepended by the harness

  /// "direct", "pivot:<lang>", "pim:<k>", "pim_ms", "pim_pa", "pim_ml[:<k>]",
  /// optionally prefixed by "fewshot:<n>/"; "fewshot:<n>" alone means direct.
  /// Throws ArgumentError.
  static Strategy parse(std::string_view text);
  /// Canonical text form; parse(label()) == *this.
  std::string label() const;

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Renders the strategy's prompt for one input. Scores, when given, drive
/// language selection and ordering for the multilingual strategies.
/// Throws ArgumentError when the PimSpec lacks the texts the strategy needs and
/// ConfigError when the strategy and template do not fit together.
std::string build_prompt(const PimSpec& spec, const std::optional<std::vector<LanguageScore>>& scores,
                         const Strategy& strategy, const TemplateRegistry& registry = TemplateRegistry::builtin());

struct Demonstration {
  PimSpec spec;
  std::string answer;
};

/// Worked demonstrations (prompt followed by its answer) then the query
/// prompt, separated by blank lines. Uses the first strategy.shots demos.
/// Throws ArgumentError when fewer demos than shots are supplied.
std::string build_few_shot_prompt(const PimSpec& spec, const std::optional<std::vector<LanguageScore>>& scores,
                                  const Strategy& strategy, std::span<const Demonstration> demos,
                                  const TemplateRegistry& registry = TemplateRegistry::builtin());

nlohmann::json to_json(const PimSpec& spec);
/// Throws SchemaError (line 0) naming the offending field.
PimSpec pim_spec_from_json(const nlohmann::json& j);
/// Object {code: score}. Throws SchemaError.
std::vector<LanguageScore> scores_from_json(const nlohmann::json& j);

std::string_view to_string(Provenance p);

}  // namespace pimns
