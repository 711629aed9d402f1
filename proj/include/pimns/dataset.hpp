#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pimns/prompt.hpp"

namespace pimns {

/// One dataset record. JSONL schema, one object per line:
///
///   {"id": "...", "task": "translate|simplify|nli|boolq|summarize|rte",
///    "source": {"lang": "de", "text": "...", "hypothesis": "..."?},
///    "target": "en"?,                       // translate
///    "parallels": {"fr": "..." | {"text": "...", "hypothesis": "..."?, "provenance": "..."?}, ...}?,
///    "variants": [{"text": "...", "provenance": "paraphrase|machine[:system]"}]?,
///    "question": "..."?,                    // boolq
///    "hypothesis": "..."?,                  // nli
///    "references": ["..."] | "label": "..."}
///
/// Parallels keep their file order.
struct Example {
  std::string id;
  TaskKind task = TaskKind::Translate;
  ParallelText source;
  std::vector<ParallelText> parallels;
  std::vector<ParallelText> variants;
  std::optional<LanguageTag> target;
  std::string question;
  std::string hypothesis;
  std::vector<std::string> references;
  std::optional<std::string> label;
  std::size_t line = 0;  // 1-based line in the source file, 0 when built in memory

  PimSpec to_spec() const;
  /// First reference, or the label for classification tasks.
  const std::string& answer() const;

  friend bool operator==(const Example&, const Example&) = default;
};

bool is_classification(TaskKind k);
/// Lowercase label set of a classification task; empty for generation tasks.
const std::vector<std::string>& label_set(TaskKind k);

/// Throws IoError, ParseError (malformed JSON, with line number) or
/// SchemaError (missing/invalid field, with line number and field name).
/// When `task` is given every line must declare it.
std::vector<Example> load_dataset(const std::filesystem::path& path, std::optional<TaskKind> task = std::nullopt);

void save_dataset(const std::filesystem::path& path, std::span<const Example> examples);

}  // namespace pimns
