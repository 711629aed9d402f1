#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pimns {

enum class TaskKind { Translate, Simplify, Nli, BoolQ, Summarize, Rte };

/// Direct: one input. Pim: the input plus parallels in other languages.
/// Monolingual: numbered same-language variants (multi-source or paraphrase).
enum class TemplateRole { Direct, Pim, Monolingual };

std::string_view to_string(TaskKind k);
std::string_view to_string(TemplateRole r);
/// Accepts the to_string() names plus "mt" for Translate. Throws ArgumentError.
TaskKind parse_task_kind(std::string_view s);

/// Prompt template. Text uses "\n" between lines and {slot} markers. A line
/// whose slots contain "(i)" is repeated for i = 1..n, where n is the number
/// of consecutively bound indices.
struct Template {
  std::string id;
  TaskKind task;
  TemplateRole role;
  std::string text;

  /// Slot names as written, "(i)" patterns included.
  std::set<std::string> slots() const;
  /// nullopt when the template repeats a parallel line; otherwise the number
  /// of distinct parallel-language slots.
  std::optional<std::size_t> parallel_arity() const;
};

using Bindings = std::map<std::string, std::string>;

/// Substitutes every slot. Throws RenderError on a missing slot or a binding
/// the template does not use.
std::string render(const Template& tpl, const Bindings& bindings);

class TemplateRegistry {
 public:
  /// The embedded prompt table.
  static const TemplateRegistry& builtin();

  /// Builtins overlaid with the records of an override file. Each record
  /// starts with a line "=== <task>.<role>[.<name>]" followed by the raw
  /// template text; the newline before the next header is not part of it.
  static TemplateRegistry with_overrides(const std::filesystem::path& path);

  void add(Template tpl);
  /// Throws RegistryError for unknown ids.
  const Template& get(std::string_view id) const;
  bool contains(std::string_view id) const;
  /// Default template for a task/role: "<task>.<role>". Throws RegistryError.
  const Template& default_for(TaskKind task, TemplateRole role) const;
  std::vector<std::string> ids() const;

 private:
  std::map<std::string, Template, std::less<>> templates_;
};

/// Throws RegistryError if the id is unknown to the builtin registry.
std::string render(std::string_view template_id, const Bindings& bindings);

/// "<task>.<role>" for the builtin id scheme, e.g. "mt.pim".
std::string template_id(TaskKind task, TemplateRole role);

}  // namespace pimns
