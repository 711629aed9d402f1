#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pimns {

struct LanguageTag {
  std::string code;  // two-letter, lowercase
  std::string name;  // English exonym

  friend bool operator==(const LanguageTag& a, const LanguageTag& b) { return a.code == b.code; }
};

/// Fixed registry; its order is the tie-break order for language selection.
const std::vector<LanguageTag>& language_registry();

/// Looks up a code ("de") or English name ("German"), case-insensitively.
/// Throws ArgumentError for unknown languages.
const LanguageTag& language(std::string_view code_or_name);

/// Position in language_registry().
std::size_t registry_index(const LanguageTag& tag);

}  // namespace pimns
