#include "pimns/languages.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "pimns/errors.hpp"

namespace pimns {

const std::vector<LanguageTag>& language_registry() {
  static const std::vector<LanguageTag> registry = {
      {"en", "English"},  {"de", "German"},   {"fr", "French"},   {"es", "Spanish"},  {"ru", "Russian"},
      {"uk", "Ukrainian"}, {"it", "Italian"},  {"zh", "Chinese"},  {"ja", "Japanese"}, {"cs", "Czech"},
      {"is", "Icelandic"}, {"ro", "Romanian"}, {"pt", "Portuguese"}, {"nl", "Dutch"},  {"pl", "Polish"},
      {"ko", "Korean"},   {"ar", "Arabic"},   {"hi", "Hindi"},    {"tr", "Turkish"},  {"vi", "Vietnamese"},
  };
  return registry;
}

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

const LanguageTag& language(std::string_view code_or_name) {
  for (const auto& tag : language_registry()) {
    if (iequals(tag.code, code_or_name) || iequals(tag.name, code_or_name)) return tag;
  }
  throw ArgumentError(fmt::format("unknown language '{}'", code_or_name));
}

std::size_t registry_index(const LanguageTag& tag) {
  const auto& reg = language_registry();
  auto it = std::find(reg.begin(), reg.end(), tag);
  if (it == reg.end()) throw ArgumentError(fmt::format("language '{}' is not registered", tag.code));
  return static_cast<std::size_t>(it - reg.begin());
}

}  // namespace pimns
