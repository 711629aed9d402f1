#include <gtest/gtest.h>

#include "pimns/errors.hpp"
#include "pimns/templates.hpp"
#include "support.hpp"

namespace pimns {
namespace {

// Every slot bound to its own name; repeated lines expand to three entries.
Bindings identity_bindings(const Template& t) {
  Bindings b;
  for (const auto& slot : t.slots()) {
    const auto at = slot.find("(i)");
    if (at == std::string::npos) {
      b[slot] = slot;
      continue;
    }
    for (int i = 1; i <= 3; ++i) {
      std::string name = slot;
      name.replace(at, 3, "(" + std::to_string(i) + ")");
      b[name] = name;
    }
  }
  return b;
}

TEST(TemplateGolden, EveryBuiltinMatchesItsTranscription) {
  const auto& reg = TemplateRegistry::builtin();
  const auto ids = reg.ids();
  EXPECT_EQ(ids.size(), 13u);
  for (const auto& id : ids) {
    const auto path = test::golden(id + ".txt");
    ASSERT_TRUE(std::filesystem::exists(path)) << id;
    const Template& t = reg.get(id);
    EXPECT_EQ(render(t, identity_bindings(t)), test::slurp(path)) << id;
  }
}

TEST(TemplateGolden, GermanToEnglishDirect) {
  const std::string out = render("mt.direct", {{"target-language", "English"},
                                               {"source-language", "German"},
                                               {"source-sentence", "Guten Morgen."}});
  EXPECT_EQ(out, "Translate into English.\nGerman: Guten Morgen.\nEnglish: ");
}

TEST(Template, RepeatedLineFollowsConsecutiveIndices) {
  Bindings b{{"target-language", "English"},
             {"source-language", "German"},
             {"source-sentence", "s"},
             {"parallel-language(1)", "French"},
             {"parallel-sentence(1)", "f"}};
  EXPECT_EQ(render("mt.pim", b), "Translate into English.\nGerman: s\nFrench: f\nEnglish: ");
  b["parallel-language(3)"] = "Czech";
  b["parallel-sentence(3)"] = "c";
  EXPECT_THROW(render("mt.pim", b), RenderError);  // index 3 is unreachable without 2
}

TEST(Template, MissingOrUnknownSlotIsAnError) {
  EXPECT_THROW(render("mt.direct", {{"target-language", "English"}, {"source-language", "German"}}), RenderError);
  EXPECT_THROW(render("mt.direct", {{"target-language", "English"},
                                    {"source-language", "German"},
                                    {"source-sentence", "x"},
                                    {"bogus", "y"}}),
               RenderError);
  try {
    render("mt.direct", {{"target-language", "English"}, {"source-language", "German"}});
  } catch (const RenderError& e) {
    EXPECT_NE(std::string(e.what()).find("source-sentence"), std::string::npos);
  }
}

TEST(Template, ParallelArity) {
  const auto& reg = TemplateRegistry::builtin();
  EXPECT_EQ(reg.get("mt.pim").parallel_arity(), std::nullopt);
  EXPECT_EQ(reg.get("mt.direct").parallel_arity(), 0u);
  EXPECT_EQ(reg.get("simplify.pim").parallel_arity(), 3u);
  EXPECT_EQ(reg.get("rte.pim").parallel_arity(), 3u);
  EXPECT_EQ(reg.get("nli.pim").parallel_arity(), 3u);
  EXPECT_EQ(reg.get("summarize.pim").parallel_arity(), 1u);
  EXPECT_EQ(reg.get("boolq.pim").parallel_arity(), 1u);
}

TEST(Template, RenderingIsIndependentOfLanguage) {
  // The same template text serves every language pair; only the bindings change.
  const Bindings de{{"target-language", "English"}, {"source-language", "German"}, {"source-sentence", "x"}};
  const Bindings zh{{"target-language", "Japanese"}, {"source-language", "Chinese"}, {"source-sentence", "x"}};
  const std::string a = render("mt.direct", de), b = render("mt.direct", zh);
  EXPECT_EQ(a, "Translate into English.\nGerman: x\nEnglish: ");
  EXPECT_EQ(b, "Translate into Japanese.\nChinese: x\nJapanese: ");
}

TEST(Registry, UnknownIdAndDefaults) {
  const auto& reg = TemplateRegistry::builtin();
  EXPECT_THROW(reg.get("mt.fancy"), RegistryError);
  EXPECT_EQ(reg.default_for(TaskKind::Translate, TemplateRole::Pim).id, "mt.pim");
  EXPECT_EQ(template_id(TaskKind::Nli, TemplateRole::Direct), "nli.direct");
  EXPECT_THROW(reg.default_for(TaskKind::Nli, TemplateRole::Monolingual), RegistryError);
  EXPECT_EQ(parse_task_kind("mt"), TaskKind::Translate);
  EXPECT_THROW(parse_task_kind("qa"), ArgumentError);
}

TEST(Registry, OverrideFileAddsAndReplaces) {
  test::TempDir dir;
  test::spit(dir / "t.txt",
             "=== mt.direct\nTo {target-language}:\n{source-sentence}\n=== mt.pim.short\n{source-sentence} => ");
  const auto reg = TemplateRegistry::with_overrides(dir / "t.txt");
  EXPECT_EQ(reg.get("mt.direct").text, "To {target-language}:\n{source-sentence}");
  EXPECT_EQ(reg.get("mt.pim.short").role, TemplateRole::Pim);
  EXPECT_EQ(reg.get("mt.pim.short").text, "{source-sentence} => ");
  EXPECT_TRUE(reg.contains("nli.pim"));
  EXPECT_EQ(TemplateRegistry::builtin().get("mt.direct").text.substr(0, 9), "Translate");
}

}  // namespace
}  // namespace pimns
