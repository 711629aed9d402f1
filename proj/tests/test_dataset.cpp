#include <gtest/gtest.h>

#include "pimns/dataset.hpp"
#include "pimns/errors.hpp"
#include "support.hpp"

namespace pimns {
namespace {

using test::TempDir;

TEST(Dataset, EmptyFileGivesEmptyList) {
  TempDir dir;
  test::spit(dir / "e.jsonl", "");
  EXPECT_TRUE(load_dataset(dir / "e.jsonl").empty());
}

TEST(Dataset, FixtureRoundTripsThroughSave) {
  const auto a = load_dataset(test::fixture("translate3.jsonl"), TaskKind::Translate);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0].id, "t0");
  EXPECT_EQ(a[2].line, 3u);
  ASSERT_EQ(a[0].parallels.size(), 2u);
  EXPECT_EQ(a[0].parallels[0].language.code, "fr");  // file order, not key order
  EXPECT_EQ(a[0].parallels[1].provenance, Provenance::Machine);
  EXPECT_EQ(a[0].parallels[1].system, "nllb");
  TempDir dir;
  save_dataset(dir / "copy.jsonl", a);
  EXPECT_EQ(load_dataset(dir / "copy.jsonl"), a);
}

TEST(Dataset, MissingSourceIsSchemaErrorAtThatLine) {
  TempDir dir;
  const std::string text = test::slurp(test::fixture("translate3.jsonl"));
  const std::string ok = text.substr(0, text.find('\n') + 1);
  test::spit(dir / "d.jsonl", ok + R"({"id":"x","task":"translate","target":"en","references":["r"]})" "\n");
  try {
    load_dataset(dir / "d.jsonl");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.field(), "source");
  }
}

TEST(Dataset, MalformedLineIsParseErrorWithLineNumber) {
  TempDir dir;
  test::spit(dir / "d.jsonl", "\n{\"id\": 1,\n");
  try {
    load_dataset(dir / "d.jsonl");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

void expect_field_error(const std::string& line, const std::string& field) {
  TempDir dir;
  test::spit(dir / "d.jsonl", line + "\n");
  try {
    load_dataset(dir / "d.jsonl");
    FAIL() << "expected SchemaError for " << field;
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), field);
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(Dataset, SchemaErrorsNameTheField) {
  expect_field_error(R"({"task":"translate","source":{"lang":"de","text":"a"},"target":"en","references":["r"]})", "id");
  expect_field_error(R"({"id":"a","task":"translate","source":{"lang":"de","text":"a"},"references":["r"]})", "target");
  expect_field_error(R"({"id":"a","task":"translate","source":{"lang":"de","text":"a"},"target":"en","references":[]})",
                     "references");
  expect_field_error(R"({"id":"a","task":"translate","source":{"lang":"de","text":"a"},"target":"en","parallels":{"xx":"b"},"references":["r"]})",
                     "parallels.xx");
  expect_field_error(R"({"id":"a","task":"nli","source":{"lang":"en","text":"a"},"hypothesis":"h","label":"maybe"})",
                     "label");
  expect_field_error(R"({"id":"a","task":"boolq","source":{"lang":"en","text":"a"},"label":"yes"})", "question");
  expect_field_error(R"({"id":"a","task":"poetry","source":{"lang":"en","text":"a"},"label":"yes"})", "task");
}

TEST(Dataset, TaskFilterRejectsOtherTasks) {
  try {
    load_dataset(test::fixture("boolq2.jsonl"), TaskKind::Translate);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "task");
  }
}

TEST(Dataset, ClassificationLabelsAreLowercased) {
  const auto d = load_dataset(test::fixture("boolq2.jsonl"));
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[1].label, "no");
  EXPECT_EQ(d[1].answer(), "no");
  EXPECT_EQ(d[0].to_spec().task.question, "Is Paris in France?");
}

TEST(Dataset, MissingFileIsIoError) { EXPECT_THROW(load_dataset("/nonexistent/d.jsonl"), IoError); }

}  // namespace
}  // namespace pimns
