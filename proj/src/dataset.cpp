#include "pimns/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pimns/errors.hpp"

namespace pimns {

using ojson = nlohmann::ordered_json;

bool is_classification(TaskKind k) { return k == TaskKind::Nli || k == TaskKind::Rte || k == TaskKind::BoolQ; }

const std::vector<std::string>& label_set(TaskKind k) {
  static const std::vector<std::string> nli{"entailment", "contradiction", "neutral"};
  static const std::vector<std::string> rte{"entailment", "not_entailment"};
  static const std::vector<std::string> boolq{"yes", "no"};
  static const std::vector<std::string> none;
  switch (k) {
    case TaskKind::Nli:
      return nli;
    case TaskKind::Rte:
      return rte;
    case TaskKind::BoolQ:
      return boolq;
    default:
      return none;
  }
}

PimSpec Example::to_spec() const {
  PimSpec s;
  s.original = source;
  s.parallels = parallels;
  s.variants = variants;
  s.task.kind = task;
  s.task.target = target;
  s.task.question = question;
  s.task.hypothesis = hypothesis;
  return s;
}

const std::string& Example::answer() const {
  if (label) return *label;
  if (references.empty()) throw ArgumentError(fmt::format("example '{}' has no reference", id));
  return references.front();
}

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

Provenance provenance_from(const std::string& s, std::string& system, std::size_t line, const std::string& field) {
  if (s == "human") return Provenance::Human;
  if (s == "paraphrase") return Provenance::Paraphrase;
  if (s == "machine" || s.rfind("machine:", 0) == 0) {
    if (s.size() > 8) system = s.substr(8);
    return Provenance::Machine;
  }
  throw SchemaError(line, field, fmt::format("unknown provenance '{}'", s));
}

std::string provenance_text(const ParallelText& t) {
  if (t.provenance == Provenance::Machine && !t.system.empty()) return "machine:" + t.system;
  return std::string(to_string(t.provenance));
}

const ojson& require(const ojson& j, const std::string& key, std::size_t line, const std::string& prefix = "") {
  if (!j.contains(key)) throw SchemaError(line, prefix + key, "missing");
  return j.at(key);
}

std::string require_string(const ojson& j, const std::string& key, std::size_t line, const std::string& prefix = "") {
  const ojson& v = require(j, key, line, prefix);
  if (!v.is_string()) throw SchemaError(line, prefix + key, "expected a string");
  std::string s = v.get<std::string>();
  if (s.empty()) throw SchemaError(line, prefix + key, "must not be empty");
  return s;
}

LanguageTag lang_field(const std::string& code, std::size_t line, const std::string& field) {
  try {
    return language(code);
  } catch (const ArgumentError& e) {
    throw SchemaError(line, field, e.what());
  }
}

Example parse_example(const ojson& j, std::size_t line, std::optional<TaskKind> expected) {
  if (!j.is_object()) throw SchemaError(line, "<record>", "expected a JSON object");
  Example ex;
  ex.line = line;
  ex.id = require_string(j, "id", line);
  try {
    ex.task = parse_task_kind(require_string(j, "task", line));
  } catch (const ArgumentError& e) {
    throw SchemaError(line, "task", e.what());
  }
  if (expected && *expected != ex.task) {
    throw SchemaError(line, "task", fmt::format("expected '{}', got '{}'", to_string(*expected), to_string(ex.task)));
  }

  const ojson& src = require(j, "source", line);
  if (!src.is_object()) throw SchemaError(line, "source", "expected an object");
  ex.source.language = lang_field(require_string(src, "lang", line, "source."), line, "source.lang");
  ex.source.text = require_string(src, "text", line, "source.");
  if (src.contains("hypothesis")) ex.source.hypothesis = require_string(src, "hypothesis", line, "source.");

  if (j.contains("target")) ex.target = lang_field(require_string(j, "target", line), line, "target");
  if (j.contains("question")) ex.question = require_string(j, "question", line);
  if (j.contains("hypothesis")) ex.hypothesis = require_string(j, "hypothesis", line);

  if (j.contains("parallels")) {
    const ojson& par = j.at("parallels");
    if (!par.is_object()) throw SchemaError(line, "parallels", "expected an object of language -> text");
    for (const auto& [code, value] : par.items()) {
      const std::string field = "parallels." + code;
      ParallelText p;
      p.language = lang_field(code, line, field);
      if (value.is_string()) {
        p.text = value.get<std::string>();
      } else if (value.is_object()) {
        p.text = require_string(value, "text", line, field + ".");
        if (value.contains("hypothesis")) p.hypothesis = require_string(value, "hypothesis", line, field + ".");
        if (value.contains("provenance")) {
          p.provenance = provenance_from(require_string(value, "provenance", line, field + "."), p.system, line,
                                         field + ".provenance");
        }
      } else {
        throw SchemaError(line, field, "expected a string or an object");
      }
      if (p.text.empty()) throw SchemaError(line, field, "must not be empty");
      if (p.language == ex.source.language) throw SchemaError(line, field, "repeats the source language");
      ex.parallels.push_back(std::move(p));
    }
  }
  if (j.contains("variants")) {
    const ojson& vars = j.at("variants");
    if (!vars.is_array()) throw SchemaError(line, "variants", "expected an array");
    for (std::size_t i = 0; i < vars.size(); ++i) {
      const std::string field = fmt::format("variants[{}]", i);
      ParallelText v;
      v.language = ex.source.language;
      v.text = require_string(vars.at(i), "text", line, field + ".");
      v.provenance = provenance_from(require_string(vars.at(i), "provenance", line, field + "."), v.system, line,
                                     field + ".provenance");
      ex.variants.push_back(std::move(v));
    }
  }

  if (is_classification(ex.task)) {
    std::string label = lower(require_string(j, "label", line));
    const auto& labels = label_set(ex.task);
    if (std::find(labels.begin(), labels.end(), label) == labels.end()) {
      throw SchemaError(line, "label", fmt::format("'{}' is not a {} label", label, to_string(ex.task)));
    }
    ex.label = std::move(label);
  } else {
    const ojson& refs = require(j, "references", line);
    if (!refs.is_array() || refs.empty()) throw SchemaError(line, "references", "expected a non-empty array");
    for (const auto& r : refs) {
      if (!r.is_string()) throw SchemaError(line, "references", "entries must be strings");
      ex.references.push_back(r.get<std::string>());
    }
  }

  if (ex.task == TaskKind::Translate && !ex.target) throw SchemaError(line, "target", "missing");
  if (ex.task == TaskKind::BoolQ && ex.question.empty()) throw SchemaError(line, "question", "missing");
  if (ex.task == TaskKind::Nli && ex.hypothesis.empty()) throw SchemaError(line, "hypothesis", "missing");
  if (ex.task == TaskKind::Rte && ex.source.hypothesis.empty()) {
    throw SchemaError(line, "source.hypothesis", "missing");
  }
  return ex;
}

}  // namespace

std::vector<Example> load_dataset(const std::filesystem::path& path, std::optional<TaskKind> task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open dataset '{}'", path.string()));
  std::vector<Example> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    ojson j;
    try {
      j = ojson::parse(text);
    } catch (const ojson::parse_error& e) {
      throw ParseError(line, e.what());
    }
    try {
      out.push_back(parse_example(j, line, task));
    } catch (const ojson::exception& e) {
      throw SchemaError(line, "<record>", e.what());
    }
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, std::span<const Example> examples) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot write dataset '{}'", path.string()));
  for (const auto& ex : examples) {
    ojson j;
    j["id"] = ex.id;
    j["task"] = std::string(to_string(ex.task));
    ojson src{{"lang", ex.source.language.code}, {"text", ex.source.text}};
    if (!ex.source.hypothesis.empty()) src["hypothesis"] = ex.source.hypothesis;
    j["source"] = std::move(src);
    if (ex.target) j["target"] = ex.target->code;
    if (!ex.parallels.empty()) {
      ojson par = ojson::object();
      for (const auto& p : ex.parallels) {
        ojson v{{"text", p.text}, {"provenance", provenance_text(p)}};
        if (!p.hypothesis.empty()) v["hypothesis"] = p.hypothesis;
        par[p.language.code] = std::move(v);
      }
      j["parallels"] = std::move(par);
    }
    if (!ex.variants.empty()) {
      ojson vars = ojson::array();
      for (const auto& v : ex.variants) vars.push_back({{"text", v.text}, {"provenance", provenance_text(v)}});
      j["variants"] = std::move(vars);
    }
    if (!ex.question.empty()) j["question"] = ex.question;
    if (!ex.hypothesis.empty()) j["hypothesis"] = ex.hypothesis;
    if (ex.label) j["label"] = *ex.label;
    else j["references"] = ex.references;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError(fmt::format("write failed for dataset '{}'", path.string()));
}

}  // namespace pimns
