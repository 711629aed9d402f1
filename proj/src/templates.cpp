#include "pimns/templates.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include "pimns/errors.hpp"

namespace pimns {

std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Translate:
      return "translate";
    case TaskKind::Simplify:
      return "simplify";
    case TaskKind::Nli:
      return "nli";
    case TaskKind::BoolQ:
      return "boolq";
    case TaskKind::Summarize:
      return "summarize";
    case TaskKind::Rte:
      return "rte";
  }
  return "unknown";
}

std::string_view to_string(TemplateRole r) {
  switch (r) {
    case TemplateRole::Direct:
      return "direct";
    case TemplateRole::Pim:
      return "pim";
    case TemplateRole::Monolingual:
      return "mono";
  }
  return "unknown";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "mt") return TaskKind::Translate;
  for (auto k : {TaskKind::Translate, TaskKind::Simplify, TaskKind::Nli, TaskKind::BoolQ, TaskKind::Summarize,
                 TaskKind::Rte}) {
    if (to_string(k) == s) return k;
  }
  throw ArgumentError(fmt::format("unknown task '{}'", s));
}

namespace {

TemplateRole parse_role(std::string_view s) {
  for (auto r : {TemplateRole::Direct, TemplateRole::Pim, TemplateRole::Monolingual}) {
    if (to_string(r) == s) return r;
  }
  throw RegistryError(fmt::format("unknown template role '{}'", s));
}

std::string task_prefix(TaskKind k) { return k == TaskKind::Translate ? "mt" : std::string(to_string(k)); }

struct Piece {
  bool is_slot;
  std::string value;
};

std::vector<Piece> split_line(std::string_view line) {
  std::vector<Piece> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto open = line.find('{', pos);
    const auto close = open == std::string_view::npos ? open : line.find('}', open);
    if (open == std::string_view::npos || close == std::string_view::npos) {
      out.push_back({false, std::string(line.substr(pos))});
      break;
    }
    if (open > pos) out.push_back({false, std::string(line.substr(pos, open - pos))});
    out.push_back({true, std::string(line.substr(open + 1, close - open - 1))});
    pos = close + 1;
  }
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    const auto nl = text.find('\n', pos);
    lines.push_back(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return lines;
}

constexpr std::string_view kRepeat = "(i)";

std::string indexed(const std::string& slot, std::size_t i) {
  std::string s = slot;
  s.replace(s.find(kRepeat), kRepeat.size(), fmt::format("({})", i));
  return s;
}

}  // namespace

std::set<std::string> Template::slots() const {
  std::set<std::string> out;
  for (auto line : split_lines(text)) {
    for (const auto& p : split_line(line)) {
      if (p.is_slot) out.insert(p.value);
    }
  }
  return out;
}

std::optional<std::size_t> Template::parallel_arity() const {
  static const std::regex numbered(R"(parallel-language\d*)");
  std::size_t n = 0;
  for (const auto& s : slots()) {
    if (s.find(kRepeat) != std::string::npos) return std::nullopt;
    if (std::regex_match(s, numbered)) ++n;
  }
  return n;
}

std::string render(const Template& tpl, const Bindings& bindings) {
  std::set<std::string> used;
  auto lookup = [&](const std::string& slot) -> const std::string& {
    auto it = bindings.find(slot);
    if (it == bindings.end()) throw RenderError(fmt::format("template '{}': missing slot '{}'", tpl.id, slot));
    used.insert(slot);
    return it->second;
  };

  std::string out;
  bool first_line = true;
  auto emit = [&](const std::vector<Piece>& pieces, std::optional<std::size_t> index) {
    if (!first_line) out += '\n';
    first_line = false;
    for (const auto& p : pieces) {
      if (!p.is_slot) out += p.value;
      else out += lookup(index ? indexed(p.value, *index) : p.value);
    }
  };

  for (auto line : split_lines(tpl.text)) {
    const auto pieces = split_line(line);
    std::vector<std::string> repeat_slots;
    for (const auto& p : pieces) {
      if (p.is_slot && p.value.find(kRepeat) != std::string::npos) repeat_slots.push_back(p.value);
    }
    if (repeat_slots.empty()) {
      emit(pieces, std::nullopt);
      continue;
    }
    for (std::size_t i = 1;; ++i) {
      bool any = false;
      for (const auto& s : repeat_slots) any = any || bindings.contains(indexed(s, i));
      if (!any) break;
      emit(pieces, i);
    }
  }

  for (const auto& [key, _] : bindings) {
    if (!used.contains(key)) throw RenderError(fmt::format("template '{}': unknown slot '{}'", tpl.id, key));
  }
  return out;
}

namespace {

// Transcriptions of the prompt table. Lines are joined with "\n" and every
// final answer cue ends in ": ".
std::vector<Template> builtin_templates() {
  using T = TaskKind;
  using R = TemplateRole;
  return {
      {"mt.direct", T::Translate, R::Direct,
       "Translate into {target-language}.\n"
       "{source-language}: {source-sentence}\n"
       "{target-language}: "},
      {"mt.pim", T::Translate, R::Pim,
       "Translate into {target-language}.\n"
       "{source-language}: {source-sentence}\n"
       "{parallel-language(i)}: {parallel-sentence(i)}\n"
       "{target-language}: "},
      {"mt.mono", T::Translate, R::Monolingual,
       "There are six sentences in {source-language}, I need you to fully understand all of them and then "
       "translate to one {target-language} sentence.\n"
       "{source-language}:\n"
       "1. {paraphrase-sentence1}\n"
       "2. {paraphrase-sentence2}\n"
       "3. {paraphrase-sentence3}\n"
       "4. {paraphrase-sentence4}\n"
       "5. {paraphrase-sentence5}\n"
       "{target-language}: "},
      {"simplify.direct", T::Simplify, R::Direct,
       "You will be presented with a complex sentence. Your task is to simplify this sentence to make it easier "
       "to understand, while maintaining its core meaning and factual content. The goal is to generate a "
       "simplified version of the sentence without losing important information or altering its original "
       "intent. Please provide a single simplified sentence as your response, without any explanation. Here is "
       "the complex sentence:\n"
       "Complex Sentence: {sentence}\n"
       "Your simplified version: "},
      {"simplify.pim", T::Simplify, R::Pim,
       "You will be presented with the same sentence in four different languages: {source-language}, "
       "{parallel-language1}, {parallel-language2}, and {parallel-language3}. These sentences convey the exact "
       "same meaning. Your task is to simplify the sentence into {source-language} to make it easier to "
       "understand, while maintaining its core meaning and factual content. It is important to note that since "
       "all sentences have the same meaning, you only need to provide one simplified {source-language} version. "
       "Please generate a single simplified {source-language} sentence as your response, without any "
       "explanation. Here are the sentences:\n"
       "{source-language} Sentence: {source-sentence}\n"
       "{parallel-language1} Sentence: {parallel-sentence1}\n"
       "{parallel-language2} Sentence: {parallel-sentence2}\n"
       "{parallel-language3} Sentence: {parallel-sentence3}\n"
       "Your simplified {source-language} version: "},
      {"rte.direct", T::Rte, R::Direct,
       "You will be presented with a pair of sentences.Your task is to determine the relationship between these "
       "two sentences. There are two possible relationships: entailment, not_entailment. 'entailment' means the "
       "first sentence logically implies the second one. 'not_entailment' means the first sentence logically "
       "conflicts with the second one. Please provide a single prediction for the relationship based on these "
       "sentence pairs, without any explanation. Here is the sentence pair:\n"
       "Premise: {src-premise}\n"
       "Hypothesis: {src-hypothesis}\n"
       "Your prediction: "},
      {"rte.pim", T::Rte, R::Pim,
       "You will be provided with a set of sentence pairs that are semantically identical but presented in four "
       "different languages: {src-language}, {parallel-language1}, {parallel-language2}, and "
       "{parallel-language3}. Each pair consists of a premise and a hypothesis. Despite the language "
       "differences, the meaning of these sentences is the same across all languages. Your task is to analyze "
       "these sentence pairs and determine the relationship between the premise and the hypothesis. There are "
       "two possible relationships: entailment and not_entailment. 'entailment' means the first sentence "
       "logically implies the second one. 'not_entailment' means the first sentence logically conflicts with "
       "the second one. Please provide a single prediction for the relationship based on these sentence pairs, "
       "without any explanation. Here are the sentence pairs:\n"
       "{src-language}:\n"
       "Premise: {src-premise}\n"
       "Hypothesis: {src-hypothesis}\n"
       "{parallel-language1}:\n"
       "Premise: {para1-premise}\n"
       "Hypothesis: {para1-hypothesis}\n"
       "{parallel-language2}:\n"
       "Premise: {para2-premise}\n"
       "Hypothesis: {para2-hypothesis}\n"
       "{parallel-language3}:\n"
       "Premise: {para3-premise}\n"
       "Hypothesis: {para3-hypothesis}\n"
       "Your prediction: "},
      {"summarize.direct", T::Summarize, R::Direct,
       "You will be presented with a long text. Your task is to summarize this text in 1-2 sentences in "
       "{source-language}, capturing the most important and core content. The summary should distill the "
       "essence of the article concisely and accurately. Please provide a single summary for the text without "
       "any explanation. Here is the text:\n"
       "{source-text}\n"
       "Your summary: "},
      {"summarize.pim", T::Summarize, R::Pim,
       "You will be presented with two texts, each in a different language: {source-language}, "
       "{parallel-language}. These texts convey the same meaning in their respective languages. Your task is to "
       "summarize the core content of these texts in one summary (1-2 sentences) in {source-language}, "
       "capturing the most important and central idea. Please provide a single summary for the texts without "
       "any explanation. Here are the texts:\n"
       "{source-language} Text: {source-text}\n"
       "{parallel-language} Text: {parallel-text}\n"
       "Your summary in {source-language}: "},
      {"boolq.direct", T::BoolQ, R::Direct,
       "You will be provided with a passage and a yes/no question based on that passage. Your task is to read "
       "the passage and then answer the question with a simple 'Yes' or 'No' based on the information in the "
       "passage. Please do not provide any explanations or reasoning for your answer.\n"
       "Passage: {source-passage}\n"
       "Question: {source-question}\n"
       "Please respond with 'Yes' or 'No' only. Your answer: "},
      {"boolq.pim", T::BoolQ, R::Pim,
       "You will be provided with two passages, each in a different language: {source-language}, "
       "{parallel-language}. These passages convey the same meaning. Your task is to understand the content of "
       "these passages and then answer a yes/no question based on them. It's important to note that you only "
       "need to make one prediction as the semantic content across all the passages is identical. Please do not "
       "provide any explanations or reasoning for your answer.\n"
       "{source-language} Passage: {source-sentence}\n"
       "{parallel-language} Passage: {parallel-sentence}\n"
       "Question: {source-question}\n"
       "Please respond with 'Yes' or 'No' only. Your answer: "},
      {"nli.direct", T::Nli, R::Direct,
       "You will be presented with a pair of sentences. Your task is to determine the relationship between these "
       "two sentences. There are three possible relationships: entailment, contradiction, or neutral. Please "
       "provide a single prediction for the relationship based on these sentence pairs, without any "
       "explanation. Here is the sentence pair:\n"
       "Premise: {premise-sentence}\n"
       "Hypothesis: {hypothesis-sentence}\n"
       "Your prediction: "},
      {"nli.pim", T::Nli, R::Pim,
       "You will be given a premise in multiple languages ({source-language}, {parallel-language1}, "
       "{parallel-language2}, {parallel-language3}) and a hypothesis in {source-language}. Your task is to "
       "determine the relationship between the multilingual premises and the {source-language} hypothesis. "
       "There are three possible relationships: entailment, contradiction, or neutral. Please provide a single "
       "prediction for the relationship, without any explanation. Here are the premises and the hypothesis:\n"
       "{source-language} Premise: {source-premise}\n"
       "{parallel-language1} Premise: {parallel-premise1}\n"
       "{parallel-language2} Premise: {parallel-premise2}\n"
       "{parallel-language3} Premise: {parallel-premise3}\n"
       "Hypothesis: {source-hypothesis}\n"
       "Your prediction: "},
  };
}

}  // namespace

const TemplateRegistry& TemplateRegistry::builtin() {
  static const TemplateRegistry reg = [] {
    TemplateRegistry r;
    for (auto& t : builtin_templates()) r.add(std::move(t));
    return r;
  }();
  return reg;
}

TemplateRegistry TemplateRegistry::with_overrides(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open template file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();

  TemplateRegistry reg = builtin();
  std::optional<std::string> id;
  std::string body;
  auto flush = [&] {
    if (!id) return;
    if (!body.empty() && body.back() == '\n') body.pop_back();
    const auto dot = id->find('.');
    const auto dot2 = dot == std::string::npos ? dot : id->find('.', dot + 1);
    if (dot == std::string::npos) throw RegistryError(fmt::format("template id '{}' lacks <task>.<role>", *id));
    TaskKind task;
    try {
      task = parse_task_kind(id->substr(0, dot));
    } catch (const ArgumentError& e) {
      throw RegistryError(fmt::format("template '{}': {}", *id, e.what()));
    }
    const TemplateRole role =
        parse_role(id->substr(dot + 1, dot2 == std::string::npos ? std::string::npos : dot2 - dot - 1));
    reg.add({*id, task, role, body});
  };

  std::size_t pos = 0;
  while (pos <= content.size()) {
    const auto nl = content.find('\n', pos);
    const std::string line = content.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    if (line.rfind("=== ", 0) == 0) {
      flush();
      id = line.substr(4);
      body.clear();
    } else if (id) {
      body += line;
      if (nl != std::string::npos) body += '\n';
    } else if (!line.empty()) {
      throw RegistryError("template file must start with a '=== <id>' header");
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  flush();
  return reg;
}

void TemplateRegistry::add(Template tpl) {
  std::string key = tpl.id;
  templates_.insert_or_assign(std::move(key), std::move(tpl));
}

const Template& TemplateRegistry::get(std::string_view id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) throw RegistryError(fmt::format("unknown template '{}'", id));
  return it->second;
}

bool TemplateRegistry::contains(std::string_view id) const { return templates_.find(id) != templates_.end(); }

const Template& TemplateRegistry::default_for(TaskKind task, TemplateRole role) const {
  return get(template_id(task, role));
}

std::vector<std::string> TemplateRegistry::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : templates_) out.push_back(id);
  return out;
}

std::string render(std::string_view template_id, const Bindings& bindings) {
  return render(TemplateRegistry::builtin().get(template_id), bindings);
}

std::string template_id(TaskKind task, TemplateRole role) {
  return fmt::format("{}.{}", task_prefix(task), to_string(role));
}

}  // namespace pimns
