#include "pimns/prompt.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pimns/errors.hpp"

namespace pimns {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Human:
      return "human";
    case Provenance::Machine:
      return "machine";
    case Provenance::Paraphrase:
      return "paraphrase";
  }
  return "unknown";
}

void PimSpec::validate() const {
  if (original.text.empty()) throw ArgumentError("original text is empty");
  std::set<std::string> langs{original.language.code};
  for (const auto& p : parallels) {
    if (p.text.empty()) throw ArgumentError(fmt::format("parallel '{}' has empty text", p.language.code));
    if (!langs.insert(p.language.code).second) {
      throw ArgumentError(fmt::format("language '{}' appears more than once", p.language.code));
    }
  }
  for (const auto& v : variants) {
    if (v.text.empty()) throw ArgumentError("variant text is empty");
  }
  switch (task.kind) {
    case TaskKind::Translate:
      if (!task.target) throw ArgumentError("translate task needs a target language");
      break;
    case TaskKind::BoolQ:
      if (task.question.empty()) throw ArgumentError("boolq task needs a question");
      break;
    case TaskKind::Nli:
      if (task.hypothesis.empty()) throw ArgumentError("nli task needs a hypothesis");
      break;
    case TaskKind::Rte:
      if (original.hypothesis.empty()) throw ArgumentError("rte input needs a hypothesis");
      break;
    default:
      break;
  }
}

std::vector<LanguageTag> select_languages(std::span<const LanguageScore> candidates, std::size_t k) {
  if (k > candidates.size()) {
    throw ArgumentError(fmt::format("cannot select {} languages from {} candidates", k, candidates.size()));
  }
  std::vector<LanguageScore> sorted(candidates.begin(), candidates.end());
  for (const auto& c : sorted) {
    if (!std::isfinite(c.score)) throw ArgumentError(fmt::format("score for '{}' is not finite", c.language.code));
  }
  std::sort(sorted.begin(), sorted.end(), [](const LanguageScore& a, const LanguageScore& b) {
    if (a.score != b.score) return a.score > b.score;
    return registry_index(a.language) < registry_index(b.language);
  });
  std::vector<LanguageTag> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(sorted[i].language);
  return out;
}

namespace {

double score_of(const LanguageTag& lang, std::span<const LanguageScore> scores) {
  for (const auto& s : scores) {
    if (s.language == lang) return s.score;
  }
  throw ArgumentError(fmt::format("no score for language '{}'", lang.code));
}

}  // namespace

std::vector<LanguageTag> order_languages(const LanguageTag& original, std::span<const LanguageTag> parallels,
                                         std::span<const LanguageScore> scores, OrderPolicy policy) {
  (void)policy;  // BestLast is the only policy.
  std::vector<std::pair<LanguageTag, double>> scored;
  for (const auto& p : parallels) scored.emplace_back(p, score_of(p, scores));
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
  std::vector<LanguageTag> out{original};
  for (auto& [tag, _] : scored) out.push_back(std::move(tag));
  return out;
}

Strategy Strategy::parse(std::string_view text) {
  Strategy s;
  auto parse_count = [&](std::string_view digits) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) {
      throw ArgumentError(fmt::format("bad count '{}' in strategy '{}'", digits, text));
    }
    return v;
  };
  std::string_view rest = text;
  if (rest.rfind("fewshot:", 0) == 0) {
    const auto slash = rest.find('/');
    s.shots = parse_count(rest.substr(8, slash == std::string_view::npos ? std::string_view::npos : slash - 8));
    rest = slash == std::string_view::npos ? std::string_view("direct") : rest.substr(slash + 1);
  }
  if (rest == "direct") {
    s.kind = Kind::Direct;
  } else if (rest.rfind("pivot:", 0) == 0) {
    s.kind = Kind::Pivot;
    s.pivot = language(rest.substr(6));
  } else if (rest.rfind("pim:", 0) == 0) {
    s.kind = Kind::Pim;
    s.k = parse_count(rest.substr(4));
  } else if (rest == "pim_ms") {
    s.kind = Kind::PimMs;
  } else if (rest == "pim_pa") {
    s.kind = Kind::PimPa;
  } else if (rest == "pim_ml") {
    s.kind = Kind::PimMl;
  } else if (rest.rfind("pim_ml:", 0) == 0) {
    s.kind = Kind::PimMl;
    s.k = parse_count(rest.substr(7));
  } else {
    throw ArgumentError(fmt::format("unknown strategy '{}'", text));
  }
  return s;
}

std::string Strategy::label() const {
  std::string base;
  switch (kind) {
    case Kind::Direct:
      base = "direct";
      break;
    case Kind::Pivot:
      base = "pivot:" + pivot->code;
      break;
    case Kind::Pim:
      base = fmt::format("pim:{}", k);
      break;
    case Kind::PimMs:
      base = "pim_ms";
      break;
    case Kind::PimPa:
      base = "pim_pa";
      break;
    case Kind::PimMl:
      base = k ? fmt::format("pim_ml:{}", k) : "pim_ml";
      break;
  }
  return shots ? fmt::format("fewshot:{}/{}", shots, base) : base;
}

namespace {

TemplateRole role_for(Strategy::Kind k) {
  switch (k) {
    case Strategy::Kind::Direct:
    case Strategy::Kind::Pivot:
      return TemplateRole::Direct;
    case Strategy::Kind::Pim:
    case Strategy::Kind::PimMl:
      return TemplateRole::Pim;
    case Strategy::Kind::PimMs:
    case Strategy::Kind::PimPa:
      return TemplateRole::Monolingual;
  }
  return TemplateRole::Direct;
}

const Template& choose_template(const PimSpec& spec, TemplateRole role, const TemplateRegistry& registry) {
  if (spec.template_id) {
    const Template& t = registry.get(*spec.template_id);
    if (t.task != spec.task.kind || t.role != role) {
      throw ConfigError(fmt::format("template '{}' is a {} {} template; strategy needs {} {}", t.id,
                                    to_string(t.task), to_string(t.role), to_string(spec.task.kind),
                                    to_string(role)));
    }
    return t;
  }
  if (!registry.contains(template_id(spec.task.kind, role))) {
    throw ConfigError(fmt::format("no {} template for task {}", to_string(role), to_string(spec.task.kind)));
  }
  return registry.default_for(spec.task.kind, role);
}

// Name of the i-th (1-based) parallel slot given the template's numbering style.
std::string numbered(std::string_view stem, std::size_t i, std::optional<std::size_t> arity) {
  if (!arity) return fmt::format("{}({})", stem, i);
  if (*arity == 1) return std::string(stem);
  return fmt::format("{}{}", stem, i);
}

Bindings direct_bindings(const PimSpec& spec, const ParallelText& input) {
  const std::string& lang = input.language.name;
  switch (spec.task.kind) {
    case TaskKind::Translate:
      return {{"target-language", spec.task.target->name}, {"source-language", lang}, {"source-sentence", input.text}};
    case TaskKind::Simplify:
      return {{"sentence", input.text}, {"source-language", lang}};
    case TaskKind::Rte:
      return {{"src-premise", input.text}, {"src-hypothesis", input.hypothesis}, {"src-language", lang}};
    case TaskKind::Summarize:
      return {{"source-language", lang}, {"source-text", input.text}};
    case TaskKind::BoolQ:
      return {{"source-passage", input.text}, {"source-question", spec.task.question}, {"source-language", lang}};
    case TaskKind::Nli:
      return {{"premise-sentence", input.text}, {"hypothesis-sentence", spec.task.hypothesis},
              {"source-language", lang}};
  }
  return {};
}

Bindings pim_bindings(const PimSpec& spec, const std::vector<const ParallelText*>& parallels,
                      std::optional<std::size_t> arity) {
  const ParallelText& o = spec.original;
  Bindings b;
  switch (spec.task.kind) {
    case TaskKind::Translate:
      b = {{"target-language", spec.task.target->name}, {"source-language", o.language.name},
           {"source-sentence", o.text}};
      break;
    case TaskKind::Simplify:
      b = {{"source-language", o.language.name}, {"source-sentence", o.text}};
      break;
    case TaskKind::Rte:
      b = {{"src-language", o.language.name}, {"src-premise", o.text}, {"src-hypothesis", o.hypothesis}};
      break;
    case TaskKind::Summarize:
      b = {{"source-language", o.language.name}, {"source-text", o.text}};
      break;
    case TaskKind::BoolQ:
      b = {{"source-language", o.language.name}, {"source-sentence", o.text},
           {"source-question", spec.task.question}};
      break;
    case TaskKind::Nli:
      b = {{"source-language", o.language.name}, {"source-premise", o.text},
           {"source-hypothesis", spec.task.hypothesis}};
      break;
  }
  for (std::size_t i = 1; i <= parallels.size(); ++i) {
    const ParallelText& p = *parallels[i - 1];
    b[numbered("parallel-language", i, arity)] = p.language.name;
    switch (spec.task.kind) {
      case TaskKind::Translate:
      case TaskKind::Simplify:
      case TaskKind::BoolQ:
        b[numbered("parallel-sentence", i, arity)] = p.text;
        break;
      case TaskKind::Summarize:
        b[numbered("parallel-text", i, arity)] = p.text;
        break;
      case TaskKind::Nli:
        b[numbered("parallel-premise", i, arity)] = p.text;
        break;
      case TaskKind::Rte:
        if (p.hypothesis.empty()) {
          throw ArgumentError(fmt::format("rte parallel '{}' lacks a hypothesis", p.language.code));
        }
        b[fmt::format("para{}-premise", i)] = p.text;
        b[fmt::format("para{}-hypothesis", i)] = p.hypothesis;
        break;
    }
  }
  return b;
}

// Keeps only bindings the template uses (custom templates may omit some),
// expanding "(i)" slots against the bound indices.
Bindings restrict_to(const Template& tpl, const Bindings& b) {
  const auto slots = tpl.slots();
  Bindings out;
  for (const auto& [key, value] : b) {
    bool used = slots.contains(key);
    if (!used) {
      const auto open = key.rfind('(');
      if (open != std::string::npos && key.back() == ')') used = slots.contains(key.substr(0, open) + "(i)");
    }
    if (used) out.emplace(key, value);
  }
  return out;
}

std::vector<const ParallelText*> choose_parallels(const PimSpec& spec, std::vector<const ParallelText*> pool,
                                                  std::size_t k,
                                                  const std::optional<std::vector<LanguageScore>>& scores) {
  if (pool.size() < k) {
    throw ArgumentError(fmt::format("strategy needs {} parallels, input has {}", k, pool.size()));
  }
  if (!scores) {
    pool.resize(k);
    return pool;
  }
  std::vector<LanguageScore> candidates;
  for (const ParallelText* p : pool) candidates.push_back({p->language, score_of(p->language, *scores)});
  const auto chosen = select_languages(candidates, k);
  // Keep the caller's parallel order among the chosen before ordering, so
  // equal scores resolve by input order.
  std::vector<LanguageTag> in_input_order;
  for (const ParallelText* p : pool) {
    if (std::find(chosen.begin(), chosen.end(), p->language) != chosen.end()) in_input_order.push_back(p->language);
  }
  const auto ordered = order_languages(spec.original.language, in_input_order, *scores);
  std::vector<const ParallelText*> out;
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    for (const ParallelText* p : pool) {
      if (p->language == ordered[i]) out.push_back(p);
    }
  }
  return out;
}

}  // namespace

std::string build_prompt(const PimSpec& spec, const std::optional<std::vector<LanguageScore>>& scores,
                         const Strategy& strategy, const TemplateRegistry& registry) {
  spec.validate();
  const Template& tpl = choose_template(spec, role_for(strategy.kind), registry);
  switch (strategy.kind) {
    case Strategy::Kind::Direct:
      return render(tpl, restrict_to(tpl, direct_bindings(spec, spec.original)));
    case Strategy::Kind::Pivot: {
      for (const auto& p : spec.parallels) {
        if (p.language == *strategy.pivot) return render(tpl, restrict_to(tpl, direct_bindings(spec, p)));
      }
      throw ArgumentError(fmt::format("no parallel text in pivot language '{}'", strategy.pivot->code));
    }
    case Strategy::Kind::Pim:
    case Strategy::Kind::PimMl: {
      std::vector<const ParallelText*> pool;
      for (const auto& p : spec.parallels) {
        if (strategy.kind == Strategy::Kind::Pim || p.provenance == Provenance::Machine) pool.push_back(&p);
      }
      std::size_t k = strategy.k;
      if (strategy.kind == Strategy::Kind::PimMl && k == 0) {
        if (pool.empty()) throw ArgumentError("pim_ml needs machine-translated parallels");
        k = pool.size();
      }
      const auto arity = tpl.parallel_arity();
      if (arity && *arity != k) {
        throw ConfigError(fmt::format("template '{}' takes exactly {} parallels, strategy asks for {}", tpl.id,
                                      *arity, k));
      }
      const auto chosen = choose_parallels(spec, std::move(pool), k, scores);
      return render(tpl, restrict_to(tpl, pim_bindings(spec, chosen, arity)));
    }
    case Strategy::Kind::PimMs:
    case Strategy::Kind::PimPa: {
      const Provenance want = strategy.kind == Strategy::Kind::PimMs ? Provenance::Machine : Provenance::Paraphrase;
      std::vector<const ParallelText*> texts;
      for (const auto& v : spec.variants) {
        if (v.provenance == want) texts.push_back(&v);
      }
      constexpr std::size_t kNumbered = 5;
      if (texts.size() < kNumbered) {
        throw ArgumentError(fmt::format("{} needs {} {} variants, input has {}", strategy.label(), kNumbered,
                                        to_string(want), texts.size()));
      }
      Bindings b{{"source-language", spec.original.language.name}};
      if (spec.task.target) b["target-language"] = spec.task.target->name;
      for (std::size_t i = 0; i < kNumbered; ++i) b[fmt::format("paraphrase-sentence{}", i + 1)] = texts[i]->text;
      return render(tpl, restrict_to(tpl, b));
    }
  }
  throw ConfigError("unhandled strategy");
}

std::string build_few_shot_prompt(const PimSpec& spec, const std::optional<std::vector<LanguageScore>>& scores,
                                  const Strategy& strategy, std::span<const Demonstration> demos,
                                  const TemplateRegistry& registry) {
  if (demos.size() < strategy.shots) {
    throw ArgumentError(fmt::format("{} needs {} demonstrations, got {}", strategy.label(), strategy.shots,
                                    demos.size()));
  }
  std::string out;
  for (std::size_t i = 0; i < strategy.shots; ++i) {
    out += build_prompt(demos[i].spec, scores, strategy, registry);
    out += demos[i].answer;
    out += "\n\n";
  }
  out += build_prompt(spec, scores, strategy, registry);
  return out;
}

namespace {

Provenance parse_provenance(const std::string& s, std::string* system) {
  if (s == "human") return Provenance::Human;
  if (s == "paraphrase") return Provenance::Paraphrase;
  if (s == "machine" || s.rfind("machine:", 0) == 0) {
    if (system && s.size() > 8) *system = s.substr(8);
    return Provenance::Machine;
  }
  throw SchemaError(0, "provenance", fmt::format("unknown provenance '{}'", s));
}

ParallelText text_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_object()) throw SchemaError(0, field, "expected an object");
  ParallelText t;
  try {
    if (!j.contains("lang")) throw SchemaError(0, field + ".lang", "missing");
    if (!j.contains("text")) throw SchemaError(0, field + ".text", "missing");
    t.language = language(j.at("lang").get<std::string>());
    t.text = j.at("text").get<std::string>();
    if (j.contains("hypothesis")) t.hypothesis = j.at("hypothesis").get<std::string>();
    if (j.contains("provenance")) t.provenance = parse_provenance(j.at("provenance").get<std::string>(), &t.system);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, field, e.what());
  } catch (const ArgumentError& e) {
    throw SchemaError(0, field + ".lang", e.what());
  }
  return t;
}

std::string provenance_text(const ParallelText& t) {
  if (t.provenance == Provenance::Machine && !t.system.empty()) return "machine:" + t.system;
  return std::string(to_string(t.provenance));
}

nlohmann::json text_to_json(const ParallelText& t) {
  nlohmann::json j{{"lang", t.language.code}, {"text", t.text}, {"provenance", provenance_text(t)}};
  if (!t.hypothesis.empty()) j["hypothesis"] = t.hypothesis;
  return j;
}

}  // namespace

nlohmann::json to_json(const PimSpec& spec) {
  nlohmann::json j;
  j["original"] = text_to_json(spec.original);
  j["parallels"] = nlohmann::json::array();
  for (const auto& p : spec.parallels) j["parallels"].push_back(text_to_json(p));
  if (!spec.variants.empty()) {
    j["variants"] = nlohmann::json::array();
    for (const auto& v : spec.variants) j["variants"].push_back(text_to_json(v));
  }
  nlohmann::json task{{"kind", std::string(to_string(spec.task.kind))}};
  if (spec.task.target) task["target"] = spec.task.target->code;
  if (!spec.task.question.empty()) task["question"] = spec.task.question;
  if (!spec.task.hypothesis.empty()) task["hypothesis"] = spec.task.hypothesis;
  j["task"] = std::move(task);
  if (spec.template_id) j["template"] = *spec.template_id;
  return j;
}

PimSpec pim_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError(0, "spec", "expected an object");
  if (!j.contains("original")) throw SchemaError(0, "original", "missing");
  if (!j.contains("task")) throw SchemaError(0, "task", "missing");
  PimSpec spec;
  spec.original = text_from_json(j.at("original"), "original");
  if (j.contains("parallels")) {
    for (std::size_t i = 0; i < j.at("parallels").size(); ++i) {
      spec.parallels.push_back(text_from_json(j.at("parallels").at(i), fmt::format("parallels[{}]", i)));
    }
  }
  if (j.contains("variants")) {
    for (std::size_t i = 0; i < j.at("variants").size(); ++i) {
      ParallelText v = text_from_json(j.at("variants").at(i), fmt::format("variants[{}]", i));
      spec.variants.push_back(std::move(v));
    }
  }
  const auto& task = j.at("task");
  try {
    spec.task.kind = parse_task_kind(task.at("kind").get<std::string>());
    if (task.contains("target")) spec.task.target = language(task.at("target").get<std::string>());
    if (task.contains("question")) spec.task.question = task.at("question").get<std::string>();
    if (task.contains("hypothesis")) spec.task.hypothesis = task.at("hypothesis").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(0, "task", e.what());
  } catch (const ArgumentError& e) {
    throw SchemaError(0, "task", e.what());
  }
  if (j.contains("template")) spec.template_id = j.at("template").get<std::string>();
  return spec;
}

std::vector<LanguageScore> scores_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaError(0, "scores", "expected an object of language -> score");
  std::vector<LanguageScore> out;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw SchemaError(0, key, "score must be a number");
    try {
      out.push_back({language(key), value.get<double>()});
    } catch (const ArgumentError& e) {
      throw SchemaError(0, key, e.what());
    }
  }
  return out;
}

}  // namespace pimns
