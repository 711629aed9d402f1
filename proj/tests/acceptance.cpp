// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pimns/activations.hpp"
#include "pimns/metrics.hpp"
#include "pimns/model.hpp"
#include "pimns/probe.hpp"
#include "pimns/prompt.hpp"
#include "pimns/report.hpp"
#include "pimns/templates.hpp"
#include "support.hpp"

namespace {

using namespace pimns;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// Returns an empty string on success, otherwise the reason for failure.
using Check = std::function<std::string()>;

Tensor2D random_tensor(std::mt19937_64& rng, std::size_t r, std::size_t c) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor2D t(r, c);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

std::string glu_fold_identity() {
  constexpr double kTol = 1e-5;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  std::uniform_int_distribution<std::size_t> dim(1, 64);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto kind = trial % 2 == 0 ? ActivationKind::SwiGLU : ActivationKind::GEGLU;
    const std::size_t n = dim(rng), d = dim(rng), f = dim(rng);
    MlpWeights w{random_tensor(rng, d, f), random_tensor(rng, d, f), random_tensor(rng, f, d)};
    const Tensor2D x = random_tensor(rng, n, d);
    const Tensor2D a = mlp_gated(x, w, kind);
    const Tensor2D b = mlp_gated_folded(x, w, kind);
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(double(a.data()[i]) - b.data()[i]));
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream why;
  if (worst > kTol) why << "max deviation " << worst << " > " << kTol;
  if (elapsed >= 5.0) why << (why.str().empty() ? "" : "; ") << "took " << elapsed << " s";
  return why.str();
}

std::string pruning_bound() {
  GenerationParams p;
  p.max_new_tokens = 16;
  const std::string prompt = "Translate into English.\nGerman: Guten Morgen.\nEnglish: ";
  for (auto kind : {ActivationKind::ReLU, ActivationKind::SwiGLU, ActivationKind::GEGLU}) {
    ModelConfig c = micro_config();
    c.activation = kind;
    const auto bundle = init_random(c, 11);
    const auto r = prune_and_compare(bundle, prompt, p);
    const std::string name(to_string(kind));
    if (r.steps.size() != 16) return name + ": " + std::to_string(r.steps.size()) + " steps";
    for (const auto& s : r.steps) {
      if (kind == ActivationKind::ReLU && (s.mlp_delta != 0.0 || s.logit_delta != 0.0)) {
        return "relu step " + std::to_string(s.step) + " delta nonzero";
      }
      if (!(s.mlp_delta <= s.mlp_bound)) return name + " step " + std::to_string(s.step) + " exceeds bound";
    }
  }
  return {};
}

std::string counting_oracle() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> len(0, 200);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::uniform_int_distribution<int> pick(0, 5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<float> v(len(rng));
    for (auto& x : v) {
      const int k = pick(rng);
      x = k == 0 ? 0.0f : k == 1 ? -0.0f : g(rng);
    }
    std::size_t naive = 0;
    for (float x : v) naive += x > 0.0f ? 1 : 0;
    if (count_activated(v) != naive) return "mismatch on trial " + std::to_string(trial);
  }
  return {};
}

pimns::Bindings identity_bindings(const Template& t) {
  pimns::Bindings b;
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

std::string template_goldens() {
  const auto& reg = TemplateRegistry::builtin();
  for (const auto& id : reg.ids()) {
    const auto path = test::golden(id + ".txt");
    if (!std::filesystem::exists(path)) return "no golden for " + id;
    const Template& t = reg.get(id);
    if (render(t, identity_bindings(t)) != test::slurp(path)) return id + " differs from its golden";
  }
  const auto de_en = render("mt.direct", {{"target-language", "English"},
                                          {"source-language", "German"},
                                          {"source-sentence", "Guten Morgen."}});
  if (de_en != "Translate into English.\nGerman: Guten Morgen.\nEnglish: ") return "De->En direct string differs";
  return {};
}

std::string ordering_golden() {
  const std::vector<LanguageScore> scores{
      {language("de"), 89.5}, {language("es"), 87.4}, {language("ru"), 86.9}, {language("zh"), 86.9}};
  const std::vector<LanguageTag> parallels{language("zh"), language("ru"), language("es")};
  const auto got = order_languages(language("de"), parallels, scores);
  const std::vector<LanguageTag> want{language("de"), language("zh"), language("ru"), language("es")};
  if (got != want) return "unexpected order";
  return {};
}

std::string sharding_invariance() {
  test::TempDir dir;
  const auto ckpt = dir / "m.ckpt";
  if (test::run_cli("model-init --seed 3 --out " + test::quote(ckpt)).code != 0) return "model-init failed";
  std::string first;
  for (const char* w : {"1", "2", "4"}) {
    const auto out = dir / (std::string("w") + w);
    const auto r = test::run_cli("run --dataset " + test::quote(test::fixture("micro12.jsonl")) +
                                 " --backend internal:" + test::quote(ckpt) +
                                 " --strategy pim:2 --probe --max-new-tokens 8 --workers " + w + " --out-dir " +
                                 test::quote(out));
    if (r.code != 0) return std::string("run with ") + w + " workers exited " + std::to_string(r.code);
    const auto joined = test::slurp(out / "proportion.csv") + '\x1f' + test::slurp(out / "distribution.csv") +
                        '\x1f' + test::slurp(out / "heatmap.csv");
    if (first.empty()) first = joined;
    else if (joined != first) return std::string("outputs differ with ") + w + " workers";
  }
  return {};
}

std::string end_to_end_micro() {
  const auto t0 = Clock::now();
  const ModelConfig c = micro_config();
  if (c.n_layers != 2 || c.d_model != 32 || c.d_ffn != 64 || c.activation != ActivationKind::SwiGLU) {
    return "micro config has unexpected dimensions";
  }
  PimSpec spec;
  spec.original = {language("de"), "Die Katze schläft auf dem Sofa."};
  spec.parallels = {{language("es"), "El gato duerme en el sofá."}, {language("fr"), "Le chat dort sur le canapé."}};
  spec.task.kind = TaskKind::Translate;
  spec.task.target = language("en");

  auto once = [&](std::string& blob) -> std::string {
    const auto bundle = init_random(c, 1234);
    GenerationParams p;
    p.max_new_tokens = 16;
    test::TempDir dir;
    for (const char* strategy : {"direct", "pim:2"}) {
      ActivationAccumulator acc(c.n_layers, c.d_ffn);
      AccumulatorSink sink(acc);
      generate(bundle, build_prompt(spec, std::nullopt, Strategy::parse(strategy)), p, &sink);
      if (acc.record_count() != 32) return std::string(strategy) + ": record count " + std::to_string(acc.record_count());
      ExperimentReport rep;
      rep.strategy = strategy;
      rep.activation = summarize(acc);
      const double prop = rep.activation->proportion;
      if (!(prop > 0.0 && prop < 100.0)) return std::string(strategy) + ": proportion out of range";
      const auto sub = dir / (std::string(strategy) == "direct" ? "direct" : "pim");
      write_report(rep, sub);
      for (const char* f : {"report.json", "proportion.csv", "distribution.csv", "heatmap.csv"}) {
        blob += test::slurp(sub / f) + '\x1f';
      }
    }
    return {};
  };
  std::string a, b;
  if (auto e = once(a); !e.empty()) return e;
  if (auto e = once(b); !e.empty()) return e;
  if (a != b) return "two invocations differ";
  const double elapsed = seconds_since(t0);
  if (elapsed >= 10.0) return "took " + std::to_string(elapsed) + " s";
  return {};
}

std::string metrics_sanity() {
  const std::vector<std::string> h{"the cat sat on the mat", "a quick brown fox jumps"};
  const std::vector<std::vector<std::string>> self{{h[0]}, {h[1]}};
  if (bleu(h, self) != 100.0) return "bleu(h, h) != 100";
  const std::vector<std::string> hz{"alpha beta gamma"};
  const std::vector<std::vector<std::string>> rz{{"one two three"}};
  if (bleu(hz, rz) != 0.0) return "zero overlap != 0";
  // p1..p3 are 1; p4 has no candidates and smooths to 1/(0+1); brevity penalty exp(1 - 4/3).
  const double want = 100.0 * std::exp(1.0 - 4.0 / 3.0);
  const std::vector<std::string> h3{"the cat sat"};
  const std::vector<std::vector<std::string>> r3{{"the cat sat down"}};
  if (std::fabs(bleu(h3, r3) - want) > 1e-9) return "3-token case differs";
  const std::vector<std::string> pred{"Yes."}, label{"yes"};
  if (accuracy(pred, label) != 100.0 || accuracy(label, pred) != 100.0) return "normalizer does not map Yes. to yes";
  return {};
}

std::string compare_labels() {
  std::vector<ExperimentReport> reports;
  for (const char* name : {"direct", "pim_pa", "pim_ms", "pim_ml", "pim_gt"}) {
    reports.push_back(read_report(test::fixture(std::string("reports/fig4c_") + name + ".json")));
  }
  const auto t = compare(reports);
  const CompareLabel want[] = {CompareLabel::Baseline, CompareLabel::Activation, CompareLabel::Activation,
                               CompareLabel::Inhibition, CompareLabel::Inhibition};
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (t.rows[i].label != want[i]) {
      return t.rows[i].strategy + " labeled " + std::string(to_string(t.rows[i].label));
    }
  }
  return {};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Check>> criteria{
      {"glu-fold-identity", glu_fold_identity},   {"pruning-exactness-and-bound", pruning_bound},
      {"counting-oracle", counting_oracle},       {"template-golden-suite", template_goldens},
      {"ordering-golden", ordering_golden},       {"sharding-invariance", sharding_invariance},
      {"end-to-end-micro-run", end_to_end_micro}, {"metrics-sanity", metrics_sanity},
      {"compare-labeling", compare_labels},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    std::string why;
    try {
      why = criteria[i].second();
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (why.empty()) {
      std::printf("[PASS] %zu %s\n", i + 1, criteria[i].first);
    } else {
      ++failed;
      std::printf("[FAIL] %zu %s: %s\n", i + 1, criteria[i].first, why.c_str());
    }
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
