#include "pimns/report.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pimns/errors.hpp"

namespace pimns {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string format_number(double v) { return fmt::format("{}", v); }

std::string_view to_string(CompareLabel l) {
  switch (l) {
    case CompareLabel::Baseline:
      return "Baseline";
    case CompareLabel::Inhibition:
      return "Inhibition";
    case CompareLabel::Activation:
      return "Activation";
    case CompareLabel::Neutral:
      return "Neutral";
  }
  return "?";
}

void ExperimentReport::validate() const {
  if (strategy.empty()) throw SchemaError(0, "strategy", "must not be empty");
  std::set<std::string> seen;
  for (const auto& m : metrics) {
    if (!seen.insert(m.name).second) throw SchemaError(0, "metrics." + m.name, "repeated");
    if (!std::isfinite(m.value)) throw SchemaError(0, "metrics." + m.name, "not finite");
  }
  if (activation && !std::isfinite(activation->proportion)) {
    throw SchemaError(0, "activation.proportion", "not finite");
  }
}

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError(fmt::format("cannot write '{}'", path.string()));
  }
  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_field(fields[i]);
    }
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw IoError(fmt::format("write failed for '{}'", path_.string()));
  }

 private:
  fs::path path_;
  std::ofstream out_;
};

ojson summary_json(const ActivationSummary& s) {
  ojson j{{"n_layers", s.n_layers},
          {"d_ffn", s.d_ffn},
          {"generated_tokens", s.generated_tokens},
          {"proportion", s.proportion},
          {"layer_proportions", s.layer_proportions}};
  if (!s.counts.empty()) j["counts"] = s.counts;
  return j;
}

template <class T>
T field(const ojson& j, const char* key, const std::string& prefix) {
  if (!j.contains(key)) throw SchemaError(0, prefix + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const ojson::exception& e) {
    throw SchemaError(0, prefix + key, e.what());
  }
}

ActivationSummary summary_from_json(const ojson& j) {
  if (!j.is_object()) throw SchemaError(0, "activation", "expected an object");
  ActivationSummary s;
  s.proportion = field<double>(j, "proportion", "activation.");
  if (!j.contains("counts")) {
    if (j.contains("layer_proportions")) {
      s.layer_proportions = field<std::vector<double>>(j, "layer_proportions", "activation.");
    }
    s.n_layers = s.layer_proportions.size();
    return s;
  }
  const auto n_layers = field<std::size_t>(j, "n_layers", "activation.");
  const auto d_ffn = field<std::size_t>(j, "d_ffn", "activation.");
  const auto tokens = field<std::int64_t>(j, "generated_tokens", "activation.");
  auto counts = field<std::vector<std::int64_t>>(j, "counts", "activation.");
  if (counts.size() != n_layers * d_ffn) throw SchemaError(0, "activation.counts", "length != n_layers * d_ffn");
  try {
    return summarize(ActivationAccumulator::from_counts(n_layers, d_ffn, std::move(counts),
                                                        tokens * static_cast<std::int64_t>(n_layers), tokens));
  } catch (const Error& e) {
    throw SchemaError(0, "activation", e.what());
  }
}

}  // namespace

std::vector<fs::path> write_report(const ExperimentReport& report, const fs::path& dir) {
  report.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  std::vector<fs::path> written;

  ojson j;
  j["strategy"] = report.strategy;
  ojson metrics = ojson::object();
  for (const auto& m : report.metrics) metrics[m.name] = m.value;
  j["metrics"] = std::move(metrics);
  if (report.activation) j["activation"] = summary_json(*report.activation);
  const auto& md = report.metadata;
  j["metadata"] = ojson{{"config_hash", md.config_hash},       {"seed", md.seed},
                        {"started_at", md.started_at},         {"finished_at", md.finished_at},
                        {"dataset_path", md.dataset_path},     {"example_count", md.example_count},
                        {"backend", md.backend}};
  {
    const fs::path p = dir / "report.json";
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", p.string()));
    out << j.dump(2) << '\n';
    out.close();
    if (!out) throw IoError(fmt::format("write failed for '{}'", p.string()));
    written.push_back(p);
  }
  {
    CsvWriter w(dir / "metrics.csv");
    w.row({"strategy", "metric", "value"});
    for (const auto& m : report.metrics) w.row({report.strategy, m.name, format_number(m.value)});
    w.close();
    written.push_back(dir / "metrics.csv");
  }
  if (!report.activation || report.activation->counts.empty()) return written;

  const ActivationSummary& s = *report.activation;
  {
    CsvWriter w(dir / "proportion.csv");
    std::vector<std::string> header{"strategy", "overall"};
    std::vector<std::string> row{report.strategy, format_number(s.proportion)};
    for (std::size_t l = 0; l < s.layer_proportions.size(); ++l) {
      header.push_back(fmt::format("layer{}", l));
      row.push_back(format_number(s.layer_proportions[l]));
    }
    w.row(header);
    w.row(row);
    w.close();
    written.push_back(dir / "proportion.csv");
  }
  {
    CsvWriter w(dir / "distribution.csv");
    w.row({"rank", "layer", "neuron", "count"});
    const auto ranked = top_fraction(s, 1.0);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      w.row({fmt::format("{}", r + 1), fmt::format("{}", ranked[r].id.layer), fmt::format("{}", ranked[r].id.neuron),
             fmt::format("{}", ranked[r].count)});
    }
    w.close();
    written.push_back(dir / "distribution.csv");
  }
  {
    CsvWriter w(dir / "heatmap.csv");
    w.row({"layer", "neuron", "count"});
    for (std::size_t l = 0; l < s.n_layers; ++l)
      for (std::size_t n = 0; n < s.d_ffn; ++n)
        w.row({fmt::format("{}", l), fmt::format("{}", n), fmt::format("{}", s.counts[l * s.d_ffn + n])});
    w.close();
    written.push_back(dir / "heatmap.csv");
  }
  return written;
}

ExperimentReport read_report(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open report '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  ojson j;
  try {
    j = ojson::parse(buf.str());
  } catch (const ojson::parse_error& e) {
    throw ParseError(0, fmt::format("{}: {}", path.string(), e.what()));
  }
  if (!j.is_object()) throw SchemaError(0, "<report>", "expected an object");
  ExperimentReport r;
  r.strategy = field<std::string>(j, "strategy", "");
  if (!j.contains("metrics") || !j["metrics"].is_object()) throw SchemaError(0, "metrics", "expected an object");
  for (const auto& [name, value] : j["metrics"].items()) {
    if (!value.is_number()) throw SchemaError(0, "metrics." + name, "expected a number");
    r.metrics.push_back({name, value.get<double>()});
  }
  if (j.contains("activation") && !j["activation"].is_null()) r.activation = summary_from_json(j["activation"]);
  if (j.contains("metadata") && j["metadata"].is_object()) {
    const ojson& m = j["metadata"];
    r.metadata.config_hash = m.value("config_hash", "");
    r.metadata.seed = m.value("seed", std::uint64_t{0});
    r.metadata.started_at = m.value("started_at", "");
    r.metadata.finished_at = m.value("finished_at", "");
    r.metadata.dataset_path = m.value("dataset_path", "");
    r.metadata.example_count = m.value("example_count", std::size_t{0});
    r.metadata.backend = m.value("backend", "");
  }
  r.validate();
  return r;
}

ComparisonTable compare(std::span<const ExperimentReport> reports) {
  if (reports.size() < 2) throw ArgumentError("compare needs a baseline and at least one candidate");
  ComparisonTable t;
  for (const auto& m : reports.front().metrics) t.metric_names.push_back(m.name);
  const std::set<std::string> names(t.metric_names.begin(), t.metric_names.end());
  double baseline = 0.0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    std::set<std::string> these;
    for (const auto& m : r.metrics) these.insert(m.name);
    if (these != names) {
      throw SchemaError(0, "metrics", fmt::format("report '{}' has metrics [{}], baseline has [{}]", r.strategy,
                                                  fmt::join(these, ","), fmt::join(t.metric_names, ",")));
    }
    if (!r.activation) throw SchemaError(0, "activation.proportion", fmt::format("missing in '{}'", r.strategy));
    ComparisonRow row;
    row.strategy = r.strategy;
    for (const auto& name : t.metric_names)
      for (const auto& m : r.metrics)
        if (m.name == name) row.metrics.push_back(m.value);
    row.proportion = r.activation->proportion;
    if (i == 0) {
      baseline = row.proportion;
      row.delta = 0.0;
      row.label = CompareLabel::Baseline;
    } else {
      row.delta = row.proportion - baseline;
      row.label = row.delta < 0 ? CompareLabel::Inhibition
                  : row.delta > 0 ? CompareLabel::Activation
                                  : CompareLabel::Neutral;
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_compare_csv(const ComparisonTable& table, const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", path.parent_path().string(), ec.message()));
  }
  CsvWriter w(path);
  std::vector<std::string> header{"strategy"};
  header.insert(header.end(), table.metric_names.begin(), table.metric_names.end());
  header.insert(header.end(), {"proportion", "delta", "label"});
  w.row(header);
  for (const auto& r : table.rows) {
    std::vector<std::string> row{r.strategy};
    for (double v : r.metrics) row.push_back(format_number(v));
    row.push_back(format_number(r.proportion));
    row.push_back(format_number(r.delta));
    row.emplace_back(to_string(r.label));
    w.row(row);
  }
  w.close();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cur;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cur));
      cur.clear();
    } else if (c == '\n') {
      row.push_back(std::move(cur));
      cur.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      cur += c;
    }
  }
  if (any) {
    row.push_back(std::move(cur));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pimns
