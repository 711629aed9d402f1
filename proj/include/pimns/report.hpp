#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pimns/probe.hpp"

namespace pimns {

struct RunMetadata {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;  // ISO-8601 UTC
  std::string dataset_path;
  std::size_t example_count = 0;
  std::string backend;
};

struct Metric {
  std::string name;
  double value;
  friend bool operator==(const Metric&, const Metric&) = default;
};

struct ExperimentReport {
  std::string strategy;
  std::vector<Metric> metrics;
  /// Counts and ranking may be empty when only the proportion is known.
  std::optional<ActivationSummary> activation;
  RunMetadata metadata;

  /// Throws SchemaError on an empty strategy, repeated metric names or a
  /// non-finite metric value.
  void validate() const;
};

/// Writes report.json and metrics.csv, plus proportion.csv, distribution.csv
/// and heatmap.csv when activation counts are present. Only report.json
/// carries timestamps. Returns the written paths. Throws IoError.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Reads a report.json. The activation block may hold only "proportion".
/// Throws IoError, ParseError or SchemaError.
ExperimentReport read_report(const std::filesystem::path& path);

enum class CompareLabel { Baseline, Inhibition, Activation, Neutral };
std::string_view to_string(CompareLabel l);

struct ComparisonRow {
  std::string strategy;
  std::vector<double> metrics;  // in ComparisonTable::metric_names order
  double proportion;
  double delta;  // proportion - baseline proportion
  CompareLabel label;
};

struct ComparisonTable {
  std::vector<std::string> metric_names;
  std::vector<ComparisonRow> rows;  // baseline first
};

/// The first report is the baseline. Labels follow only the sign of delta.
/// Throws ArgumentError with fewer than two reports and SchemaError when
/// metric names differ or a report lacks an activation proportion.
ComparisonTable compare(std::span<const ExperimentReport> reports);

/// Header: strategy,<metric names>,proportion,delta,label. Throws IoError.
void write_compare_csv(const ComparisonTable& table, const std::filesystem::path& path);

/// Shortest text that parses back to exactly `v`.
std::string format_number(double v);

/// Comma-separated rows with double-quote escaping; tolerates a missing final newline.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace pimns
