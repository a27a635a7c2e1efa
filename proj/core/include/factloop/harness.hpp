#pragma once

// Dataset ingestion, dataset-construction helpers and the benchmark runner.
//
// Dataset wire format: UTF-8 JSON Lines, one object per line:
//   {"id": "...", "category": "...", "question": "...", "response": "...",
//    "origin": "human" | "synthetic", "reference_correction": "..."}
// reference_correction is optional; blank lines are skipped.

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "factloop/llm_io.hpp"
#include "factloop/metrics.hpp"
#include "factloop/pipeline.hpp"

namespace factloop {

enum class Origin { Human, Synthetic };

std::string_view origin_name(Origin origin) noexcept;
Origin parse_origin(std::string_view name);

struct DatasetRecord {
  std::string id;
  std::string category;
  std::string question;
  std::string response;
  Origin origin = Origin::Human;
  std::optional<std::string> reference_correction;

  friend bool operator==(const DatasetRecord&, const DatasetRecord&) = default;
};

nlohmann::json to_json(const DatasetRecord& record);
/// DatasetError on a missing or empty required field.
DatasetRecord dataset_record_from_json(const nlohmann::json& j);

struct DatasetDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string message;
};

struct LoadedDataset {
  std::vector<DatasetRecord> records;
  std::vector<DatasetDiagnostic> diagnostics;
};

/// Keeps every valid line and reports the rest, repeated ids included.
/// DatasetError when the file cannot be read or yields no valid record.
LoadedDataset load_dataset(const std::filesystem::path& path);
LoadedDataset parse_dataset(std::string_view text);

void write_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records);

struct ScoredAnswer {
  std::string text;
  long long score = 0;
};

/// Highest-scored answer; the earliest one wins a tie.
const std::string& select_canonical(std::span<const ScoredAnswer> answers);

/// A deliberately incorrect answer to `question` from the synthesis template.
std::string synth_incorrect(TextGenerator& generator, const PromptSet& prompts,
                            const CorrectionConfig& config, std::string_view question);

enum class RunKind { Assess, Correct };

std::string_view run_kind_name(RunKind kind) noexcept;
RunKind parse_run_kind(std::string_view name);

struct RunManifest {
  RunKind kind = RunKind::Correct;
  std::filesystem::path dataset;
  CorrectionConfig config;
  StoreMode mode = StoreMode::Replay;
  std::filesystem::path store;
  std::filesystem::path output_dir;
  std::size_t parallelism = 1;
  std::string timestamp;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest run_manifest_from_json(const nlohmann::json& j);

/// Per-record outcome as written to reports.jsonl.
struct RecordOutcome {
  std::string id;
  Origin origin = Origin::Human;
  std::string category;
  FactualityReport response;
  std::optional<FactualityReport> correction;
  std::size_t refinements = 0;
  std::string stop;
};

nlohmann::json to_json(const RecordOutcome& outcome);
RecordOutcome record_outcome_from_json(const nlohmann::json& j);

struct RecordError {
  std::string id;
  std::string stage;
  std::string message;
};

struct SummaryRow {
  std::string group;  // "all", "human" or "synthetic"
  MetricSummary response;
  std::optional<MetricSummary> correction;
  std::optional<GainSummary> gains;
};

struct RunSummary {
  std::size_t k = 0;
  std::size_t records = 0;
  std::size_t errors = 0;
  std::vector<SummaryRow> rows;
};

/// Summary at K = median response atom count over all outcomes; groups
/// with no outcomes are omitted.
RunSummary summarize(std::span<const RecordOutcome> outcomes, std::size_t errors);

nlohmann::json to_json(const RunSummary& summary);
/// Tab-separated, one line per (group, metric).
std::string summary_tsv(const RunSummary& summary);
/// Tab-separated precision before/after table, one line per group.
std::string precision_table_tsv(const RunSummary& summary);

struct RunResult {
  std::vector<RecordOutcome> outcomes;
  std::vector<RecordError> errors;
  RunSummary summary;
};

/// Runs every dataset record through the pipeline with bounded parallelism
/// and writes traces.jsonl, reports.jsonl, errors.jsonl, summary.json,
/// summary.tsv, precision.tsv and manifest.json into manifest.output_dir.
/// Record failures are isolated. Only manifest.json carries a timestamp.
RunResult run_benchmark(const RunManifest& manifest, std::shared_ptr<TextGenerator> generator,
                        std::shared_ptr<SearchProvider> search);

/// Rebuilds the summary files of an existing run directory from reports.jsonl.
RunSummary report_run(const std::filesystem::path& run_dir);

}  // namespace factloop
