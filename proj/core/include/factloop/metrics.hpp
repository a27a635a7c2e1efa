#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factloop/model_builder.hpp"

namespace factloop {

class PromptSet;
class TextGenerator;

struct FactualityReport {
  std::size_t n_atoms = 0;
  std::size_t supported = 0;      // atoms labeled True
  double precision = 0.0;
  double recall_at_k = 0.0;
  double f1_at_k = 0.0;
  std::size_t verifiability = 0;  // atoms with at least one evidence edge
  double comprehensiveness = 0.0;
  std::size_t k_used = 0;

  friend bool operator==(const FactualityReport&, const FactualityReport&) = default;
};

/// Relative gains, correction against response, one per metric.
struct GainReport {
  double precision = 0.0;
  double recall_at_k = 0.0;
  double f1_at_k = 0.0;
  double verifiability = 0.0;
  double comprehensiveness = 0.0;
};

/// Number of True labels.
std::size_t supported_count(std::span<const Label> labels) noexcept;

double precision(std::span<const Label> labels);
double recall_at_k(std::size_t supported, std::size_t k);
double f1_at_k(double precision, double recall, std::size_t supported);
std::size_t verifiability(const GraphicalModel& model, std::size_t num_atoms);
double comprehensiveness(std::size_t n_in, std::size_t n_out);
double relative_gain(double s_response, double s_correction);

GainReport relative_gains(const FactualityReport& response, const FactualityReport& correction);

/// Report for one labeled response. Atoms labeled True or False count as
/// covered, Unverified atoms as uncovered. With k == 0, K defaults to the
/// response's own atom count until finalize_reports fixes a dataset-wide K.
FactualityReport make_report(std::span<const Label> labels, std::size_t verifiability,
                             std::size_t k = 0);

/// Recomputes R@K and F1@K for K.
FactualityReport with_k(FactualityReport report, std::size_t k);

/// Median of the atom counts; an even count takes the mean of the middle two
/// rounded half up. Never below 1.
std::size_t median_k(std::span<const std::size_t> atom_counts);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct MetricSummary {
  std::size_t count = 0;
  std::size_t k = 0;
  MeanStd n_atoms;
  MeanStd precision;
  MeanStd recall_at_k;
  MeanStd f1_at_k;
  MeanStd verifiability;
  MeanStd comprehensiveness;
};

/// Per-report summary at K = median atom count of `reports` (or `k` when
/// nonzero). R@K and F1@K are recomputed before averaging.
MetricSummary aggregate(std::span<const FactualityReport> reports, std::size_t k = 0);

struct GainSummary {
  std::size_t count = 0;
  MeanStd precision;
  MeanStd recall_at_k;
  MeanStd f1_at_k;
  MeanStd verifiability;
  MeanStd comprehensiveness;
};

/// Mean and spread of per-pair gains. Both report lists must already share K.
GainSummary aggregate_gains(std::span<const FactualityReport> responses,
                            std::span<const FactualityReport> corrections);

enum class Verdict { Yes, No };

std::string_view verdict_name(Verdict v) noexcept;

/// Last "[Yes]" or "[No]" in the judge output; FormatError when neither occurs.
Verdict parse_verdict(std::string_view output);

Verdict judge_equivalence(TextGenerator& generator, const PromptSet& prompts,
                          const std::string& model_name, std::string_view reference,
                          std::string_view candidate);

}  // namespace factloop
