#pragma once

// Assessment stages (atomize, revise, retrieve, relate, infer) and the
// iterative correction loop, plus the two single-shot baseline correctors.

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "factloop/errors.hpp"
#include "factloop/inference.hpp"
#include "factloop/llm_io.hpp"
#include "factloop/metrics.hpp"
#include "factloop/model_builder.hpp"
#include "factloop/prompts.hpp"

namespace factloop {

struct CorrectionConfig {
  double theta = 0.95;
  std::size_t max_iterations = 3;
  std::size_t k_contexts = kDefaultSearchResults;
  std::size_t ibound = 6;
  std::string prompts = "embedded";  // "embedded" or a template directory
  std::string model_name = "default";
  double temperature = 0.0;
  int max_tokens = 1024;
  bool context_relations = false;  // also relate context pairs
  std::size_t recall_k = 0;        // 0: each report uses its own atom count
  PriorConfig priors;

  /// ContractViolation for theta outside [0, 1] or zero counts.
  void validate() const;
};

nlohmann::json to_json(const CorrectionConfig& config);
CorrectionConfig correction_config_from_json(const nlohmann::json& j);

/// Loads the template set named by config.prompts.
PromptSet load_prompts(const CorrectionConfig& config);

struct EvidenceItem {
  std::string atom_id;
  std::string context_id;
  std::string passage;
  RelationKind kind = RelationKind::Entail;
  double p = 1.0;
};

struct Feedback {
  std::vector<AtomRecord> flagged_atoms;  // False and Unverified, in atom order
  std::vector<EvidenceItem> evidence;     // edges incident to False atoms

  bool empty() const noexcept { return flagged_atoms.empty(); }
};

struct Assessment {
  std::vector<AtomRecord> atoms;  // labeled
  ReasonerModel model;
  FactualityReport report;
  std::size_t max_cluster_size = 0;
  std::size_t split_buckets = 0;
};

struct IterationRecord {
  std::string response;
  FactualityReport report;
  Feedback feedback;  // the feedback the response was refined from; empty for the initial entry
  bool accepted = false;
};

enum class StopReason { Threshold, NoImprovement, MaxIterations };

std::string_view stop_reason_name(StopReason reason) noexcept;

/// iterations[0] is the initial response (accepted by definition); each later
/// entry is one refinement attempt.
struct CorrectionTrace {
  std::string question;
  std::vector<IterationRecord> iterations;
  std::string final_response;
  StopReason stop = StopReason::Threshold;

  const FactualityReport& initial_report() const { return iterations.front().report; }
  /// Report of the last accepted entry.
  const FactualityReport& final_report() const;
  std::size_t refinements() const noexcept {
    return iterations.empty() ? 0 : iterations.size() - 1;
  }
};

/// A stage failed mid-loop; carries everything recorded before the failure.
/// The failing StageError is nested inside.
class CorrectionAborted : public StageError {
 public:
  CorrectionAborted(const StageError& cause, CorrectionTrace partial)
      : StageError(cause), partial_(std::move(partial)) {}
  const CorrectionTrace& partial_trace() const noexcept { return partial_; }

 private:
  CorrectionTrace partial_;
};

nlohmann::json to_json(const FactualityReport& report);
FactualityReport factuality_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Feedback& feedback);
nlohmann::json to_json(const CorrectionTrace& trace);
/// One line of the per-instance trace log (no trailing newline).
std::string trace_line(const std::string& record_id, const CorrectionTrace& trace);

/// Parses "- claim" bullet lines (also "* " and "1. " forms).
std::vector<std::string> parse_atom_lines(std::string_view output);
/// Parses exactly `expected` numbered lines "i. text".
std::vector<std::string> parse_revised_lines(std::string_view output, std::size_t expected);
std::string parse_query(std::string_view output);
/// Parses the RELATION / PROBABILITY answer.
std::pair<RelationKind, double> parse_relation_answer(std::string_view output);

class Pipeline {
 public:
  Pipeline(std::shared_ptr<TextGenerator> generator, std::shared_ptr<SearchProvider> search,
           PromptSet prompts, CorrectionConfig config);

  const CorrectionConfig& config() const noexcept { return config_; }
  const PromptSet& prompts() const noexcept { return prompts_; }

  std::vector<AtomRecord> atomize(std::string_view response) const;
  std::vector<AtomRecord> revise(std::vector<AtomRecord> atoms, std::string_view response) const;
  std::vector<ContextRecord> retrieve_contexts(std::span<const AtomRecord> atoms) const;
  std::vector<RelationRecord> extract_relations(std::span<const AtomRecord> atoms,
                                                std::span<const ContextRecord> contexts) const;

  /// Every stage in order. Failures surface as StageError tagged with the
  /// failing stage; the original exception is nested.
  Assessment assess(std::string_view question, std::string_view response) const;

  std::string refine(std::string_view question, std::string_view response,
                     const Feedback& feedback) const;

  /// Throws CorrectionAborted when a stage fails.
  CorrectionTrace run_correction_loop(std::string_view question, std::string_view response) const;

  std::string baseline_llm1(std::string_view question, std::string_view response) const;
  std::string baseline_llm2(std::string_view question, std::string_view response,
                            std::span<const std::string> contexts,
                            std::span<const std::string> unverified_atoms) const;

 private:
  std::string generate(Stage stage, std::string prompt) const;

  std::shared_ptr<TextGenerator> generator_;
  std::shared_ptr<SearchProvider> search_;
  PromptSet prompts_;
  CorrectionConfig config_;
};

/// False/Unverified atoms plus, for every False atom, each model edge that
/// touches it with the edge's source context.
Feedback build_feedback(std::span<const AtomRecord> atoms, const ReasonerModel& model);

}  // namespace factloop
