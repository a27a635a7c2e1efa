#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factloop/factor_graph.hpp"

namespace factloop {

enum class Label { Unlabeled, True, False, Unverified };

std::string_view label_name(Label label) noexcept;
Label parse_label(std::string_view name);

struct AtomRecord {
  std::string id;
  std::string original_text;
  std::string revised_text;
  Label label = Label::Unlabeled;
  std::optional<double> posterior;

  /// Text used downstream: the revision when present, else the original.
  const std::string& text() const noexcept {
    return revised_text.empty() ? original_text : revised_text;
  }
};

/// Maximum length, in characters, of a fetched context body.
inline constexpr std::size_t kMaxContextBody = 4000;

/// A retrieved evidence passage (title, link, snippet, body) and its prior.
struct ContextRecord {
  std::string id;
  std::string title;
  std::string link;
  std::string snippet;
  std::string body;
  double prior = 0.99;

  /// Passage shown to the relation model and the refiner.
  const std::string& passage() const noexcept { return snippet.empty() ? body : snippet; }
};

enum class RelationKind { Entail, Contradict, Neutral };

std::string_view relation_name(RelationKind kind) noexcept;
RelationKind parse_relation(std::string_view name);

struct RelationRecord {
  std::string source_id;  // a context id
  std::string target_id;  // an atom id or a context id
  RelationKind kind = RelationKind::Neutral;
  double p = 1.0;
};

struct PriorConfig {
  double atom_prior = 0.5;
  double reliable_context_prior = 0.99;
  double unreliable_context_prior = 0.7;
  /// Link hosts (or host suffixes) treated as less reliable sources.
  std::vector<std::string> unreliable_hosts;

  void validate() const;
  double context_prior(std::string_view link) const;
};

// Tables are in storage order (f,f), (f,t), (t,f), (t,t) over (source, target).
// A false source is uninformative (0.5, 0.5).
std::array<double, 4> entailment_table(double p);
std::array<double, 4> contradiction_table(double p);
Factor entailment_factor(std::size_t source, std::size_t target, double p);
Factor contradiction_factor(std::size_t source, std::size_t target, double p);

/// Graph plus the bookkeeping needed to map it back to atoms and evidence.
struct ReasonerModel {
  GraphicalModel graph;
  std::vector<ContextRecord> contexts;  // after duplicate merging
  std::vector<RelationRecord> edges;    // one per binary factor, same order
  std::size_t num_atoms = 0;            // atoms occupy variables [0, num_atoms)
};

/// Keeps the first context for each (link, snippet) pair. `aliases` receives
/// (dropped id, kept id) pairs when non-null.
std::vector<ContextRecord> dedupe_contexts(
    std::span<const ContextRecord> contexts,
    std::vector<std::pair<std::string, std::string>>* aliases = nullptr);

/// One variable per atom then per (deduplicated) context, a prior factor on
/// each, one binary factor per non-neutral relation. Duplicate edges for the
/// same (source, target) keep the first. Throws ReferenceError for dangling
/// or atom-sourced relations and ContractViolation for malformed inputs.
ReasonerModel build_model(std::span<const AtomRecord> atoms,
                          std::span<const ContextRecord> contexts,
                          std::span<const RelationRecord> relations, const PriorConfig& priors);

/// |P - 0.5| at or below this is a tie.
inline constexpr double kTieTolerance = 1e-9;

Label label_for(double posterior) noexcept;

/// Stores each atom's posterior and its True/False/Unverified label.
std::vector<AtomRecord> label_atoms(const MarginalTable& marginals, const GraphicalModel& graph,
                                    std::vector<AtomRecord> atoms);

}  // namespace factloop
