#pragma once

// Prompt templates for every LLM-backed stage.
//
// Templates are plain-text assets (core/prompts/*.txt) with two marker forms:
//   {}        positional; filled left to right
//   {name}    named; a named marker alone on its line is removed together
//             with the line break when its value is empty
// Literal braces never appear in the shipped templates.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factloop/model_builder.hpp"

namespace factloop {

enum class PromptId { Judge, Llm1, Llm2, Refine, Veli5, Atomize, Revise, Query, Relation };

/// Asset file stem, e.g. "refine" for refine.txt.
std::string_view prompt_name(PromptId id) noexcept;

class PromptSet {
 public:
  /// Templates compiled into the library from core/prompts.
  static PromptSet embedded();
  /// Loads <dir>/<name>.txt for every template; any missing file is an error.
  static PromptSet from_directory(const std::filesystem::path& dir);

  const std::string& get(PromptId id) const;

 private:
  std::map<PromptId, std::string> templates_;
};

/// Fills markers. Throws ContractViolation when the positional count does
/// not match or a named marker has no value.
std::string render_template(std::string_view tmpl, std::span<const std::string> positional,
                            const std::map<std::string, std::string>& named = {});

/// One entry of the refinement feedback: an incorrect atom and the evidence
/// attached to it in the graphical model.
struct RefinementEvidence {
  std::string passage;
  RelationKind kind = RelationKind::Entail;
};
struct IncorrectAtom {
  std::string text;
  std::vector<RefinementEvidence> evidence;
};

std::string render_judge(const PromptSet& prompts, std::string_view reference,
                         std::string_view candidate);
std::string render_llm1(const PromptSet& prompts, std::string_view question,
                        std::string_view response);
std::string render_llm2(const PromptSet& prompts, std::string_view question,
                        std::span<const std::string> contexts, std::string_view response,
                        std::span<const std::string> unverified_atoms);
std::string render_refine(const PromptSet& prompts, std::string_view question,
                          std::string_view response, std::span<const IncorrectAtom> incorrect,
                          std::span<const std::string> unverified_atoms);
std::string render_veli5(const PromptSet& prompts, std::string_view question);
std::string render_atomize(const PromptSet& prompts, std::string_view response);
std::string render_revise(const PromptSet& prompts, std::string_view response,
                          std::span<const std::string> atoms);
std::string render_query(const PromptSet& prompts, std::string_view statement);
std::string render_relation(const PromptSet& prompts, std::string_view premise,
                            std::string_view hypothesis);

}  // namespace factloop
