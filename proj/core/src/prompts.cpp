#include "factloop/prompts.hpp"

#include <fstream>
#include <sstream>

#include "factloop/errors.hpp"

namespace factloop {

namespace detail {
const std::map<std::string, std::string>& embedded_prompts();
}

namespace {

constexpr PromptId kAllPrompts[] = {PromptId::Judge,   PromptId::Llm1,    PromptId::Llm2,
                                    PromptId::Refine,  PromptId::Veli5,   PromptId::Atomize,
                                    PromptId::Revise,  PromptId::Query,   PromptId::Relation};

std::string in_quotes(std::string_view s) { return "\"" + std::string(s) + "\""; }

std::string quoted_lines(std::span<const std::string> items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += in_quotes(items[i]);
  }
  return out;
}

std::string_view relation_label(RelationKind kind) {
  switch (kind) {
    case RelationKind::Entail: return "ENTAILMENT";
    case RelationKind::Contradict: return "CONTRADICTION";
    case RelationKind::Neutral: break;
  }
  return "NEUTRAL";
}

}  // namespace

std::string_view prompt_name(PromptId id) noexcept {
  switch (id) {
    case PromptId::Judge: return "judge";
    case PromptId::Llm1: return "llm1";
    case PromptId::Llm2: return "llm2";
    case PromptId::Refine: return "refine";
    case PromptId::Veli5: return "veli5";
    case PromptId::Atomize: return "atomize";
    case PromptId::Revise: return "revise";
    case PromptId::Query: return "query";
    case PromptId::Relation: return "relation";
  }
  return "";
}

PromptSet PromptSet::embedded() {
  PromptSet set;
  const auto& all = detail::embedded_prompts();
  for (PromptId id : kAllPrompts) set.templates_[id] = all.at(std::string(prompt_name(id)));
  return set;
}

PromptSet PromptSet::from_directory(const std::filesystem::path& dir) {
  PromptSet set;
  for (PromptId id : kAllPrompts) {
    const auto path = dir / (std::string(prompt_name(id)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractViolation("missing prompt template " + path.string());
    std::ostringstream body;
    body << in.rdbuf();
    set.templates_[id] = body.str();
  }
  return set;
}

const std::string& PromptSet::get(PromptId id) const { return templates_.at(id); }

std::string render_template(std::string_view tmpl, std::span<const std::string> positional,
                            const std::map<std::string, std::string>& named) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t next_positional = 0;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    const char c = tmpl[i];
    if (c != '{') {
      out.push_back(c);
      ++i;
      continue;
    }
    const std::size_t close = tmpl.find('}', i);
    if (close == std::string_view::npos) throw ContractViolation("unterminated template marker");
    const std::string_view name = tmpl.substr(i + 1, close - i - 1);
    if (name.empty()) {
      if (next_positional >= positional.size())
        throw ContractViolation("template has more positional markers than arguments");
      out += positional[next_positional++];
      i = close + 1;
      continue;
    }
    auto it = named.find(std::string(name));
    if (it == named.end()) throw ContractViolation("no value for template marker {" + std::string(name) + "}");
    const bool line_start = out.empty() || out.back() == '\n';
    const bool line_end = close + 1 < tmpl.size() && tmpl[close + 1] == '\n';
    if (it->second.empty() && line_start && line_end) {
      i = close + 2;  // drop the whole line
      continue;
    }
    out += it->second;
    i = close + 1;
  }
  if (next_positional != positional.size())
    throw ContractViolation("template has fewer positional markers than arguments");
  return out;
}

std::string render_judge(const PromptSet& prompts, std::string_view reference,
                         std::string_view candidate) {
  const std::string args[] = {std::string(reference), std::string(candidate)};
  return render_template(prompts.get(PromptId::Judge), args);
}

std::string render_llm1(const PromptSet& prompts, std::string_view question,
                        std::string_view response) {
  const std::string args[] = {std::string(question), std::string(response)};
  return render_template(prompts.get(PromptId::Llm1), args);
}

std::string render_llm2(const PromptSet& prompts, std::string_view question,
                        std::span<const std::string> contexts, std::string_view response,
                        std::span<const std::string> unverified_atoms) {
  const std::string args[] = {std::string(question), quoted_lines(contexts),
                              std::string(response), quoted_lines(unverified_atoms)};
  return render_template(prompts.get(PromptId::Llm2), args);
}

std::string render_refine(const PromptSet& prompts, std::string_view question,
                          std::string_view response, std::span<const IncorrectAtom> incorrect,
                          std::span<const std::string> unverified_atoms) {
  std::string atoms = "ORIGINAL ANSWER: " + in_quotes(response);
  std::string contexts;
  std::string relations;
  for (std::size_t i = 0; i < incorrect.size(); ++i) {
    const std::string n = std::to_string(i + 1);
    atoms += "\nINCORRECT ATOM " + n + ": " + in_quotes(incorrect[i].text);
    for (std::size_t j = 0; j < incorrect[i].evidence.size(); ++j) {
      const auto& ev = incorrect[i].evidence[j];
      const std::string tag = n + "-" + std::to_string(j + 1);
      if (!contexts.empty()) contexts += '\n';
      contexts += "CONTEXT " + tag + " FOR INCORRECT ATOM " + n + ": " + in_quotes(ev.passage);
      if (!relations.empty()) relations += '\n';
      relations += "RELATION FROM CONTEXT " + tag + " TO INCORRECT ATOM " + n + ": " +
                   in_quotes(relation_label(ev.kind));
    }
  }
  for (std::size_t i = 0; i < unverified_atoms.size(); ++i)
    atoms += "\nUNVERIFIED ATOM " + std::to_string(i + 1) + ": " + in_quotes(unverified_atoms[i]);

  const std::string args[] = {std::string(question)};
  const std::map<std::string, std::string> named{
      {"incorrect atoms", atoms},
      {"contexts for incorrect atoms", contexts},
      {"relations from contexts to incorrect atoms", relations}};
  return render_template(prompts.get(PromptId::Refine), args, named);
}

std::string render_veli5(const PromptSet& prompts, std::string_view question) {
  const std::string args[] = {std::string(question)};
  return render_template(prompts.get(PromptId::Veli5), args);
}

std::string render_atomize(const PromptSet& prompts, std::string_view response) {
  const std::string args[] = {std::string(response)};
  return render_template(prompts.get(PromptId::Atomize), args);
}

std::string render_revise(const PromptSet& prompts, std::string_view response,
                          std::span<const std::string> atoms) {
  std::string numbered;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (i) numbered += '\n';
    numbered += std::to_string(i + 1) + ". " + atoms[i];
  }
  const std::string args[] = {std::string(response), numbered};
  return render_template(prompts.get(PromptId::Revise), args);
}

std::string render_query(const PromptSet& prompts, std::string_view statement) {
  const std::string args[] = {std::string(statement)};
  return render_template(prompts.get(PromptId::Query), args);
}

std::string render_relation(const PromptSet& prompts, std::string_view premise,
                            std::string_view hypothesis) {
  const std::string args[] = {std::string(premise), std::string(hypothesis)};
  return render_template(prompts.get(PromptId::Relation), args);
}

}  // namespace factloop
