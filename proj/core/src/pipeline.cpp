#include "factloop/pipeline.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>

#include "text.hpp"

namespace factloop {

void CorrectionConfig::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ContractViolation("theta must lie in [0, 1]");
  if (max_iterations == 0) throw ContractViolation("max_iterations must be positive");
  if (k_contexts == 0) throw ContractViolation("k_contexts must be positive");
  if (ibound == 0) throw ContractViolation("ibound must be positive");
  if (!(temperature >= 0.0)) throw ContractViolation("temperature must be >= 0");
  if (max_tokens <= 0) throw ContractViolation("max_tokens must be positive");
  if (prompts.empty()) throw ContractViolation("prompt set is empty");
  priors.validate();
}

nlohmann::json to_json(const CorrectionConfig& c) {
  return nlohmann::json{
      {"theta", c.theta},
      {"max_iterations", c.max_iterations},
      {"k_contexts", c.k_contexts},
      {"ibound", c.ibound},
      {"prompts", c.prompts},
      {"model_name", c.model_name},
      {"temperature", c.temperature},
      {"max_tokens", c.max_tokens},
      {"context_relations", c.context_relations},
      {"recall_k", c.recall_k},
      {"priors",
       {{"atom_prior", c.priors.atom_prior},
        {"reliable_context_prior", c.priors.reliable_context_prior},
        {"unreliable_context_prior", c.priors.unreliable_context_prior},
        {"unreliable_hosts", c.priors.unreliable_hosts}}}};
}

CorrectionConfig correction_config_from_json(const nlohmann::json& j) {
  CorrectionConfig c;
  try {
    c.theta = j.value("theta", c.theta);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.k_contexts = j.value("k_contexts", c.k_contexts);
    c.ibound = j.value("ibound", c.ibound);
    c.prompts = j.value("prompts", c.prompts);
    c.model_name = j.value("model_name", c.model_name);
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.context_relations = j.value("context_relations", c.context_relations);
    c.recall_k = j.value("recall_k", c.recall_k);
    if (j.contains("priors")) {
      const auto& p = j.at("priors");
      c.priors.atom_prior = p.value("atom_prior", c.priors.atom_prior);
      c.priors.reliable_context_prior =
          p.value("reliable_context_prior", c.priors.reliable_context_prior);
      c.priors.unreliable_context_prior =
          p.value("unreliable_context_prior", c.priors.unreliable_context_prior);
      c.priors.unreliable_hosts =
          p.value("unreliable_hosts", std::vector<std::string>{});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("bad config: ") + e.what());
  }
  c.validate();
  return c;
}

PromptSet load_prompts(const CorrectionConfig& config) {
  if (config.prompts == "embedded") return PromptSet::embedded();
  return PromptSet::from_directory(config.prompts);
}

std::string_view stop_reason_name(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::Threshold: return "threshold";
    case StopReason::NoImprovement: return "no_improvement";
    case StopReason::MaxIterations: return "max_iterations";
  }
  return "";
}

const FactualityReport& CorrectionTrace::final_report() const {
  for (auto it = iterations.rbegin(); it != iterations.rend(); ++it)
    if (it->accepted) return it->report;
  throw ContractViolation("trace has no accepted entry");
}

// ---------------------------------------------------------------- parsing

namespace {

std::string strip_list_marker(std::string_view line) {
  std::string s = detail::trim(line);
  if (s.starts_with("- ") || s.starts_with("* ")) return detail::trim(std::string_view(s).substr(2));
  std::size_t digits = 0;
  while (digits < s.size() && std::isdigit(static_cast<unsigned char>(s[digits]))) ++digits;
  if (digits > 0 && digits + 1 < s.size() && (s[digits] == '.' || s[digits] == ')') &&
      s[digits + 1] == ' ')
    return detail::trim(std::string_view(s).substr(digits + 2));
  return {};
}

std::optional<std::string> field_value(std::string_view line, std::string_view name) {
  const std::string s = detail::trim(line);
  if (s.size() <= name.size() || detail::to_lower(s.substr(0, name.size())) != name) return {};
  if (s[name.size()] != ':') return {};
  return detail::trim(std::string_view(s).substr(name.size() + 1));
}

}  // namespace

std::vector<std::string> parse_atom_lines(std::string_view output) {
  std::vector<std::string> atoms;
  for (const std::string& line : detail::split_lines(output)) {
    std::string atom = strip_list_marker(line);
    if (!atom.empty()) atoms.push_back(std::move(atom));
  }
  if (atoms.empty()) throw FormatError("atomizer output has no atomic units", std::string(output));
  return atoms;
}

std::vector<std::string> parse_revised_lines(std::string_view output, std::size_t expected) {
  std::map<std::size_t, std::string> by_number;
  for (const std::string& line : detail::split_lines(output)) {
    const std::string s = detail::trim(line);
    std::size_t number = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), number);
    if (ec != std::errc() || end == s.data() || end + 1 >= s.data() + s.size()) continue;
    if (*end != '.' || end[1] != ' ') continue;
    std::string text = detail::trim(std::string_view(end + 2, s.data() + s.size() - (end + 2)));
    if (!text.empty()) by_number.emplace(number, std::move(text));
  }
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= expected; ++i) {
    auto it = by_number.find(i);
    if (it == by_number.end())
      throw FormatError("reviser output lacks unit " + std::to_string(i), std::string(output));
    out.push_back(it->second);
  }
  return out;
}

std::string parse_query(std::string_view output) {
  for (const std::string& line : detail::split_lines(output)) {
    std::string s = detail::trim(line);
    if (auto v = field_value(s, "query")) s = *v;
    s = detail::trim(detail::unquote(s));
    if (!s.empty()) return s;
  }
  throw FormatError("query output is empty", std::string(output));
}

std::pair<RelationKind, double> parse_relation_answer(std::string_view output) {
  std::optional<RelationKind> kind;
  std::optional<double> p;
  for (const std::string& line : detail::split_lines(output)) {
    if (auto v = field_value(line, "relation")) {
      try {
        kind = parse_relation(*v);
      } catch (const ContractViolation&) {
        throw FormatError("unknown relation label '" + *v + "'", std::string(output));
      }
    } else if (auto w = field_value(line, "probability")) {
      double x = 0.0;
      auto [end, ec] = std::from_chars(w->data(), w->data() + w->size(), x);
      if (ec != std::errc() || end != w->data() + w->size() || !(x > 0.0 && x <= 1.0))
        throw FormatError("relation probability '" + *w + "' is not in (0, 1]", std::string(output));
      p = x;
    }
  }
  if (!kind || !p) throw FormatError("relation output lacks RELATION or PROBABILITY", std::string(output));
  return {*kind, *p};
}

// ---------------------------------------------------------------- stages

namespace {

template <class Fn>
auto in_stage(Stage stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    std::throw_with_nested(StageError(stage, e.what()));
  }
}

}  // namespace

Pipeline::Pipeline(std::shared_ptr<TextGenerator> generator, std::shared_ptr<SearchProvider> search,
                   PromptSet prompts, CorrectionConfig config)
    : generator_(std::move(generator)),
      search_(std::move(search)),
      prompts_(std::move(prompts)),
      config_(std::move(config)) {
  config_.validate();
  if (!generator_) throw ContractViolation("pipeline needs a text generator");
}

std::string Pipeline::generate(Stage stage, std::string prompt) const {
  GenerationRequest req;
  req.model_name = config_.model_name;
  req.prompt = std::move(prompt);
  req.temperature = config_.temperature;
  req.max_tokens = config_.max_tokens;
  return in_stage(stage, [&] { return generator_->generate(req); });
}

std::vector<AtomRecord> Pipeline::atomize(std::string_view response) const {
  if (detail::trim(response).empty()) throw ContractViolation("response is empty");
  const std::string out = generate(Stage::Atomize, render_atomize(prompts_, response));
  std::vector<AtomRecord> atoms;
  for (std::string& text : parse_atom_lines(out)) {
    AtomRecord a;
    a.id = "a" + std::to_string(atoms.size() + 1);
    a.original_text = std::move(text);
    atoms.push_back(std::move(a));
  }
  return atoms;
}

std::vector<AtomRecord> Pipeline::revise(std::vector<AtomRecord> atoms,
                                         std::string_view response) const {
  if (atoms.empty()) return atoms;
  std::vector<std::string> originals;
  for (const AtomRecord& a : atoms) originals.push_back(a.original_text);
  const std::string out = generate(Stage::Revise, render_revise(prompts_, response, originals));
  std::vector<std::string> revised = parse_revised_lines(out, atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i].revised_text = std::move(revised[i]);
  return atoms;
}

std::vector<ContextRecord> Pipeline::retrieve_contexts(std::span<const AtomRecord> atoms) const {
  if (!search_) throw ContractViolation("pipeline has no search provider");
  std::vector<ContextRecord> all;
  for (const AtomRecord& a : atoms) {
    const std::string query = parse_query(generate(Stage::Retrieve, render_query(prompts_, a.text())));
    const auto hits =
        in_stage(Stage::Retrieve, [&] { return search(*search_, query, config_.k_contexts); });
    for (const SearchResult& r : hits) {
      ContextRecord c;
      c.id = "c" + std::to_string(all.size() + 1);
      c.title = r.title;
      c.link = r.link;
      c.snippet = r.snippet;
      c.body = r.fetched_body;
      c.prior = config_.priors.context_prior(r.link);
      all.push_back(std::move(c));
    }
  }
  std::vector<ContextRecord> unique = dedupe_contexts(all);
  for (std::size_t i = 0; i < unique.size(); ++i) unique[i].id = "c" + std::to_string(i + 1);
  return unique;
}

std::vector<RelationRecord> Pipeline::extract_relations(
    std::span<const AtomRecord> atoms, std::span<const ContextRecord> contexts) const {
  if (atoms.empty()) throw ContractViolation("relation extraction needs atoms");
  std::vector<RelationRecord> out;
  auto relate = [&](const ContextRecord& c, const std::string& target_id,
                    const std::string& hypothesis) {
    if (c.passage().empty() || hypothesis.empty()) return;
    const std::string answer =
        generate(Stage::Relate, render_relation(prompts_, c.passage(), hypothesis));
    auto [kind, p] = parse_relation_answer(answer);
    out.push_back(RelationRecord{c.id, target_id, kind, p});
  };
  for (const ContextRecord& c : contexts)
    for (const AtomRecord& a : atoms) relate(c, a.id, a.text());
  if (config_.context_relations)
    for (std::size_t i = 0; i < contexts.size(); ++i)
      for (std::size_t j = i + 1; j < contexts.size(); ++j)
        relate(contexts[i], contexts[j].id, contexts[j].passage());
  return out;
}

Assessment Pipeline::assess(std::string_view question, std::string_view response) const {
  (void)question;  // the stages work on the response alone
  Assessment out;
  auto atoms = in_stage(Stage::Atomize, [&] { return atomize(response); });
  atoms = in_stage(Stage::Revise, [&] { return revise(std::move(atoms), response); });
  auto contexts = in_stage(Stage::Retrieve, [&] { return retrieve_contexts(atoms); });
  auto relations = in_stage(Stage::Relate, [&] { return extract_relations(atoms, contexts); });
  in_stage(Stage::Infer, [&] {
    out.model = build_model(atoms, contexts, relations, config_.priors);
    const EliminationOrder order = min_fill_order(out.model.graph);
    InferenceConfig ic;
    ic.ibound = config_.ibound;
    const InferenceResult r = run_inference(out.model.graph, order, ic);
    out.max_cluster_size = r.max_cluster_size;
    out.split_buckets = r.split_buckets;
    out.atoms = label_atoms(r.marginals, out.model.graph, std::move(atoms));
    std::vector<Label> labels;
    for (const AtomRecord& a : out.atoms) labels.push_back(a.label);
    out.report =
        make_report(labels, verifiability(out.model.graph, out.model.num_atoms), config_.recall_k);
    return 0;
  });
  return out;
}

Feedback build_feedback(std::span<const AtomRecord> atoms, const ReasonerModel& model) {
  Feedback fb;
  std::map<std::string, const ContextRecord*> context_by_id;
  for (const ContextRecord& c : model.contexts) context_by_id.emplace(c.id, &c);
  for (const AtomRecord& a : atoms) {
    if (a.label != Label::False && a.label != Label::Unverified) continue;
    fb.flagged_atoms.push_back(a);
    if (a.label != Label::False) continue;
    for (const RelationRecord& e : model.edges) {
      if (e.target_id != a.id) continue;
      auto it = context_by_id.find(e.source_id);
      if (it == context_by_id.end()) continue;
      fb.evidence.push_back(EvidenceItem{a.id, e.source_id, it->second->passage(), e.kind, e.p});
    }
  }
  return fb;
}

std::string Pipeline::refine(std::string_view question, std::string_view response,
                             const Feedback& feedback) const {
  if (feedback.empty()) throw ContractViolation("refinement needs non-empty feedback");
  std::vector<IncorrectAtom> incorrect;
  std::vector<std::string> unverified;
  for (const AtomRecord& a : feedback.flagged_atoms) {
    if (a.label == Label::Unverified) {
      unverified.push_back(a.text());
      continue;
    }
    IncorrectAtom ia{a.text(), {}};
    for (const EvidenceItem& ev : feedback.evidence)
      if (ev.atom_id == a.id) ia.evidence.push_back(RefinementEvidence{ev.passage, ev.kind});
    incorrect.push_back(std::move(ia));
  }
  return generate(Stage::Refine,
                  render_refine(prompts_, question, response, incorrect, unverified));
}

CorrectionTrace Pipeline::run_correction_loop(std::string_view question,
                                              std::string_view response) const {
  CorrectionTrace trace;
  trace.question = std::string(question);
  std::string y(response);
  auto guarded = [&](auto&& fn) {
    try {
      return fn();
    } catch (const StageError& e) {
      trace.final_response = y;
      std::throw_with_nested(CorrectionAborted(e, trace));
    }
  };

  const Assessment initial = guarded([&] { return assess(question, y); });
  trace.iterations.push_back(IterationRecord{y, initial.report, {}, true});
  double pr = initial.report.precision;
  trace.stop = StopReason::Threshold;

  while (pr < config_.theta) {
    if (trace.refinements() >= config_.max_iterations) {
      trace.stop = StopReason::MaxIterations;
      break;
    }
    const Assessment current = guarded([&] { return assess(question, y); });
    Feedback feedback = build_feedback(current.atoms, current.model);
    if (feedback.empty()) break;
    const std::string candidate = guarded([&] { return refine(question, y, feedback); });
    const Assessment next = guarded([&] { return assess(question, candidate); });
    const bool accepted = next.report.precision > pr;
    trace.iterations.push_back(IterationRecord{candidate, next.report, std::move(feedback), accepted});
    if (!accepted) {
      trace.stop = StopReason::NoImprovement;
      break;
    }
    y = candidate;
    pr = next.report.precision;
  }
  trace.final_response = y;
  return trace;
}

std::string Pipeline::baseline_llm1(std::string_view question, std::string_view response) const {
  return generate(Stage::Refine, render_llm1(prompts_, question, response));
}

std::string Pipeline::baseline_llm2(std::string_view question, std::string_view response,
                                    std::span<const std::string> contexts,
                                    std::span<const std::string> unverified_atoms) const {
  return generate(Stage::Refine,
                  render_llm2(prompts_, question, contexts, response, unverified_atoms));
}

}  // namespace factloop
