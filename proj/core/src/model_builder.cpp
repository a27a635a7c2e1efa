#include "factloop/model_builder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include "factloop/errors.hpp"
#include "text.hpp"

namespace factloop {

std::string_view label_name(Label label) noexcept {
  switch (label) {
    case Label::True: return "true";
    case Label::False: return "false";
    case Label::Unverified: return "unverified";
    case Label::Unlabeled: break;
  }
  return "unlabeled";
}

Label parse_label(std::string_view name) {
  if (name == "true") return Label::True;
  if (name == "false") return Label::False;
  if (name == "unverified") return Label::Unverified;
  if (name == "unlabeled") return Label::Unlabeled;
  throw ContractViolation("unknown label: " + std::string(name));
}

std::string_view relation_name(RelationKind kind) noexcept {
  switch (kind) {
    case RelationKind::Entail: return "entail";
    case RelationKind::Contradict: return "contradict";
    case RelationKind::Neutral: break;
  }
  return "neutral";
}

RelationKind parse_relation(std::string_view name) {
  const std::string n = detail::to_lower(detail::trim(name));
  if (n == "entail" || n == "entailment" || n == "entails") return RelationKind::Entail;
  if (n == "contradict" || n == "contradiction" || n == "contradicts") return RelationKind::Contradict;
  if (n == "neutral") return RelationKind::Neutral;
  throw ContractViolation("unknown relation: " + std::string(name));
}

namespace {

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

void check_relation_p(double p) {
  if (!(p > 0.0 && p <= 1.0)) throw ContractViolation("relation probability must be in (0, 1]");
}

}  // namespace

void PriorConfig::validate() const {
  if (!in_open_unit(atom_prior) || !in_open_unit(reliable_context_prior) ||
      !in_open_unit(unreliable_context_prior))
    throw ContractViolation("priors must lie in (0, 1)");
}

double PriorConfig::context_prior(std::string_view link) const {
  const std::string host = detail::link_host(link);
  for (const std::string& h : unreliable_hosts) {
    const std::string want = detail::to_lower(h);
    if (host == want) return unreliable_context_prior;
    if (host.size() > want.size() && host.ends_with(want) &&
        host[host.size() - want.size() - 1] == '.')
      return unreliable_context_prior;
  }
  return reliable_context_prior;
}

std::array<double, 4> entailment_table(double p) {
  check_relation_p(p);
  return {0.5, 0.5, 1.0 - p, p};
}

std::array<double, 4> contradiction_table(double p) {
  check_relation_p(p);
  return {0.5, 0.5, p, 1.0 - p};
}

Factor entailment_factor(std::size_t source, std::size_t target, double p) {
  auto t = entailment_table(p);
  return Factor::binary(source, target, t[0], t[1], t[2], t[3]);
}

Factor contradiction_factor(std::size_t source, std::size_t target, double p) {
  auto t = contradiction_table(p);
  return Factor::binary(source, target, t[0], t[1], t[2], t[3]);
}

std::vector<ContextRecord> dedupe_contexts(
    std::span<const ContextRecord> contexts,
    std::vector<std::pair<std::string, std::string>>* aliases) {
  std::vector<ContextRecord> out;
  std::map<std::pair<std::string, std::string>, std::string> first;
  for (const ContextRecord& c : contexts) {
    auto [it, inserted] = first.try_emplace({c.link, c.snippet}, c.id);
    if (inserted) {
      out.push_back(c);
    } else if (aliases) {
      aliases->emplace_back(c.id, it->second);
    }
  }
  return out;
}

ReasonerModel build_model(std::span<const AtomRecord> atoms,
                          std::span<const ContextRecord> contexts,
                          std::span<const RelationRecord> relations, const PriorConfig& priors) {
  priors.validate();
  ReasonerModel out;
  std::vector<std::pair<std::string, std::string>> aliases;
  out.contexts = dedupe_contexts(contexts, &aliases);
  out.num_atoms = atoms.size();

  std::map<std::string, std::size_t> atom_index, context_index;
  std::vector<VariableId> vars;
  std::vector<Factor> factors;

  for (const AtomRecord& a : atoms) {
    if (!atom_index.emplace(a.id, vars.size()).second)
      throw ContractViolation("duplicate atom id: " + a.id);
    factors.push_back(Factor::unary(vars.size(), 1.0 - priors.atom_prior, priors.atom_prior));
    vars.push_back(VariableId{vars.size(), VariableKind::Atom, a.id});
  }
  for (const ContextRecord& c : out.contexts) {
    if (atom_index.count(c.id) || !context_index.emplace(c.id, vars.size()).second)
      throw ContractViolation("duplicate context id: " + c.id);
    if (!in_open_unit(c.prior)) throw ContractViolation("context prior must lie in (0, 1)");
    if (detail::utf8_length(c.body) > kMaxContextBody)
      throw ContractViolation("context body exceeds " + std::to_string(kMaxContextBody) +
                              " characters: " + c.id);
    factors.push_back(Factor::unary(vars.size(), 1.0 - c.prior, c.prior));
    vars.push_back(VariableId{vars.size(), VariableKind::Context, c.id});
  }
  std::map<std::string, std::string> alias_of(aliases.begin(), aliases.end());
  auto resolve = [&](const std::string& id) {
    auto it = alias_of.find(id);
    return it == alias_of.end() ? id : it->second;
  };

  std::set<std::pair<std::size_t, std::size_t>> seen_edges;
  for (const RelationRecord& r : relations) {
    check_relation_p(r.p);
    const std::string source = resolve(r.source_id);
    const std::string target = resolve(r.target_id);
    auto src = context_index.find(source);
    if (src == context_index.end()) {
      if (atom_index.count(source))
        throw ReferenceError("relation source must be a context, got atom " + source);
      throw ReferenceError("relation refers to unknown source " + source);
    }
    std::size_t dst = 0;
    if (auto a = atom_index.find(target); a != atom_index.end()) {
      dst = a->second;
    } else if (auto c = context_index.find(target); c != context_index.end()) {
      dst = c->second;
    } else {
      throw ReferenceError("relation refers to unknown target " + target);
    }
    if (src->second == dst) throw ContractViolation("relation source equals target: " + source);
    if (r.kind == RelationKind::Neutral) continue;
    if (!seen_edges.emplace(src->second, dst).second) continue;

    factors.push_back(r.kind == RelationKind::Entail ? entailment_factor(src->second, dst, r.p)
                                                     : contradiction_factor(src->second, dst, r.p));
    out.edges.push_back(RelationRecord{source, target, r.kind, r.p});
  }
  out.graph = GraphicalModel(std::move(vars), std::move(factors));
  return out;
}

Label label_for(double posterior) noexcept {
  if (std::fabs(posterior - 0.5) <= kTieTolerance) return Label::Unverified;
  return posterior > 0.5 ? Label::True : Label::False;
}

std::vector<AtomRecord> label_atoms(const MarginalTable& marginals, const GraphicalModel& graph,
                                    std::vector<AtomRecord> atoms) {
  for (AtomRecord& a : atoms) {
    const std::size_t v = graph.find(VariableKind::Atom, a.id);
    if (v == GraphicalModel::npos || v >= marginals.size())
      throw ContractViolation("no marginal for atom " + a.id);
    const double p = marginals.p_true(v);
    a.posterior = p;
    a.label = label_for(p);
  }
  return atoms;
}

}  // namespace factloop
