#include "factloop/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "factloop/errors.hpp"

namespace factloop {

Factor::Factor(std::vector<std::size_t> scope, std::vector<double> table)
    : scope_(std::move(scope)), table_(std::move(table)) {
  if (scope_.empty() || scope_.size() > 2)
    throw ContractViolation("factor arity must be 1 or 2");
  if (scope_.size() == 2 && scope_[0] == scope_[1])
    throw ContractViolation("factor scope repeats a variable");
  if (table_.size() != (std::size_t{1} << scope_.size()))
    throw ContractViolation("factor table length must be 2^arity");
  bool any_positive = false;
  for (double v : table_) {
    if (!std::isfinite(v) || v < 0.0)
      throw ContractViolation("factor entries must be finite and non-negative");
    any_positive |= v > 0.0;
  }
  if (!any_positive) throw ContractViolation("factor table is all zero");
}

Factor Factor::unary(std::size_t var, double p_false, double p_true) {
  return Factor({var}, {p_false, p_true});
}

Factor Factor::binary(std::size_t first, std::size_t second, double ff, double ft, double tf,
                      double tt) {
  return Factor({first, second}, {ff, ft, tf, tt});
}

double Factor::value(std::span<const std::uint8_t> assignment) const {
  std::size_t idx = 0;
  for (std::size_t v : scope_) idx = (idx << 1) | (assignment[v] ? 1u : 0u);
  return table_[idx];
}

Factor Factor::scaled(double factor) const {
  std::vector<double> t = table_;
  for (double& v : t) v *= factor;
  return Factor(scope_, std::move(t));
}

GraphicalModel::GraphicalModel(std::vector<VariableId> variables, std::vector<Factor> factors)
    : variables_(std::move(variables)), factors_(std::move(factors)) {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i].index != i)
      throw ContractViolation("variable index must equal its position");
  for (const Factor& f : factors_)
    for (std::size_t v : f.scope())
      if (v >= variables_.size())
        throw ContractViolation("factor scope refers to an undeclared variable");
}

std::size_t GraphicalModel::find(VariableKind kind, std::string_view source_id) const noexcept {
  for (const auto& v : variables_)
    if (v.kind == kind && v.source_id == source_id) return v.index;
  return npos;
}

std::vector<std::vector<std::size_t>> GraphicalModel::primal_graph() const {
  std::vector<std::vector<std::size_t>> adj(variables_.size());
  for (const Factor& f : factors_) {
    auto s = f.scope();
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t j = 0; j < s.size(); ++j)
        if (i != j) adj[s[i]].push_back(s[j]);
  }
  for (auto& n : adj) {
    std::sort(n.begin(), n.end());
    n.erase(std::unique(n.begin(), n.end()), n.end());
  }
  return adj;
}

GraphicalModel GraphicalModel::disjoint_union(const GraphicalModel& other) const {
  std::vector<VariableId> vars = variables_;
  std::vector<Factor> facs = factors_;
  const std::size_t offset = vars.size();
  for (VariableId v : other.variables_) {
    v.index += offset;
    vars.push_back(std::move(v));
  }
  for (const Factor& f : other.factors_) {
    std::vector<std::size_t> scope(f.scope().begin(), f.scope().end());
    for (auto& v : scope) v += offset;
    facs.emplace_back(std::move(scope), std::vector<double>(f.table().begin(), f.table().end()));
  }
  return GraphicalModel(std::move(vars), std::move(facs));
}

MarginalTable MarginalTable::from_weights(std::span<const Marginal> weights) {
  MarginalTable out;
  out.rows_.reserve(weights.size());
  for (const Marginal& w : weights) {
    const double total = w.p_false + w.p_true;
    if (!(total > 0.0) || !std::isfinite(total))
      throw DegenerateModelError("marginal has zero total weight");
    Marginal m{w.p_false / total, w.p_true / total};
    // keep the pair complementary to the last bit
    m.p_false = 1.0 - m.p_true;
    out.rows_.push_back(m);
  }
  return out;
}

double joint_weight(const GraphicalModel& model, std::span<const std::uint8_t> assignment) {
  if (assignment.size() != model.num_variables())
    throw ContractViolation("assignment must cover every variable");
  for (std::uint8_t x : assignment)
    if (x > 1) throw ContractViolation("assignment values must be 0 or 1");
  double w = 1.0;
  for (const Factor& f : model.factors()) w *= f.value(assignment);
  return w;
}

namespace {

void check_enumerable(const GraphicalModel& model) {
  if (model.num_variables() > kEnumerationLimit)
    throw SizeError("model has " + std::to_string(model.num_variables()) +
                    " variables; enumeration limit is " + std::to_string(kEnumerationLimit));
}

template <typename Visit>
void enumerate(const GraphicalModel& model, Visit&& visit) {
  const std::size_t n = model.num_variables();
  std::vector<std::uint8_t> x(n, 0);
  const std::size_t count = std::size_t{1} << n;
  for (std::size_t code = 0; code < count; ++code) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<std::uint8_t>((code >> i) & 1u);
    visit(x, joint_weight(model, x));
  }
}

}  // namespace

double partition_function(const GraphicalModel& model) {
  check_enumerable(model);
  double z = 0.0;
  enumerate(model, [&](const auto&, double w) { z += w; });
  if (!(z > 0.0)) throw DegenerateModelError("partition function is zero");
  return z;
}

MarginalTable brute_force_marginals(const GraphicalModel& model) {
  check_enumerable(model);
  std::vector<Marginal> acc(model.num_variables(), Marginal{0.0, 0.0});
  double z = 0.0;
  enumerate(model, [&](const std::vector<std::uint8_t>& x, double w) {
    z += w;
    for (std::size_t i = 0; i < x.size(); ++i) (x[i] ? acc[i].p_true : acc[i].p_false) += w;
  });
  if (!(z > 0.0)) throw DegenerateModelError("partition function is zero");
  return MarginalTable::from_weights(acc);
}

// ---------------------------------------------------------------------------
// Text dump

namespace {

const char* kind_token(VariableKind k) { return k == VariableKind::Atom ? "atom" : "context"; }

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void parse_fail(const std::string& why) {
  throw ContractViolation("model dump: " + why);
}

}  // namespace

void write_model(std::ostream& out, const GraphicalModel& model) {
  out << "factloop-model 1\n";
  out << "variables " << model.num_variables() << '\n';
  for (const VariableId& v : model.variables()) {
    if (v.source_id.find_first_of(" \t\r\n") != std::string::npos)
      throw ContractViolation("source id contains whitespace: " + v.source_id);
    out << "var " << v.index << ' ' << kind_token(v.kind) << ' '
        << (v.source_id.empty() ? "-" : v.source_id) << '\n';
  }
  out << "factors " << model.factors().size() << '\n';
  for (const Factor& f : model.factors()) {
    out << "factor " << f.arity();
    for (std::size_t s : f.scope()) out << ' ' << s;
    for (double t : f.table()) out << ' ' << format_double(t);
    out << '\n';
  }
}

std::string dump_model(const GraphicalModel& model) {
  std::ostringstream os;
  write_model(os, model);
  return os.str();
}

GraphicalModel parse_model(std::istream& in) {
  std::string word;
  int version = 0;
  if (!(in >> word >> version) || word != "factloop-model" || version != 1)
    parse_fail("bad header");
  std::size_t n = 0;
  if (!(in >> word >> n) || word != "variables") parse_fail("expected 'variables'");
  std::vector<VariableId> vars;
  for (std::size_t i = 0; i < n; ++i) {
    VariableId v;
    std::string kind, id;
    if (!(in >> word >> v.index >> kind >> id) || word != "var") parse_fail("bad var line");
    if (kind == "atom") v.kind = VariableKind::Atom;
    else if (kind == "context") v.kind = VariableKind::Context;
    else parse_fail("unknown variable kind " + kind);
    v.source_id = id == "-" ? "" : id;
    vars.push_back(std::move(v));
  }
  std::size_t m = 0;
  if (!(in >> word >> m) || word != "factors") parse_fail("expected 'factors'");
  std::vector<Factor> facs;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t arity = 0;
    if (!(in >> word >> arity) || word != "factor" || arity < 1 || arity > 2)
      parse_fail("bad factor line");
    std::vector<std::size_t> scope(arity);
    for (auto& s : scope)
      if (!(in >> s)) parse_fail("bad factor scope");
    std::vector<double> table(std::size_t{1} << arity);
    for (auto& t : table)
      if (!(in >> t)) parse_fail("bad factor entry");
    facs.emplace_back(std::move(scope), std::move(table));
  }
  return GraphicalModel(std::move(vars), std::move(facs));
}

GraphicalModel parse_model(const std::string& text) {
  std::istringstream is(text);
  return parse_model(is);
}

}  // namespace factloop
