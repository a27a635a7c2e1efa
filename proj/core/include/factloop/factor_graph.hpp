#pragma once

// Discrete graphical models over Boolean variables.
//
// Table layout: value false is 0, true is 1; entries are stored row-major in
// scope order, so for scope (a, b) the entry for (a, b) sits at 2*a + b:
//   [ (f,f), (f,t), (t,f), (t,t) ]

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace factloop {

enum class VariableKind { Atom, Context };

struct VariableId {
  std::size_t index = 0;
  VariableKind kind = VariableKind::Atom;
  std::string source_id;  // atom/context id; empty for synthetic variables

  friend bool operator==(const VariableId&, const VariableId&) = default;
};

/// Unary or binary non-negative table over Boolean variables.
class Factor {
 public:
  /// Throws ContractViolation on arity outside {1,2}, duplicate scope
  /// variables, wrong table length, negative/non-finite entries, or an
  /// all-zero table.
  Factor(std::vector<std::size_t> scope, std::vector<double> table);

  static Factor unary(std::size_t var, double p_false, double p_true);
  static Factor binary(std::size_t first, std::size_t second, double ff, double ft,
                       double tf, double tt);

  std::span<const std::size_t> scope() const noexcept { return scope_; }
  std::span<const double> table() const noexcept { return table_; }
  std::size_t arity() const noexcept { return scope_.size(); }

  /// Entry selected by a full assignment of the model's variables.
  double value(std::span<const std::uint8_t> assignment) const;

  Factor scaled(double factor) const;

 private:
  std::vector<std::size_t> scope_;
  std::vector<double> table_;
};

/// The tuple <X, D, F> with D fixed to {false, true}.
class GraphicalModel {
 public:
  GraphicalModel() = default;
  /// Variables must carry index == position. Every factor scope must refer
  /// to declared variables (ContractViolation otherwise).
  GraphicalModel(std::vector<VariableId> variables, std::vector<Factor> factors);

  std::span<const VariableId> variables() const noexcept { return variables_; }
  std::span<const Factor> factors() const noexcept { return factors_; }
  std::size_t num_variables() const noexcept { return variables_.size(); }

  /// Index of the variable with the given kind and source id, or npos.
  std::size_t find(VariableKind kind, std::string_view source_id) const noexcept;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  /// Adjacency of the primal graph (variables sharing a factor scope);
  /// neighbour lists are sorted and unique.
  std::vector<std::vector<std::size_t>> primal_graph() const;

  /// Union with `other`; other's variables are re-indexed after ours.
  GraphicalModel disjoint_union(const GraphicalModel& other) const;

 private:
  std::vector<VariableId> variables_;
  std::vector<Factor> factors_;
};

struct Marginal {
  double p_false = 0.5;
  double p_true = 0.5;
};

/// Per-variable posterior pairs; every row sums to one.
class MarginalTable {
 public:
  MarginalTable() = default;
  /// Normalizes each (weight_false, weight_true) row. A row with zero total
  /// weight raises DegenerateModelError.
  static MarginalTable from_weights(std::span<const Marginal> weights);

  std::size_t size() const noexcept { return rows_.size(); }
  const Marginal& operator[](std::size_t i) const { return rows_.at(i); }
  double p_true(std::size_t i) const { return rows_.at(i).p_true; }
  std::span<const Marginal> rows() const noexcept { return rows_; }

 private:
  std::vector<Marginal> rows_;
};

/// Largest model the enumeration routines accept.
inline constexpr std::size_t kEnumerationLimit = 20;

/// Unnormalized product of all factor entries selected by `assignment`.
double joint_weight(const GraphicalModel& model, std::span<const std::uint8_t> assignment);

/// Z by enumeration over all 2^n assignments.
double partition_function(const GraphicalModel& model);

/// Posterior marginals by enumeration; the reference oracle for inference.
MarginalTable brute_force_marginals(const GraphicalModel& model);

// Plain-text dump, one record per line:
//   factloop-model 1
//   variables <n>
//   var <index> <atom|context> <source_id or ->
//   factors <m>
//   factor <arity> <scope...> <entries...>
// Entries are written with 17 significant digits, so dump -> parse is exact.
void write_model(std::ostream& out, const GraphicalModel& model);
std::string dump_model(const GraphicalModel& model);
GraphicalModel parse_model(std::istream& in);
GraphicalModel parse_model(const std::string& text);

}  // namespace factloop
