#pragma once

// Log-domain tables of arbitrary arity used by the elimination engines.
// Scopes are sorted ascending; the first scope variable is the most
// significant bit of the entry index (false = 0).

#include <cstddef>
#include <span>
#include <vector>

#include "factloop/factor_graph.hpp"

namespace factloop::detail {

struct LogTable {
  std::vector<std::size_t> scope;
  std::vector<double> values;

  std::size_t arity() const noexcept { return scope.size(); }
};

/// Largest scope a table may have before SizeError is raised.
inline constexpr std::size_t kMaxTableArity = 26;

double log_sum_exp(double a, double b) noexcept;

LogTable to_log_table(const Factor& factor);

/// Pointwise product (log-domain sum) over the union of scopes.
LogTable product(std::span<const LogTable* const> tables);

/// Power sum over `var`: weight * log sum_x exp(value / weight).
/// weight = 1 is an ordinary sum.
LogTable eliminate(const LogTable& table, std::size_t var, double weight);

/// Ordinary sum over every variable not in `keep` (keep must be a sorted
/// subset of table.scope).
LogTable marginalize_to(const LogTable& table, std::span<const std::size_t> keep);

}  // namespace factloop::detail
