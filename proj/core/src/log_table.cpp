#include "log_table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "factloop/errors.hpp"

namespace factloop::detail {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// For each variable of `sub` (sorted), the bit it occupies in an index over
// `full` (sorted superset).
std::vector<unsigned> bit_positions(std::span<const std::size_t> full,
                                    std::span<const std::size_t> sub) {
  std::vector<unsigned> bits;
  bits.reserve(sub.size());
  for (std::size_t v : sub) {
    auto it = std::lower_bound(full.begin(), full.end(), v);
    const auto pos = static_cast<unsigned>(it - full.begin());
    bits.push_back(static_cast<unsigned>(full.size()) - 1u - pos);
  }
  return bits;
}

std::size_t project(std::size_t index, std::span<const unsigned> bits) {
  std::size_t out = 0;
  for (unsigned b : bits) out = (out << 1) | ((index >> b) & 1u);
  return out;
}

void check_arity(std::size_t arity) {
  if (arity > kMaxTableArity)
    throw SizeError("elimination table over " + std::to_string(arity) +
                    " variables exceeds the limit of " + std::to_string(kMaxTableArity));
}

}  // namespace

double log_sum_exp(double a, double b) noexcept {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

LogTable to_log_table(const Factor& factor) {
  LogTable t;
  auto scope = factor.scope();
  auto table = factor.table();
  if (scope.size() == 2 && scope[0] > scope[1]) {
    t.scope = {scope[1], scope[0]};
    // swap the roles of the two index bits
    t.values = {std::log(table[0]), std::log(table[2]), std::log(table[1]), std::log(table[3])};
  } else {
    t.scope.assign(scope.begin(), scope.end());
    for (double v : table) t.values.push_back(std::log(v));
  }
  return t;
}

LogTable product(std::span<const LogTable* const> tables) {
  LogTable out;
  for (const LogTable* t : tables) out.scope.insert(out.scope.end(), t->scope.begin(), t->scope.end());
  std::sort(out.scope.begin(), out.scope.end());
  out.scope.erase(std::unique(out.scope.begin(), out.scope.end()), out.scope.end());
  check_arity(out.scope.size());

  std::vector<std::vector<unsigned>> bits;
  bits.reserve(tables.size());
  for (const LogTable* t : tables) bits.push_back(bit_positions(out.scope, t->scope));

  const std::size_t count = std::size_t{1} << out.scope.size();
  out.values.assign(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    double acc = 0.0;
    for (std::size_t k = 0; k < tables.size(); ++k) {
      acc += tables[k]->values[project(i, bits[k])];
      if (acc == kNegInf) break;
    }
    out.values[i] = acc;
  }
  return out;
}

LogTable eliminate(const LogTable& table, std::size_t var, double weight) {
  auto it = std::lower_bound(table.scope.begin(), table.scope.end(), var);
  if (it == table.scope.end() || *it != var)
    throw ContractViolation("eliminated variable is not in the table scope");
  const auto pos = static_cast<std::size_t>(it - table.scope.begin());
  const unsigned bit = static_cast<unsigned>(table.scope.size() - 1 - pos);

  LogTable out;
  out.scope = table.scope;
  out.scope.erase(out.scope.begin() + static_cast<std::ptrdiff_t>(pos));
  const std::size_t count = std::size_t{1} << out.scope.size();
  out.values.resize(count);
  const std::size_t low_mask = (std::size_t{1} << bit) - 1;
  for (std::size_t j = 0; j < count; ++j) {
    const std::size_t base = ((j & ~low_mask) << 1) | (j & low_mask);
    const double a = table.values[base];
    const double b = table.values[base | (std::size_t{1} << bit)];
    if (weight == 1.0) {
      out.values[j] = log_sum_exp(a, b);
    } else {
      out.values[j] = weight * log_sum_exp(a / weight, b / weight);
    }
  }
  return out;
}

LogTable marginalize_to(const LogTable& table, std::span<const std::size_t> keep) {
  LogTable out;
  out.scope.assign(keep.begin(), keep.end());
  const auto bits = bit_positions(table.scope, out.scope);
  out.values.assign(std::size_t{1} << out.scope.size(), kNegInf);
  for (std::size_t i = 0; i < table.values.size(); ++i) {
    double& slot = out.values[project(i, bits)];
    slot = log_sum_exp(slot, table.values[i]);
  }
  return out;
}

}  // namespace factloop::detail
