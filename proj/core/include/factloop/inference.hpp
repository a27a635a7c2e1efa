#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "factloop/factor_graph.hpp"

namespace factloop {

/// A permutation of a model's variable indices.
class EliminationOrder {
 public:
  EliminationOrder() = default;
  explicit EliminationOrder(std::vector<std::size_t> order) : order_(std::move(order)) {}

  std::span<const std::size_t> sequence() const noexcept { return order_; }
  std::size_t size() const noexcept { return order_.size(); }

  /// Throws ContractViolation unless this is a permutation of 0..n-1 for
  /// the model's n variables.
  void validate(const GraphicalModel& model) const;

 private:
  std::vector<std::size_t> order_;
};

enum class InferenceMode { Exact, WeightedMiniBucket };

struct InferenceConfig {
  std::size_t ibound = 6;  // max variables per mini-bucket, eliminated variable included
  InferenceMode mode = InferenceMode::WeightedMiniBucket;
};

struct InferenceResult {
  MarginalTable marginals;
  /// log Z for exact elimination; log of the weighted mini-bucket upper bound otherwise.
  double log_partition = 0.0;
  /// Largest mini-bucket scope that was formed.
  std::size_t max_cluster_size = 0;
  /// Number of buckets that had to be split into more than one mini-bucket.
  std::size_t split_buckets = 0;
};

/// Greedy min-fill ordering on the primal graph; ties go to the smallest
/// variable index.
EliminationOrder min_fill_order(const GraphicalModel& model);

/// Induced width of the primal graph along `order`.
std::size_t induced_width(const GraphicalModel& model, const EliminationOrder& order);

/// Bucket elimination with a downward pass over the bucket tree; exact.
/// Throws DegenerateModelError when Z = 0.
MarginalTable exact_marginals(const GraphicalModel& model, const EliminationOrder& order);

/// Weighted mini-bucket estimates of the posterior marginals. Equals
/// exact_marginals whenever config.ibound >= induced_width(model, order) + 1.
MarginalTable wmb_marginals(const GraphicalModel& model, const EliminationOrder& order,
                            const InferenceConfig& config);

/// Dispatches on config.mode and also reports log Z (or its bound).
InferenceResult run_inference(const GraphicalModel& model, const EliminationOrder& order,
                              const InferenceConfig& config);

}  // namespace factloop
