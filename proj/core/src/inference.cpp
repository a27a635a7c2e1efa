#include "factloop/inference.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>

#include "factloop/errors.hpp"
#include "log_table.hpp"

namespace factloop {

using detail::LogTable;

void EliminationOrder::validate(const GraphicalModel& model) const {
  const std::size_t n = model.num_variables();
  if (order_.size() != n) throw ContractViolation("elimination order does not cover the model");
  std::vector<bool> seen(n, false);
  for (std::size_t v : order_) {
    if (v >= n || seen[v]) throw ContractViolation("elimination order is not a permutation");
    seen[v] = true;
  }
}

namespace {

using Adjacency = std::vector<std::vector<char>>;

Adjacency adjacency_matrix(const GraphicalModel& model) {
  const std::size_t n = model.num_variables();
  Adjacency adj(n, std::vector<char>(n, 0));
  for (const Factor& f : model.factors()) {
    auto s = f.scope();
    if (s.size() == 2) adj[s[0]][s[1]] = adj[s[1]][s[0]] = 1;
  }
  return adj;
}

std::vector<std::size_t> live_neighbours(const Adjacency& adj, const std::vector<char>& gone,
                                         std::size_t v) {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < adj.size(); ++u)
    if (u != v && !gone[u] && adj[v][u]) out.push_back(u);
  return out;
}

void connect_all(Adjacency& adj, const std::vector<std::size_t>& nodes) {
  for (std::size_t a : nodes)
    for (std::size_t b : nodes)
      if (a != b) adj[a][b] = 1;
}

}  // namespace

EliminationOrder min_fill_order(const GraphicalModel& model) {
  const std::size_t n = model.num_variables();
  Adjacency adj = adjacency_matrix(model);
  std::vector<char> gone(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    for (std::size_t v = 0; v < n; ++v) {
      if (gone[v]) continue;
      const auto nb = live_neighbours(adj, gone, v);
      std::size_t fill = 0;
      for (std::size_t i = 0; i < nb.size() && fill < best_fill; ++i)
        for (std::size_t j = i + 1; j < nb.size(); ++j)
          if (!adj[nb[i]][nb[j]]) ++fill;
      if (fill < best_fill) {
        best_fill = fill;
        best = v;
        if (fill == 0) break;  // ascending scan: first zero-fill variable wins ties
      }
    }
    connect_all(adj, live_neighbours(adj, gone, best));
    gone[best] = 1;
    order.push_back(best);
  }
  return EliminationOrder(std::move(order));
}

std::size_t induced_width(const GraphicalModel& model, const EliminationOrder& order) {
  order.validate(model);
  Adjacency adj = adjacency_matrix(model);
  std::vector<char> gone(model.num_variables(), 0);
  std::size_t width = 0;
  for (std::size_t v : order.sequence()) {
    const auto nb = live_neighbours(adj, gone, v);
    width = std::max(width, nb.size());
    connect_all(adj, nb);
    gone[v] = 1;
  }
  return width;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct MiniBucket {
  std::size_t var = 0;
  double weight = 1.0;
  std::vector<std::size_t> scope;          // union of member scopes, sorted
  std::vector<const LogTable*> originals;  // model factors placed here
  std::vector<std::size_t> children;       // ids of messages received
  std::optional<std::size_t> parent_message;  // message this mini-bucket sent upward
};

struct Message {
  std::size_t from = 0;  // sending mini-bucket
  std::size_t to = 0;    // receiving mini-bucket
  LogTable table;
};

// Bucket-placed item awaiting partitioning: an original table or a message.
struct Item {
  const LogTable* table = nullptr;
  std::optional<std::size_t> message;
};

bool item_precedes(const Item& a, const Item& b) {
  if (a.table->arity() != b.table->arity()) return a.table->arity() > b.table->arity();
  if (a.table->scope != b.table->scope) return a.table->scope < b.table->scope;
  // originals before messages, then by message id; both are deterministic
  if (a.message.has_value() != b.message.has_value()) return !a.message.has_value();
  if (a.message && b.message) return *a.message < *b.message;
  return a.table->values < b.table->values;
}

std::vector<std::size_t> union_scope(const std::vector<std::size_t>& a,
                                     const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Merges model factors with identical scope so the result does not depend on
// factor insertion order.
std::vector<LogTable> canonical_tables(const GraphicalModel& model) {
  std::map<std::vector<std::size_t>, std::vector<LogTable>> by_scope;
  for (const Factor& f : model.factors()) {
    LogTable t = detail::to_log_table(f);
    by_scope[t.scope].push_back(std::move(t));
  }
  std::vector<LogTable> out;
  for (auto& [scope, group] : by_scope) {
    if (group.size() == 1) {
      out.push_back(std::move(group.front()));
      continue;
    }
    std::sort(group.begin(), group.end(),
              [](const LogTable& a, const LogTable& b) { return a.values < b.values; });
    std::vector<const LogTable*> ptrs;
    for (const auto& t : group) ptrs.push_back(&t);
    out.push_back(detail::product(ptrs));
  }
  return out;
}

class BucketEngine {
 public:
  BucketEngine(const GraphicalModel& model, const EliminationOrder& order, std::size_t ibound)
      : model_(model), order_(order), ibound_(ibound) {}

  InferenceResult run() {
    upward();
    if (log_bound_ == kNegInf) throw DegenerateModelError("partition function is zero");
    downward();
    return InferenceResult{beliefs(), log_bound_, max_cluster_, split_buckets_};
  }

 private:
  void upward() {
    const std::size_t n = model_.num_variables();
    std::vector<std::size_t> position(n);
    auto seq = order_.sequence();
    for (std::size_t i = 0; i < n; ++i) position[seq[i]] = i;
    auto earliest = [&](const std::vector<std::size_t>& scope) {
      return *std::min_element(scope.begin(), scope.end(), [&](std::size_t a, std::size_t b) {
        return position[a] < position[b];
      });
    };

    originals_ = canonical_tables(model_);
    pending_.assign(n, {});
    for (const LogTable& t : originals_) pending_[earliest(t.scope)].push_back(Item{&t, {}});

    bucket_members_.assign(n, {});

    for (std::size_t var : seq) {
      std::vector<Item>& items = pending_[var];
      std::sort(items.begin(), items.end(), item_precedes);

      std::vector<std::size_t> created;
      for (const Item& item : items) {
        std::size_t target = minibuckets_.size();
        for (std::size_t id : created) {
          if (union_scope(minibuckets_[id].scope, item.table->scope).size() <= ibound_) {
            target = id;
            break;
          }
        }
        if (target == minibuckets_.size()) {
          MiniBucket mb;
          mb.var = var;
          minibuckets_.push_back(std::move(mb));
          created.push_back(target);
        }
        MiniBucket& mb = minibuckets_[target];
        mb.scope = union_scope(mb.scope, item.table->scope);
        if (item.message) {
          mb.children.push_back(*item.message);
          messages_[*item.message].to = target;
        } else {
          mb.originals.push_back(item.table);
        }
      }
      if (created.size() > 1) ++split_buckets_;
      bucket_members_[var] = created;
      if (created.empty()) log_bound_ += std::log(2.0);  // factor-free variable

      const double weight = created.empty() ? 1.0 : 1.0 / static_cast<double>(created.size());
      for (std::size_t id : created) {
        MiniBucket& mb = minibuckets_[id];
        mb.weight = weight;
        max_cluster_ = std::max(max_cluster_, mb.scope.size());
        LogTable local = combine(id, std::nullopt, /*with_down=*/false);
        LogTable lambda = detail::eliminate(local, var, weight);
        if (lambda.scope.empty()) {
          log_bound_ += lambda.values[0];
          continue;
        }
        const std::size_t msg_id = messages_.size();
        const std::size_t dest = earliest(lambda.scope);
        messages_.push_back(Message{id, 0, std::move(lambda)});
        mb.parent_message = msg_id;
        pending_[dest].push_back(Item{&messages_[msg_id].table, msg_id});
      }
    }
  }

  // Product of a mini-bucket's originals and received messages, optionally
  // leaving one child message out and optionally including the downward
  // message into it.
  LogTable combine(std::size_t id, std::optional<std::size_t> skip_message, bool with_down) const {
    const MiniBucket& mb = minibuckets_[id];
    std::vector<const LogTable*> parts(mb.originals.begin(), mb.originals.end());
    for (std::size_t m : mb.children)
      if (!skip_message || m != *skip_message) parts.push_back(&messages_[m].table);
    if (with_down && down_[id]) parts.push_back(&*down_[id]);
    LogTable local = detail::product(parts);
    // A skipped child may carry the only reference to some scope variable;
    // the caller marginalizes to a subset of what remains.
    return local;
  }

  void downward() {
    down_.assign(minibuckets_.size(), std::nullopt);
    // Parents are always created after their children.
    for (std::size_t id = minibuckets_.size(); id-- > 0;) {
      for (std::size_t m : minibuckets_[id].children) {
        const Message& msg = messages_[m];
        LogTable local = combine(id, m, /*with_down=*/true);
        // Separator variables absent from the remaining product are
        // uninformative there: pad them back in with zero log-weight.
        std::vector<const LogTable*> parts{&local};
        LogTable pad;
        std::vector<std::size_t> missing;
        std::set_difference(msg.table.scope.begin(), msg.table.scope.end(), local.scope.begin(),
                            local.scope.end(), std::back_inserter(missing));
        if (!missing.empty()) {
          pad.scope = missing;
          pad.values.assign(std::size_t{1} << missing.size(), 0.0);
          parts.push_back(&pad);
        }
        LogTable full = missing.empty() ? std::move(local) : detail::product(parts);
        down_[msg.from] = detail::marginalize_to(full, msg.table.scope);
      }
    }
  }

  MarginalTable beliefs() const {
    std::vector<Marginal> rows(model_.num_variables(), Marginal{0.5, 0.5});
    for (std::size_t var = 0; var < rows.size(); ++var) {
      const auto& members = bucket_members_[var];
      if (members.empty()) continue;
      double p_false = 0.0, p_true = 0.0;
      for (std::size_t id : members) {
        LogTable local = combine(id, std::nullopt, /*with_down=*/true);
        const std::size_t keep[] = {var};
        LogTable b = detail::marginalize_to(local, keep);
        const double lz = detail::log_sum_exp(b.values[0], b.values[1]);
        if (lz == kNegInf) throw DegenerateModelError("variable belief has zero mass");
        const double w = minibuckets_[id].weight;
        p_false += w * std::exp(b.values[0] - lz);
        p_true += w * std::exp(b.values[1] - lz);
      }
      rows[var] = Marginal{p_false, p_true};
    }
    return MarginalTable::from_weights(rows);
  }

  const GraphicalModel& model_;
  const EliminationOrder& order_;
  std::size_t ibound_;

  std::vector<LogTable> originals_;
  std::vector<std::vector<Item>> pending_;
  std::vector<MiniBucket> minibuckets_;
  std::deque<Message> messages_;  // stable addresses; items point into it
  std::vector<std::vector<std::size_t>> bucket_members_;
  std::vector<std::optional<LogTable>> down_;
  double log_bound_ = 0.0;
  std::size_t max_cluster_ = 0;
  std::size_t split_buckets_ = 0;
};

}  // namespace

InferenceResult run_inference(const GraphicalModel& model, const EliminationOrder& order,
                              const InferenceConfig& config) {
  order.validate(model);
  if (config.ibound < 1) throw ContractViolation("ibound must be at least 1");
  const std::size_t ibound = config.mode == InferenceMode::Exact
                                 ? std::numeric_limits<std::size_t>::max()
                                 : config.ibound;
  return BucketEngine(model, order, ibound).run();
}

MarginalTable exact_marginals(const GraphicalModel& model, const EliminationOrder& order) {
  return run_inference(model, order, InferenceConfig{1, InferenceMode::Exact}).marginals;
}

MarginalTable wmb_marginals(const GraphicalModel& model, const EliminationOrder& order,
                            const InferenceConfig& config) {
  InferenceConfig c = config;
  c.mode = InferenceMode::WeightedMiniBucket;
  return run_inference(model, order, c).marginals;
}

}  // namespace factloop
