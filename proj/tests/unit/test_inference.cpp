#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "factloop/errors.hpp"
#include "factloop/inference.hpp"
#include "factloop/model_builder.hpp"
#include "random_models.hpp"

using namespace factloop;
using testing::Rng;

namespace {

std::vector<VariableId> vars(std::size_t n) {
  std::vector<VariableId> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back({i, VariableKind::Atom, "v" + std::to_string(i)});
  return v;
}

// Independent width oracle: eliminate along `order` on explicit edge sets.
std::size_t width_oracle(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                         const std::vector<std::size_t>& order) {
  std::vector<std::set<std::size_t>> adj(n);
  for (auto [a, b] : edges) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  std::vector<bool> gone(n, false);
  std::size_t width = 0;
  for (std::size_t v : order) {
    std::vector<std::size_t> nb;
    for (std::size_t u : adj[v])
      if (!gone[u]) nb.push_back(u);
    width = std::max(width, nb.size());
    for (std::size_t a : nb)
      for (std::size_t b : nb)
        if (a != b) adj[a].insert(b);
    gone[v] = true;
  }
  return width;
}

GraphicalModel from_edges(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<Factor> f;
  for (auto [a, b] : edges) f.push_back(Factor::binary(a, b, 1, 2, 3, 4));
  return GraphicalModel(vars(n), std::move(f));
}

void check_close(const MarginalTable& a, const MarginalTable& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::fabs(a.p_true(i) - b.p_true(i)) <= tol);
    CHECK(std::fabs(a[i].p_false - b[i].p_false) <= tol);
  }
}

}  // namespace

TEST_CASE("elimination order validation") {
  const auto m = from_edges(3, {{0, 1}});
  CHECK_NOTHROW(EliminationOrder({2, 0, 1}).validate(m));
  CHECK_THROWS_AS(EliminationOrder({0, 1}).validate(m), ContractViolation);
  CHECK_THROWS_AS(EliminationOrder({0, 1, 1}).validate(m), ContractViolation);
  CHECK_THROWS_AS(EliminationOrder({0, 1, 3}).validate(m), ContractViolation);
}

TEST_CASE("4-cycle: best width over all 24 orders is 2 and min-fill finds it") {
  const std::vector<std::pair<std::size_t, std::size_t>> cycle = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
  const auto m = from_edges(4, cycle);
  std::vector<std::size_t> perm = {0, 1, 2, 3};
  std::size_t best = 99;
  int count = 0;
  do {
    const std::size_t w = width_oracle(4, cycle, perm);
    CHECK(induced_width(m, EliminationOrder(perm)) == w);
    best = std::min(best, w);
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  CHECK(count == 24);
  CHECK(best == 2);
  CHECK(induced_width(m, min_fill_order(m)) == 2);
}

TEST_CASE("min-fill breaks ties by lowest index") {
  // Star: leaves 1 and 2 go first (zero fill, lowest index); then 0 and 3 tie.
  const auto m = from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto order = min_fill_order(m);
  const std::vector<std::size_t> seq(order.sequence().begin(), order.sequence().end());
  CHECK(seq == std::vector<std::size_t>{1, 2, 0, 3});
  CHECK(induced_width(m, order) == 1);
}

TEST_CASE("induced width agrees with the oracle on random graphs") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 3 + rep % 8;
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t e = 0; e < n + 2; ++e) {
      auto a = pick(rng), b = pick(rng);
      if (a != b) edges.emplace_back(a, b);
    }
    const auto m = from_edges(n, edges);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    CHECK(induced_width(m, EliminationOrder(order)) == width_oracle(n, edges, order));
    const auto mf = min_fill_order(m);
    CHECK(induced_width(m, mf) ==
          width_oracle(n, edges, std::vector<std::size_t>(mf.sequence().begin(), mf.sequence().end())));
  }
}

TEST_CASE("exact marginals equal brute force on random models under any order") {
  Rng rng(2024);
  for (int rep = 0; rep < 60; ++rep) {
    const std::size_t n = 1 + rep % 10;
    const auto m = rep % 2 ? testing::random_relation_model(rng, n, 2 * n)
                           : testing::random_positive_model(rng, n, n + 3);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    check_close(exact_marginals(m, EliminationOrder(order)), brute_force_marginals(m), 1e-10);
  }
}

TEST_CASE("exact log partition matches enumeration") {
  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = testing::random_positive_model(rng, 7, 9);
    InferenceConfig c;
    c.mode = InferenceMode::Exact;
    const auto r = run_inference(m, min_fill_order(m), c);
    CHECK(r.log_partition == doctest::Approx(std::log(partition_function(m))).epsilon(1e-12));
    CHECK(r.split_buckets == 0);
  }
}

TEST_CASE("variables without factors are uniform and count twice in Z") {
  GraphicalModel m(vars(3), {Factor::unary(0, 1, 3)});
  InferenceConfig c;
  c.mode = InferenceMode::Exact;
  const auto r = run_inference(m, min_fill_order(m), c);
  CHECK(r.marginals.p_true(0) == doctest::Approx(0.75));
  CHECK(r.marginals.p_true(1) == doctest::Approx(0.5));
  CHECK(r.log_partition == doctest::Approx(std::log(4.0 * 4.0)));
}

TEST_CASE("exact inference scales past the enumeration limit") {
  // A union of small components: each component's marginals are known by enumeration.
  Rng rng(99);
  std::vector<GraphicalModel> parts;
  GraphicalModel all;
  for (int k = 0; k < 6; ++k) {
    parts.push_back(testing::random_relation_model(rng, 6, 9));
    all = k == 0 ? parts.back() : all.disjoint_union(parts.back());
  }
  REQUIRE(all.num_variables() == 36);
  const auto exact = exact_marginals(all, min_fill_order(all));
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto bf = brute_force_marginals(p);
    for (std::size_t i = 0; i < p.num_variables(); ++i)
      CHECK(std::fabs(exact.p_true(offset + i) - bf.p_true(i)) <= 1e-10);
    offset += p.num_variables();
  }
}

TEST_CASE("zero partition function is degenerate") {
  GraphicalModel zero(vars(2), {Factor::binary(0, 1, 1, 0, 0, 0), Factor::binary(1, 0, 0, 0, 0, 1)});
  CHECK_THROWS_AS(exact_marginals(zero, min_fill_order(zero)), DegenerateModelError);
  InferenceConfig c;
  c.ibound = 1;
  CHECK_THROWS_AS(wmb_marginals(zero, min_fill_order(zero), c), DegenerateModelError);
}

TEST_CASE("wmb is exact when the i-bound covers the induced width") {
  Rng rng(31337);
  for (int rep = 0; rep < 40; ++rep) {
    const auto m = testing::random_relation_model(rng, 10, 14);
    const auto order = min_fill_order(m);
    InferenceConfig c;
    c.ibound = induced_width(m, order) + 1;
    const auto r = run_inference(m, order, c);
    CHECK(r.split_buckets == 0);
    CHECK(r.max_cluster_size <= c.ibound);
    check_close(r.marginals, exact_marginals(m, order), 1e-9);
  }
}

TEST_CASE("wmb with a small i-bound gives an upper bound on Z and valid marginals") {
  Rng rng(8);
  int split = 0;
  for (int rep = 0; rep < 40; ++rep) {
    const auto m = testing::random_positive_model(rng, 12, 30);
    const auto order = min_fill_order(m);
    InferenceConfig c;
    c.ibound = 2;
    const auto r = run_inference(m, order, c);
    CHECK(r.max_cluster_size <= 2);
    split += r.split_buckets > 0;
    CHECK(r.log_partition >= std::log(partition_function(m)) - 1e-9);
    for (const auto& row : r.marginals.rows()) {
      CHECK(row.p_true >= 0.0);
      CHECK(row.p_true <= 1.0);
      CHECK(row.p_true + row.p_false == doctest::Approx(1.0));
    }
  }
  CHECK(split > 0);
}

TEST_CASE("results do not depend on factor insertion order") {
  Rng rng(77);
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = testing::random_relation_model(rng, 11, 20);
    std::vector<Factor> shuffled(m.factors().begin(), m.factors().end());
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const GraphicalModel m2(std::vector<VariableId>(m.variables().begin(), m.variables().end()), shuffled);
    const auto order = min_fill_order(m);
    InferenceConfig c;
    c.ibound = 2;
    check_close(wmb_marginals(m, order, c), wmb_marginals(m2, order, c), 1e-9);
    check_close(exact_marginals(m, order), exact_marginals(m2, order), 1e-12);
  }
}

TEST_CASE("wmb rejects a zero i-bound") {
  const auto m = from_edges(2, {{0, 1}});
  InferenceConfig c;
  c.ibound = 0;
  CHECK_THROWS_AS(wmb_marginals(m, min_fill_order(m), c), ContractViolation);
}
