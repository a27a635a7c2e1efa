#include <doctest.h>

#include <cmath>

#include "factloop/errors.hpp"
#include "factloop/inference.hpp"
#include "factloop/model_builder.hpp"
#include "random_models.hpp"

using namespace factloop;

namespace {

AtomRecord atom(std::string id) { return AtomRecord{std::move(id), "text", "", Label::Unlabeled, {}}; }

ContextRecord context(std::string id, std::string link = "https://facts.example/x",
                      std::string snippet = "s", double prior = 0.99) {
  ContextRecord c;
  c.id = std::move(id);
  c.link = std::move(link);
  c.snippet = std::move(snippet);
  c.prior = prior;
  return c;
}

// Single context -> single atom, summed by hand over the four joint states.
double one_edge_oracle(double atom_prior, double ctx_prior, bool entail, double p) {
  double num = 0, den = 0;
  for (int c = 0; c < 2; ++c)
    for (int a = 0; a < 2; ++a) {
      double w = (a ? atom_prior : 1 - atom_prior) * (c ? ctx_prior : 1 - ctx_prior);
      if (c == 0) {
        w *= 0.5;
      } else {
        const double agree = entail ? p : 1 - p;
        w *= a ? agree : 1 - agree;
      }
      den += w;
      if (a) num += w;
    }
  return num / den;
}

double atom_posterior(const ReasonerModel& m, std::size_t atom_index = 0) {
  return brute_force_marginals(m.graph).p_true(atom_index);
}

}  // namespace

TEST_CASE("factor tables") {
  CHECK(entailment_table(1.0) == std::array<double, 4>{0.5, 0.5, 0.0, 1.0});
  CHECK(contradiction_table(1.0) == std::array<double, 4>{0.5, 0.5, 1.0, 0.0});
  CHECK(entailment_table(0.5) == std::array<double, 4>{0.5, 0.5, 0.5, 0.5});
  CHECK(contradiction_table(0.5) == std::array<double, 4>{0.5, 0.5, 0.5, 0.5});
  CHECK_THROWS_AS(entailment_table(0.0), ContractViolation);
  CHECK_THROWS_AS(contradiction_table(1.0001), ContractViolation);
  CHECK_THROWS_AS(entailment_factor(0, 1, NAN), ContractViolation);
}

TEST_CASE("closed forms for a single entailing or contradicting context") {
  const double q_ent = one_edge_oracle(0.5, 0.99, true, 0.9);
  const double q_con = one_edge_oracle(0.5, 0.99, false, 0.9);
  CHECK(q_ent == doctest::Approx(0.896).epsilon(1e-12));
  CHECK(q_con == doctest::Approx(0.104).epsilon(1e-12));

  const AtomRecord atoms[] = {atom("a1")};
  const ContextRecord ctx[] = {context("c1")};
  for (bool entail : {true, false}) {
    const RelationRecord rel[] = {{"c1", "a1", entail ? RelationKind::Entail : RelationKind::Contradict, 0.9}};
    const auto m = build_model(atoms, ctx, rel, PriorConfig{});
    const double q = atom_posterior(m);
    CHECK(q == doctest::Approx(entail ? q_ent : q_con).epsilon(1e-12));
    const auto labeled = label_atoms(brute_force_marginals(m.graph), m.graph, {atoms[0]});
    CHECK(labeled[0].label == (entail ? Label::True : Label::False));
    CHECK(*labeled[0].posterior == doctest::Approx(q));
  }
}

TEST_CASE("prior-only and neutral-only models") {
  const AtomRecord atoms[] = {atom("a1")};
  const auto bare = build_model(atoms, {}, {}, PriorConfig{});
  CHECK(bare.graph.num_variables() == 1);
  CHECK(bare.graph.factors().size() == 1);
  CHECK(atom_posterior(bare) == 0.5);

  const ContextRecord ctx[] = {context("c1")};
  const RelationRecord rel[] = {{"c1", "a1", RelationKind::Neutral, 0.8}};
  const auto neutral = build_model(atoms, ctx, rel, PriorConfig{});
  CHECK(neutral.graph.factors().size() == 2);
  CHECK(neutral.edges.empty());
  const auto labeled = label_atoms(brute_force_marginals(neutral.graph), neutral.graph, {atoms[0]});
  CHECK(labeled[0].label == Label::Unverified);
  CHECK(*labeled[0].posterior == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("five atoms and eight contexts with nineteen relations") {
  std::vector<AtomRecord> atoms;
  std::vector<ContextRecord> ctx;
  for (int i = 1; i <= 5; ++i) atoms.push_back(atom("a" + std::to_string(i)));
  for (int j = 1; j <= 8; ++j)
    ctx.push_back(context("c" + std::to_string(j), "https://facts.example/" + std::to_string(j)));
  std::vector<RelationRecord> rel;
  for (int j = 1; j <= 8; ++j)
    for (int i = 1; i <= 5 && rel.size() < 19; ++i)
      rel.push_back({"c" + std::to_string(j), "a" + std::to_string(i),
                     (i + j) % 3 ? RelationKind::Entail : RelationKind::Contradict, 0.8});
  REQUIRE(rel.size() == 19);
  const auto m = build_model(atoms, ctx, rel, PriorConfig{});
  CHECK(m.graph.num_variables() == 13);
  std::size_t unary = 0, binary = 0;
  for (const auto& f : m.graph.factors()) (f.arity() == 1 ? unary : binary) += 1;
  CHECK(unary == 13);
  CHECK(binary == 19);
  CHECK(m.edges.size() == 19);
  for (const auto& f : m.graph.factors())
    if (f.arity() == 2) CHECK(m.graph.variables()[f.scope()[0]].kind == VariableKind::Context);
}

TEST_CASE("relation errors") {
  const AtomRecord atoms[] = {atom("a1"), atom("a2")};
  const ContextRecord ctx[] = {context("c1")};
  auto build = [&](RelationRecord r) {
    const RelationRecord rel[] = {r};
    return build_model(atoms, ctx, rel, PriorConfig{});
  };
  CHECK_THROWS_AS(build({"c9", "a1", RelationKind::Entail, 0.9}), ReferenceError);
  CHECK_THROWS_AS(build({"c1", "a9", RelationKind::Entail, 0.9}), ReferenceError);
  CHECK_THROWS_AS(build({"a1", "a2", RelationKind::Entail, 0.9}), ReferenceError);
  CHECK_THROWS_AS(build({"c1", "c1", RelationKind::Contradict, 0.9}), ContractViolation);
  CHECK_THROWS_AS(build({"c1", "a1", RelationKind::Entail, 0.0}), ContractViolation);
  CHECK_THROWS_AS(build({"c1", "a9", RelationKind::Neutral, 0.9}), ReferenceError);
}

TEST_CASE("input validation") {
  const AtomRecord dup[] = {atom("a1"), atom("a1")};
  CHECK_THROWS_AS(build_model(dup, {}, {}, PriorConfig{}), ContractViolation);
  const AtomRecord atoms[] = {atom("a1")};
  const ContextRecord bad_prior[] = {context("c1", "l", "s", 1.0)};
  CHECK_THROWS_AS(build_model(atoms, bad_prior, {}, PriorConfig{}), ContractViolation);
  ContextRecord big = context("c1");
  big.body.assign(kMaxContextBody + 1, 'x');
  const ContextRecord too_long[] = {big};
  CHECK_THROWS_AS(build_model(atoms, too_long, {}, PriorConfig{}), ContractViolation);
  PriorConfig p;
  p.atom_prior = 1.0;
  CHECK_THROWS_AS(build_model(atoms, {}, {}, p), ContractViolation);
}

TEST_CASE("duplicate contexts merge and their relations follow the kept id") {
  const AtomRecord atoms[] = {atom("a1")};
  const ContextRecord ctx[] = {context("c1", "https://x.example/a", "same"),
                               context("c2", "https://x.example/a", "same"),
                               context("c3", "https://x.example/a", "other")};
  std::vector<std::pair<std::string, std::string>> aliases;
  const auto kept = dedupe_contexts(ctx, &aliases);
  REQUIRE(kept.size() == 2);
  CHECK(kept[1].id == "c3");
  CHECK(aliases == std::vector<std::pair<std::string, std::string>>{{"c2", "c1"}});

  const RelationRecord rel[] = {{"c1", "a1", RelationKind::Entail, 0.9},
                                {"c2", "a1", RelationKind::Entail, 0.9}};
  const auto m = build_model(atoms, ctx, rel, PriorConfig{});
  CHECK(m.graph.num_variables() == 3);
  CHECK(m.edges.size() == 1);
  CHECK(atom_posterior(m) == doctest::Approx(0.896).epsilon(1e-12));
}

TEST_CASE("unreliable hosts get the lower prior") {
  PriorConfig p;
  p.unreliable_hosts = {"Forum.example"};
  CHECK(p.context_prior("https://forum.example/t/1") == 0.7);
  CHECK(p.context_prior("https://www.forum.example/t/1") == 0.7);
  CHECK(p.context_prior("https://notforum.example/t/1") == 0.99);
  CHECK(p.context_prior("https://facts.example/") == 0.99);
}

TEST_CASE("labels use the tie tolerance") {
  CHECK(label_for(0.896) == Label::True);
  CHECK(label_for(0.104) == Label::False);
  CHECK(label_for(0.5) == Label::Unverified);
  CHECK(label_for(0.5 + 5e-10) == Label::Unverified);
  CHECK(label_for(0.5 + 2e-9) == Label::True);
  CHECK(parse_label(label_name(Label::Unverified)) == Label::Unverified);
  CHECK(parse_relation(relation_name(RelationKind::Contradict)) == RelationKind::Contradict);
  CHECK_THROWS_AS(parse_label("maybe"), ContractViolation);

  const AtomRecord atoms[] = {atom("a1")};
  const auto m = build_model(atoms, {}, {}, PriorConfig{});
  CHECK_THROWS_AS(label_atoms(brute_force_marginals(m.graph), m.graph, {atom("zz")}), ContractViolation);
}

// Property tests over random single-atom neighbourhoods.

TEST_CASE("property: flipping entail to contradict maps q to 1-q") {
  testing::Rng rng(404);
  for (int rep = 0; rep < 500; ++rep) {
    const double p = testing::open_uniform(rng) * 0.999 + 0.001;
    const double prior = testing::open_uniform(rng);
    const AtomRecord atoms[] = {atom("a1")};
    const ContextRecord ctx[] = {context("c1", "l", "s", prior)};
    const RelationRecord e[] = {{"c1", "a1", RelationKind::Entail, p}};
    const RelationRecord c[] = {{"c1", "a1", RelationKind::Contradict, p}};
    const double qe = atom_posterior(build_model(atoms, ctx, e, PriorConfig{}));
    const double qc = atom_posterior(build_model(atoms, ctx, c, PriorConfig{}));
    CHECK(qe + qc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(qe == doctest::Approx(one_edge_oracle(0.5, prior, true, p)).epsilon(1e-12));
  }
}

TEST_CASE("property: a second identical entailing context raises the posterior") {
  testing::Rng rng(405);
  for (int rep = 0; rep < 500; ++rep) {
    const double p = 0.5 + 0.5 * testing::open_uniform(rng);
    const double prior = testing::open_uniform(rng);
    const AtomRecord atoms[] = {atom("a1")};
    const ContextRecord one[] = {context("c1", "l1", "s", prior)};
    const ContextRecord two[] = {context("c1", "l1", "s", prior), context("c2", "l2", "s", prior)};
    const RelationRecord r1[] = {{"c1", "a1", RelationKind::Entail, p}};
    const RelationRecord r2[] = {{"c1", "a1", RelationKind::Entail, p}, {"c2", "a1", RelationKind::Entail, p}};
    CHECK(atom_posterior(build_model(atoms, two, r2, PriorConfig{})) >
          atom_posterior(build_model(atoms, one, r1, PriorConfig{})));
  }
}

TEST_CASE("property: isolated atoms stay unverified and labels survive factor rescaling") {
  testing::Rng rng(406);
  std::uniform_int_distribution<int> coin(0, 2);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<AtomRecord> atoms;
    std::vector<ContextRecord> ctx;
    std::vector<RelationRecord> rel;
    for (int i = 0; i < 4; ++i) atoms.push_back(atom("a" + std::to_string(i)));
    for (int j = 0; j < 3; ++j)
      ctx.push_back(context("c" + std::to_string(j), "l" + std::to_string(j), "s", testing::open_uniform(rng)));
    // Atom a3 never receives an edge.
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < 3; ++i)
        if (int k = coin(rng); k > 0)
          rel.push_back({ctx[j].id, atoms[i].id, k == 1 ? RelationKind::Entail : RelationKind::Contradict,
                         testing::open_uniform(rng)});
    const auto m = build_model(atoms, ctx, rel, PriorConfig{});
    const auto labeled = label_atoms(brute_force_marginals(m.graph), m.graph, atoms);
    CHECK(labeled[3].label == Label::Unverified);
    CHECK(*labeled[3].posterior == doctest::Approx(0.5).epsilon(1e-15));

    std::vector<Factor> scaled;
    for (const auto& f : m.graph.factors()) {
      std::vector<double> t(f.table().begin(), f.table().end());
      const double s = 0.1 + 10 * testing::open_uniform(rng);
      for (double& x : t) x *= s;
      scaled.emplace_back(std::vector<std::size_t>(f.scope().begin(), f.scope().end()), std::move(t));
    }
    const GraphicalModel g2(std::vector<VariableId>(m.graph.variables().begin(), m.graph.variables().end()),
                            std::move(scaled));
    const auto relabeled = label_atoms(brute_force_marginals(g2), g2, atoms);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      CHECK(relabeled[i].label == labeled[i].label);
      CHECK(*relabeled[i].posterior == doctest::Approx(*labeled[i].posterior).epsilon(1e-12));
    }
  }
}
