// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factloop/inference.hpp"
#include "factloop/model_builder.hpp"
#include "metric_properties.hpp"
#include "prompt_golden.hpp"
#include "random_models.hpp"
#include "replay_run.hpp"
#include "scripted_world.hpp"
#include "test_paths.hpp"

using namespace factloop;
using namespace factloop::testing;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double max_diff(const MarginalTable& a, const MarginalTable& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a.p_true(i) - b.p_true(i)));
  return d;
}

Outcome inference_oracle() {
  Rng rng(1001);
  const auto t0 = Clock::now();
  double worst = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t n = 1 + static_cast<std::size_t>(i % 12);
    const auto m = random_relation_model(rng, n, n + static_cast<std::size_t>(i % 7));
    worst = std::max(worst, max_diff(exact_marginals(m, min_fill_order(m)), brute_force_marginals(m)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 10.0, fmt("200 models, max |diff| %.2e, %.2f s", worst, secs)};
}

Outcome wmb_exactness() {
  Rng rng(1002);
  double worst = 0;
  std::size_t split = 0, widest = 0;
  for (int i = 0; i < 100; ++i) {
    const auto m = random_bounded_width_model(rng, 10 + static_cast<std::size_t>(i % 7),
                                              18 + static_cast<std::size_t>(i % 13), 5);
    const auto order = min_fill_order(m);
    widest = std::max(widest, induced_width(m, order));
    InferenceConfig c;
    c.ibound = 6;
    const auto r = run_inference(m, order, c);
    split += r.split_buckets;
    worst = std::max(worst, max_diff(r.marginals, exact_marginals(m, order)));
  }
  return {worst <= 1e-9 && split == 0 && widest <= 5,
          fmt("100 models, widest %zu, split buckets %zu, max |diff| %.2e", widest, split, worst)};
}

Outcome closed_forms() {
  const AtomRecord atoms[] = {{"a1", "claim", "", Label::Unlabeled, {}}};
  ContextRecord c;
  c.id = "c1";
  c.link = "https://facts.example/x";
  c.snippet = "evidence";
  const ContextRecord ctx[] = {c};
  double q[2];
  for (int k = 0; k < 2; ++k) {
    const RelationRecord rel[] = {{"c1", "a1", k == 0 ? RelationKind::Entail : RelationKind::Contradict, 0.9}};
    const auto model = build_model(atoms, ctx, rel, PriorConfig{});
    InferenceConfig ic;
    q[k] = run_inference(model.graph, min_fill_order(model.graph), ic).marginals.p_true(0);
  }
  return {std::fabs(q[0] - 0.896) <= 1e-9 && std::fabs(q[1] - 0.104) <= 1e-9,
          fmt("entail %.12f, contradict %.12f", q[0], q[1])};
}

Outcome inference_speed() {
  Rng rng(1004);
  std::vector<double> times;
  for (int i = 0; i < 50; ++i) {
    const auto m = random_relation_model(rng, 25, 40);
    InferenceConfig c;
    c.ibound = 6;
    const auto t0 = Clock::now();
    const auto r = run_inference(m, min_fill_order(m), c);
    times.push_back(seconds_since(t0));
    if (r.marginals.size() != 25) return {false, "wrong marginal count"};
  }
  std::sort(times.begin(), times.end());
  const double median = (times[24] + times[25]) / 2, worst = times.back();
  return {median < 0.05 && worst < 0.5, fmt("50 models, median %.4f s, max %.4f s", median, worst)};
}

Outcome metric_properties() {
  const auto failures = check_metric_properties(20261016, 10000);
  std::string detail = "10000 cases";
  if (!failures.empty()) detail += ", " + std::to_string(failures.size()) + " failures, first: " + failures[0];
  return {failures.empty(), detail};
}

Outcome correction_contract() {
  const auto data = fixture_dir() / "replay" / "dataset.jsonl";
  const auto a = scratch_dir("accept-a"), b = scratch_dir("accept-b");
  const auto ra = run_replay(replay_manifest(data, a, 1));
  run_replay(replay_manifest(data, b, 3));
  const std::size_t max_iter = fixture_config().max_iterations;
  std::size_t traces = 0, violations = 0;
  std::istringstream lines(read_file(a / "traces.jsonl"));
  for (std::string line; std::getline(lines, line);) {
    const auto t = nlohmann::json::parse(line);
    ++traces;
    const auto& it = t["iterations"];
    if (it.size() < 1 || it.size() - 1 > max_iter || !it[0]["accepted"].get<bool>()) ++violations;
    double best = it[0]["report"]["precision"].get<double>();
    const double initial = best;
    for (std::size_t k = 1; k < it.size(); ++k) {
      const double p = it[k]["report"]["precision"].get<double>();
      if (it[k]["accepted"].get<bool>() != (p > best)) ++violations;
      if (it[k]["accepted"].get<bool>()) best = p;
    }
    if (best < initial) ++violations;
  }
  const bool identical = run_outputs(a) == run_outputs(b);
  return {ra.errors.empty() && traces >= 10 && violations == 0 && identical,
          fmt("%zu traces, %zu violations, re-run %s", traces, violations, identical ? "identical" : "differs")};
}

Outcome prompt_fidelity() {
  const auto dir = golden_dir() / "prompts";
  const auto rendered = render_golden_inputs(PromptSet::embedded(), dir);
  std::size_t mismatched = 0;
  std::string which;
  for (const auto& [name, text] : rendered) {
    if (text != read_file(dir / (name + ".rendered.txt"))) {
      ++mismatched;
      which += " " + name;
    }
  }
  // The embedded copies must also be the asset bytes.
  const auto from_disk = PromptSet::from_directory(prompt_dir());
  for (PromptId id : {PromptId::Llm1, PromptId::Llm2, PromptId::Refine, PromptId::Judge, PromptId::Veli5}) {
    if (from_disk.get(id) != PromptSet::embedded().get(id)) {
      ++mismatched;
      which += " embedded:" + std::string(prompt_name(id));
    }
  }
  return {mismatched == 0 && rendered.size() == 10,
          fmt("%zu renders, %zu mismatches%s", rendered.size(), mismatched, which.c_str())};
}

Outcome replay_smoke() {
  const auto out = scratch_dir("accept-smoke");
  const auto r = run_replay(replay_manifest(fixture_dir() / "replay" / "dataset.jsonl", out, 2));
  const bool same = read_file(out / "summary.json") == read_file(golden_dir() / "replay_summary.json");
  const auto& all = r.summary.rows.at(0);
  return {same && r.errors.empty(),
          fmt("summary %s golden; precision %.4f -> %.4f over %zu records (live-model headline numbers are not "
              "reproduced offline)",
              same ? "matches" : "differs from", all.response.precision.mean,
              all.correction ? all.correction->precision.mean : 0.0, r.summary.records)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"inference oracle equivalence", inference_oracle},
      {"wmb exact at ibound 6 for width <= 5", wmb_exactness},
      {"closed-form posteriors", closed_forms},
      {"inference speed, 25 vars / 40 factors", inference_speed},
      {"metric property suite", metric_properties},
      {"correction loop contract on replay fixtures", correction_contract},
      {"prompt fidelity", prompt_fidelity},
      {"replay smoke test against golden summary", replay_smoke},
  };
  int failed = 0, n = 0;
  for (const auto& [name, check] : criteria) {
    ++n;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    failed += !o.pass;
  }
  std::fflush(stdout);
  return failed == 0 ? 0 : 1;
}
