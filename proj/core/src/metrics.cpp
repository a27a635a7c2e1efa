#include "factloop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "factloop/errors.hpp"
#include "factloop/llm_io.hpp"
#include "factloop/prompts.hpp"

namespace factloop {

std::size_t supported_count(std::span<const Label> labels) noexcept {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::True));
}

double precision(std::span<const Label> labels) {
  if (labels.empty()) throw ContractViolation("precision of zero atoms");
  return static_cast<double>(supported_count(labels)) / static_cast<double>(labels.size());
}

double recall_at_k(std::size_t supported, std::size_t k) {
  if (k == 0) throw ContractViolation("K must be positive");
  return std::min(static_cast<double>(supported) / static_cast<double>(k), 1.0);
}

double f1_at_k(double precision, double recall, std::size_t supported) {
  if (supported == 0) return 0.0;
  if (precision == recall) return precision;
  const double f = 2.0 * precision * recall / (precision + recall);
  // Rounding can push the harmonic mean a few ulps outside [min, max].
  return std::clamp(f, std::min(precision, recall), std::max(precision, recall));
}

std::size_t verifiability(const GraphicalModel& model, std::size_t num_atoms) {
  std::vector<char> touched(num_atoms, 0);
  for (const Factor& f : model.factors()) {
    if (f.arity() < 2) continue;
    for (std::size_t v : f.scope())
      if (v < num_atoms && model.variables()[v].kind == VariableKind::Atom) touched[v] = 1;
  }
  return static_cast<std::size_t>(std::count(touched.begin(), touched.end(), 1));
}

double comprehensiveness(std::size_t n_in, std::size_t n_out) {
  if (n_in + n_out == 0) throw ContractViolation("comprehensiveness of zero atoms");
  return static_cast<double>(n_in) / static_cast<double>(n_in + n_out);
}

double relative_gain(double s_response, double s_correction) {
  if (!(s_response >= 0.0) || !(s_correction >= 0.0))
    throw ContractViolation("relative gain needs non-negative scores");
  const double sum = s_correction + s_response;
  if (sum == 0.0) return 0.0;
  return std::clamp(2.0 * (s_correction - s_response) / sum, -2.0, 2.0);
}

GainReport relative_gains(const FactualityReport& r, const FactualityReport& c) {
  return GainReport{relative_gain(r.precision, c.precision),
                    relative_gain(r.recall_at_k, c.recall_at_k),
                    relative_gain(r.f1_at_k, c.f1_at_k),
                    relative_gain(static_cast<double>(r.verifiability),
                                  static_cast<double>(c.verifiability)),
                    relative_gain(r.comprehensiveness, c.comprehensiveness)};
}

FactualityReport with_k(FactualityReport report, std::size_t k) {
  report.k_used = k;
  report.recall_at_k = recall_at_k(report.supported, k);
  report.f1_at_k = f1_at_k(report.precision, report.recall_at_k, report.supported);
  return report;
}

FactualityReport make_report(std::span<const Label> labels, std::size_t verifiability,
                             std::size_t k) {
  if (labels.empty()) throw ContractViolation("report of zero atoms");
  if (verifiability > labels.size()) throw ContractViolation("verifiability exceeds atom count");
  FactualityReport r;
  r.n_atoms = labels.size();
  r.supported = supported_count(labels);
  r.precision = precision(labels);
  r.verifiability = verifiability;
  const auto n_out = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Unverified));
  r.comprehensiveness = comprehensiveness(labels.size() - n_out, n_out);
  return with_k(r, k == 0 ? labels.size() : k);
}

std::size_t median_k(std::span<const std::size_t> atom_counts) {
  if (atom_counts.empty()) throw ContractViolation("median of no atom counts");
  std::vector<std::size_t> v(atom_counts.begin(), atom_counts.end());
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  const std::size_t k = v.size() % 2 ? v[mid] : (v[mid - 1] + v[mid] + 1) / 2;
  return std::max<std::size_t>(k, 1);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double x : values) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

namespace {

template <class T, class Get>
MeanStd column(std::span<const T> rows, Get get) {
  std::vector<double> v;
  v.reserve(rows.size());
  for (const T& r : rows) v.push_back(static_cast<double>(get(r)));
  return mean_std(v);
}

}  // namespace

MetricSummary aggregate(std::span<const FactualityReport> reports, std::size_t k) {
  if (reports.empty()) throw ContractViolation("aggregate of no reports");
  if (k == 0) {
    std::vector<std::size_t> counts;
    for (const auto& r : reports) counts.push_back(r.n_atoms);
    k = median_k(counts);
  }
  std::vector<FactualityReport> at_k;
  for (const auto& r : reports) at_k.push_back(with_k(r, k));
  std::span<const FactualityReport> rows(at_k);
  MetricSummary s;
  s.count = rows.size();
  s.k = k;
  s.n_atoms = column(rows, [](const auto& r) { return r.n_atoms; });
  s.precision = column(rows, [](const auto& r) { return r.precision; });
  s.recall_at_k = column(rows, [](const auto& r) { return r.recall_at_k; });
  s.f1_at_k = column(rows, [](const auto& r) { return r.f1_at_k; });
  s.verifiability = column(rows, [](const auto& r) { return r.verifiability; });
  s.comprehensiveness = column(rows, [](const auto& r) { return r.comprehensiveness; });
  return s;
}

GainSummary aggregate_gains(std::span<const FactualityReport> responses,
                            std::span<const FactualityReport> corrections) {
  if (responses.size() != corrections.size())
    throw ContractViolation("gain summary needs paired reports");
  std::vector<GainReport> gains;
  for (std::size_t i = 0; i < responses.size(); ++i)
    gains.push_back(relative_gains(responses[i], corrections[i]));
  std::span<const GainReport> rows(gains);
  GainSummary s;
  s.count = rows.size();
  s.precision = column(rows, [](const auto& g) { return g.precision; });
  s.recall_at_k = column(rows, [](const auto& g) { return g.recall_at_k; });
  s.f1_at_k = column(rows, [](const auto& g) { return g.f1_at_k; });
  s.verifiability = column(rows, [](const auto& g) { return g.verifiability; });
  s.comprehensiveness = column(rows, [](const auto& g) { return g.comprehensiveness; });
  return s;
}

std::string_view verdict_name(Verdict v) noexcept { return v == Verdict::Yes ? "Yes" : "No"; }

Verdict parse_verdict(std::string_view output) {
  const std::size_t yes = output.rfind("[Yes]");
  const std::size_t no = output.rfind("[No]");
  if (yes == std::string_view::npos && no == std::string_view::npos)
    throw FormatError("judge output has no [Yes]/[No] verdict", std::string(output));
  if (yes == std::string_view::npos) return Verdict::No;
  if (no == std::string_view::npos) return Verdict::Yes;
  return yes > no ? Verdict::Yes : Verdict::No;
}

Verdict judge_equivalence(TextGenerator& generator, const PromptSet& prompts,
                          const std::string& model_name, std::string_view reference,
                          std::string_view candidate) {
  GenerationRequest req;
  req.model_name = model_name;
  req.prompt = render_judge(prompts, reference, candidate);
  std::string out;
  try {
    out = generator.generate(req);
  } catch (const ReplayMissError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(Stage::Judge, e.what());
  }
  return parse_verdict(out);
}

}  // namespace factloop
