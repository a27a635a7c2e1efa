#include "factloop/harness.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "text.hpp"

namespace factloop {

std::string_view origin_name(Origin origin) noexcept {
  return origin == Origin::Synthetic ? "synthetic" : "human";
}

Origin parse_origin(std::string_view name) {
  if (name == "human") return Origin::Human;
  if (name == "synthetic") return Origin::Synthetic;
  throw DatasetError("unknown origin: " + std::string(name));
}

nlohmann::json to_json(const DatasetRecord& r) {
  nlohmann::json j{{"id", r.id},
                   {"category", r.category},
                   {"question", r.question},
                   {"response", r.response},
                   {"origin", std::string(origin_name(r.origin))}};
  if (r.reference_correction) j["reference_correction"] = *r.reference_correction;
  return j;
}

namespace {

std::string required_string(const nlohmann::json& j, const char* field) {
  if (!j.contains(field)) throw DatasetError(std::string("missing field '") + field + "'");
  const auto& v = j.at(field);
  if (!v.is_string()) throw DatasetError(std::string("field '") + field + "' is not a string");
  std::string s = v.get<std::string>();
  if (detail::trim(s).empty()) throw DatasetError(std::string("field '") + field + "' is empty");
  return s;
}

}  // namespace

DatasetRecord dataset_record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw DatasetError("record is not a JSON object");
  DatasetRecord r;
  r.id = required_string(j, "id");
  r.question = required_string(j, "question");
  r.response = required_string(j, "response");
  r.origin = parse_origin(required_string(j, "origin"));
  if (j.contains("category")) {
    if (!j.at("category").is_string()) throw DatasetError("field 'category' is not a string");
    r.category = j.at("category").get<std::string>();
  }
  if (j.contains("reference_correction") && !j.at("reference_correction").is_null()) {
    if (!j.at("reference_correction").is_string())
      throw DatasetError("field 'reference_correction' is not a string");
    r.reference_correction = j.at("reference_correction").get<std::string>();
  }
  return r;
}

LoadedDataset parse_dataset(std::string_view text) {
  LoadedDataset out;
  std::set<std::string> ids;
  std::size_t line_no = 0;
  for (const std::string& line : detail::split_lines(text)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      DatasetRecord r = dataset_record_from_json(nlohmann::json::parse(line));
      if (!ids.insert(r.id).second) throw DatasetError("duplicate record id '" + r.id + "'");
      out.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      out.diagnostics.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const DatasetError& e) {
      out.diagnostics.push_back({line_no, e.what()});
    }
  }
  if (out.records.empty()) throw DatasetError("dataset has no valid records");
  return out;
}

LoadedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot read dataset " + path.string());
  std::ostringstream body;
  body << in.rdbuf();
  return parse_dataset(body.str());
}

void write_dataset(const std::filesystem::path& path, std::span<const DatasetRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write dataset " + path.string());
  for (const DatasetRecord& r : records) out << to_json(r).dump() << '\n';
}

const std::string& select_canonical(std::span<const ScoredAnswer> answers) {
  if (answers.empty()) throw ContractViolation("no answers to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < answers.size(); ++i)
    if (answers[i].score > answers[best].score) best = i;
  return answers[best].text;
}

std::string synth_incorrect(TextGenerator& generator, const PromptSet& prompts,
                            const CorrectionConfig& config, std::string_view question) {
  if (detail::trim(question).empty()) throw ContractViolation("question is empty");
  GenerationRequest req;
  req.model_name = config.model_name;
  req.prompt = render_veli5(prompts, question);
  req.temperature = config.temperature;
  req.max_tokens = config.max_tokens;
  try {
    return detail::trim(generator.generate(req));
  } catch (const std::exception& e) {
    std::throw_with_nested(StageError(Stage::Synthesize, e.what()));
  }
}

std::string_view run_kind_name(RunKind kind) noexcept {
  return kind == RunKind::Assess ? "assess" : "correct";
}

RunKind parse_run_kind(std::string_view name) {
  if (name == "assess") return RunKind::Assess;
  if (name == "correct") return RunKind::Correct;
  throw ContractViolation("unknown run kind: " + std::string(name));
}

nlohmann::json to_json(const RunManifest& m) {
  return nlohmann::json{{"kind", std::string(run_kind_name(m.kind))},
                        {"dataset", m.dataset.string()},
                        {"config", to_json(m.config)},
                        {"mode", std::string(store_mode_name(m.mode))},
                        {"store", m.store.string()},
                        {"output_dir", m.output_dir.string()},
                        {"parallelism", m.parallelism},
                        {"timestamp", m.timestamp}};
}

RunManifest run_manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  try {
    m.kind = parse_run_kind(j.value("kind", "correct"));
    m.dataset = j.at("dataset").get<std::string>();
    m.config = correction_config_from_json(j.value("config", nlohmann::json::object()));
    m.mode = parse_store_mode(j.value("mode", "replay"));
    m.store = j.value("store", "");
    m.output_dir = j.value("output_dir", "");
    m.parallelism = j.value("parallelism", std::size_t{1});
    m.timestamp = j.value("timestamp", "");
  } catch (const nlohmann::json::exception& e) {
    throw ContractViolation(std::string("bad manifest: ") + e.what());
  }
  return m;
}

nlohmann::json to_json(const RecordOutcome& o) {
  nlohmann::json j{{"id", o.id},
                   {"origin", std::string(origin_name(o.origin))},
                   {"category", o.category},
                   {"response", to_json(o.response)}};
  if (o.correction) {
    j["correction"] = to_json(*o.correction);
    j["refinements"] = o.refinements;
    j["stop"] = o.stop;
  }
  return j;
}

RecordOutcome record_outcome_from_json(const nlohmann::json& j) {
  RecordOutcome o;
  o.id = j.at("id").get<std::string>();
  o.origin = parse_origin(j.at("origin").get<std::string>());
  o.category = j.value("category", "");
  o.response = factuality_report_from_json(j.at("response"));
  if (j.contains("correction")) {
    o.correction = factuality_report_from_json(j.at("correction"));
    o.refinements = j.value("refinements", std::size_t{0});
    o.stop = j.value("stop", "");
  }
  return o;
}

RunSummary summarize(std::span<const RecordOutcome> outcomes, std::size_t errors) {
  RunSummary s;
  s.records = outcomes.size() + errors;
  s.errors = errors;
  if (outcomes.empty()) return s;
  std::vector<std::size_t> counts;
  for (const auto& o : outcomes) counts.push_back(o.response.n_atoms);
  s.k = median_k(counts);

  auto row = [&](std::string group, auto keep) {
    std::vector<FactualityReport> before, after;
    for (const auto& o : outcomes) {
      if (!keep(o)) continue;
      before.push_back(with_k(o.response, s.k));
      if (o.correction) after.push_back(with_k(*o.correction, s.k));
    }
    if (before.empty()) return;
    SummaryRow r;
    r.group = std::move(group);
    r.response = aggregate(before, s.k);
    if (!after.empty()) {
      if (after.size() != before.size())
        throw ContractViolation("outcomes mix assessed and corrected records");
      r.correction = aggregate(after, s.k);
      r.gains = aggregate_gains(before, after);
    }
    s.rows.push_back(std::move(r));
  };
  row("all", [](const RecordOutcome&) { return true; });
  row("human", [](const RecordOutcome& o) { return o.origin == Origin::Human; });
  row("synthetic", [](const RecordOutcome& o) { return o.origin == Origin::Synthetic; });
  return s;
}

namespace {

nlohmann::json to_json(const MeanStd& m) { return nlohmann::json{{"mean", m.mean}, {"std", m.std}}; }

nlohmann::json to_json(const MetricSummary& m) {
  return nlohmann::json{{"count", m.count},
                        {"k", m.k},
                        {"n_atoms", to_json(m.n_atoms)},
                        {"precision", to_json(m.precision)},
                        {"recall_at_k", to_json(m.recall_at_k)},
                        {"f1_at_k", to_json(m.f1_at_k)},
                        {"verifiability", to_json(m.verifiability)},
                        {"comprehensiveness", to_json(m.comprehensiveness)}};
}

nlohmann::json to_json(const GainSummary& g) {
  return nlohmann::json{{"count", g.count},
                        {"precision", to_json(g.precision)},
                        {"recall_at_k", to_json(g.recall_at_k)},
                        {"f1_at_k", to_json(g.f1_at_k)},
                        {"verifiability", to_json(g.verifiability)},
                        {"comprehensiveness", to_json(g.comprehensiveness)}};
}

std::string fixed(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

struct MetricColumn {
  const char* name;
  MeanStd MetricSummary::*metric;
  MeanStd GainSummary::*gain;
};

constexpr MetricColumn kColumns[] = {
    {"precision", &MetricSummary::precision, &GainSummary::precision},
    {"recall_at_k", &MetricSummary::recall_at_k, &GainSummary::recall_at_k},
    {"f1_at_k", &MetricSummary::f1_at_k, &GainSummary::f1_at_k},
    {"verifiability", &MetricSummary::verifiability, &GainSummary::verifiability},
    {"comprehensiveness", &MetricSummary::comprehensiveness, &GainSummary::comprehensiveness},
    {"n_atoms", &MetricSummary::n_atoms, nullptr},
};

}  // namespace

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const SummaryRow& r : s.rows) {
    nlohmann::json j{{"group", r.group}, {"response", to_json(r.response)}};
    if (r.correction) j["correction"] = to_json(*r.correction);
    if (r.gains) j["gains"] = to_json(*r.gains);
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"k", s.k}, {"records", s.records}, {"errors", s.errors}, {"rows", rows}};
}

std::string summary_tsv(const RunSummary& s) {
  std::string out =
      "group\tmetric\tresponse_mean\tresponse_std\tcorrection_mean\tcorrection_std\tgain_mean\tgain_std\n";
  for (const SummaryRow& r : s.rows) {
    for (const MetricColumn& c : kColumns) {
      const MeanStd& m = r.response.*c.metric;
      out += r.group + '\t' + c.name + '\t' + fixed(m.mean) + '\t' + fixed(m.std);
      if (r.correction) {
        const MeanStd& cm = (*r.correction).*c.metric;
        out += '\t' + fixed(cm.mean) + '\t' + fixed(cm.std);
      } else {
        out += "\t-\t-";
      }
      if (r.gains && c.gain) {
        const MeanStd& g = (*r.gains).*c.gain;
        out += '\t' + fixed(g.mean) + '\t' + fixed(g.std);
      } else {
        out += "\t-\t-";
      }
      out += '\n';
    }
  }
  return out;
}

std::string precision_table_tsv(const RunSummary& s) {
  std::string out = "group\tcount\tprecision_before\tprecision_after\tdelta\n";
  for (const SummaryRow& r : s.rows) {
    const double before = r.response.precision.mean;
    out += r.group + '\t' + std::to_string(r.response.count) + '\t' + fixed(before);
    if (r.correction) {
      const double after = r.correction->precision.mean;
      out += '\t' + fixed(after) + '\t' + fixed(after - before);
    } else {
      out += "\t-\t-";
    }
    out += '\n';
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void write_summary_files(const std::filesystem::path& dir, const RunSummary& summary) {
  write_file(dir / "summary.json", to_json(summary).dump(2) + "\n");
  write_file(dir / "summary.tsv", summary_tsv(summary));
  write_file(dir / "precision.tsv", precision_table_tsv(summary));
}

std::string nested_messages(const std::exception& e) {
  std::string msg = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    const std::string more = nested_messages(inner);
    if (msg.find(more) == std::string::npos) msg += " (" + more + ")";
  } catch (...) {
  }
  return msg;
}

struct Slot {
  std::optional<RecordOutcome> outcome;
  std::optional<CorrectionTrace> trace;
  std::optional<RecordError> error;
};

}  // namespace

RunResult run_benchmark(const RunManifest& manifest, std::shared_ptr<TextGenerator> generator,
                        std::shared_ptr<SearchProvider> search) {
  manifest.config.validate();
  const LoadedDataset data = load_dataset(manifest.dataset);
  const Pipeline pipeline(std::move(generator), std::move(search), load_prompts(manifest.config),
                          manifest.config);

  std::vector<Slot> slots(data.records.size());
  auto process = [&](std::size_t i) {
    const DatasetRecord& rec = data.records[i];
    Slot& slot = slots[i];
    try {
      RecordOutcome o{rec.id, rec.origin, rec.category, {}, std::nullopt, 0, ""};
      if (manifest.kind == RunKind::Assess) {
        o.response = pipeline.assess(rec.question, rec.response).report;
      } else {
        CorrectionTrace t = pipeline.run_correction_loop(rec.question, rec.response);
        o.response = t.initial_report();
        o.correction = t.final_report();
        o.refinements = t.refinements();
        o.stop = std::string(stop_reason_name(t.stop));
        slot.trace = std::move(t);
      }
      slot.outcome = std::move(o);
    } catch (const CorrectionAborted& e) {
      slot.trace = e.partial_trace();
      slot.error = RecordError{rec.id, std::string(stage_name(e.stage())), nested_messages(e)};
    } catch (const StageError& e) {
      slot.error = RecordError{rec.id, std::string(stage_name(e.stage())), nested_messages(e)};
    } catch (const std::exception& e) {
      slot.error = RecordError{rec.id, "", nested_messages(e)};
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(manifest.parallelism, slots.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < slots.size(); i = next++) process(i);
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  RunResult result;
  std::string traces, reports, errors;
  for (const DatasetDiagnostic& d : data.diagnostics) {
    RecordError e{"", "load", "line " + std::to_string(d.line) + ": " + d.message};
    errors += nlohmann::json{{"id", e.id}, {"stage", e.stage}, {"message", e.message}}.dump() + "\n";
    result.errors.push_back(std::move(e));
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    Slot& s = slots[i];
    if (s.trace) traces += trace_line(data.records[i].id, *s.trace) + "\n";
    if (s.outcome) {
      reports += to_json(*s.outcome).dump() + "\n";
      result.outcomes.push_back(std::move(*s.outcome));
    }
    if (s.error) {
      errors += nlohmann::json{{"id", s.error->id}, {"stage", s.error->stage},
                               {"message", s.error->message}}
                    .dump() +
                "\n";
      result.errors.push_back(std::move(*s.error));
    }
  }
  result.summary = summarize(result.outcomes, result.errors.size());

  std::filesystem::create_directories(manifest.output_dir);
  const auto& dir = manifest.output_dir;
  write_file(dir / "traces.jsonl", traces);
  write_file(dir / "reports.jsonl", reports);
  write_file(dir / "errors.jsonl", errors);
  write_summary_files(dir, result.summary);
  RunManifest stamped = manifest;
  if (stamped.timestamp.empty()) stamped.timestamp = utc_timestamp();
  write_file(dir / "manifest.json", to_json(stamped).dump(2) + "\n");
  return result;
}

RunSummary report_run(const std::filesystem::path& run_dir) {
  std::ifstream in(run_dir / "reports.jsonl", std::ios::binary);
  if (!in) throw DatasetError("no reports.jsonl in " + run_dir.string());
  std::vector<RecordOutcome> outcomes;
  std::string line;
  while (std::getline(in, line))
    if (!detail::trim(line).empty()) outcomes.push_back(record_outcome_from_json(nlohmann::json::parse(line)));
  std::size_t errors = 0;
  std::ifstream err(run_dir / "errors.jsonl", std::ios::binary);
  while (err && std::getline(err, line))
    if (!detail::trim(line).empty()) ++errors;
  RunSummary s = summarize(outcomes, errors);
  write_summary_files(run_dir, s);
  return s;
}

}  // namespace factloop
