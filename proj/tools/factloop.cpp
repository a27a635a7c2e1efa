// factloop command-line front end: assess, correct, report, synth.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "factloop/errors.hpp"
#include "factloop/harness.hpp"
#include "factloop/llm_io.hpp"
#include "factloop/pipeline.hpp"

namespace fs = std::filesystem;
using namespace factloop;

namespace {

struct ServiceOptions {
  std::string mode = "cache";
  fs::path store = "factloop-store";
  std::size_t parallel = 1;
  bool fetch_pages = false;
};

struct ConfigOptions {
  fs::path config_file;
  std::optional<double> theta;
  std::optional<std::size_t> max_iter;
  std::optional<std::size_t> ibound;
  std::optional<std::size_t> k;
  std::optional<std::string> model;
  std::optional<std::string> prompts;
};

void add_service_options(CLI::App& cmd, ServiceOptions& s) {
  cmd.add_option("--mode", s.mode, "live, record, replay or cache")
      ->check(CLI::IsMember({"live", "record", "replay", "cache"}))
      ->capture_default_str();
  cmd.add_option("--store", s.store, "response store directory")->capture_default_str();
  cmd.add_option("--parallel", s.parallel, "records processed concurrently")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd.add_flag("--fetch-pages", s.fetch_pages, "download result pages instead of using snippets");
}

void add_config_options(CLI::App& cmd, ConfigOptions& c, bool loop_flags) {
  cmd.add_option("--config", c.config_file, "JSON correction config")->check(CLI::ExistingFile);
  cmd.add_option("--ibound", c.ibound, "mini-bucket i-bound")->check(CLI::PositiveNumber);
  cmd.add_option("--k", c.k, "search results per query")->check(CLI::PositiveNumber);
  cmd.add_option("--model", c.model, "generation model name");
  cmd.add_option("--prompts", c.prompts, "template directory, or 'embedded'");
  if (loop_flags) {
    cmd.add_option("--theta", c.theta, "precision target")->check(CLI::Range(0.0, 1.0));
    cmd.add_option("--max-iter", c.max_iter, "refinement limit")->check(CLI::PositiveNumber);
  }
}

CorrectionConfig make_config(const ConfigOptions& c) {
  CorrectionConfig cfg;
  if (!c.config_file.empty()) {
    std::ifstream in(c.config_file);
    cfg = correction_config_from_json(nlohmann::json::parse(in));
  }
  if (c.theta) cfg.theta = *c.theta;
  if (c.max_iter) cfg.max_iterations = *c.max_iter;
  if (c.ibound) cfg.ibound = *c.ibound;
  if (c.k) cfg.k_contexts = *c.k;
  if (c.model) cfg.model_name = *c.model;
  if (c.prompts) cfg.prompts = *c.prompts;
  cfg.validate();
  return cfg;
}

struct Services {
  std::shared_ptr<TextGenerator> generator;
  std::shared_ptr<SearchProvider> search;
};

// Live clients are only constructed when the mode can reach the network.
Services make_services(const ServiceOptions& s) {
  const StoreMode mode = parse_store_mode(s.mode);
  std::shared_ptr<TextGenerator> live_gen;
  std::shared_ptr<SearchProvider> live_search;
  if (mode != StoreMode::Replay) {
    live_gen = std::make_shared<OpenAiChatGenerator>(generation_endpoint_from_env());
    live_search = std::make_shared<SerperSearch>(search_endpoint_from_env(), s.fetch_pages);
  }
  if (mode == StoreMode::Live) return {live_gen, live_search};
  auto store = std::make_shared<ResponseStore>(s.store);
  return {std::make_shared<StoredGenerator>(live_gen, store, mode),
          std::make_shared<StoredSearch>(live_search, store, mode)};
}

std::string error_chain(const std::exception& e) {
  std::string out = e.what();
  try {
    std::rethrow_if_nested(e);
  } catch (const std::exception& inner) {
    out += ": " + error_chain(inner);
  } catch (...) {
  }
  return out;
}

void print_summary(const RunSummary& summary) {
  std::cout << precision_table_tsv(summary);
  std::cout << "records " << summary.records << ", errors " << summary.errors << ", K " << summary.k
            << "\n";
}

int run(RunKind kind, const fs::path& dataset, const fs::path& out, const ConfigOptions& c,
        const ServiceOptions& s) {
  RunManifest m;
  m.kind = kind;
  m.dataset = dataset;
  m.config = make_config(c);
  m.mode = parse_store_mode(s.mode);
  if (m.mode != StoreMode::Live) m.store = s.store;
  m.output_dir = out;
  m.parallelism = s.parallel;
  const auto services = make_services(s);
  const auto result = run_benchmark(m, services.generator, services.search);
  print_summary(result.summary);
  for (const auto& e : result.errors)
    std::cerr << "error: " << e.id << " [" << e.stage << "] " << e.message << "\n";
  return result.errors.empty() ? 0 : 1;
}

// Questions file: JSON Lines with id, question, optional category and
// optional answers [{"text", "score"}]. Each question yields a synthetic
// record; when answers are given, the top-scored one becomes a human record.
int synth(const fs::path& questions, const fs::path& out, const ConfigOptions& c,
          const ServiceOptions& s) {
  const CorrectionConfig cfg = make_config(c);
  const PromptSet prompts = load_prompts(cfg);
  const auto services = make_services(s);
  std::ifstream in(questions);
  if (!in) throw DatasetError("cannot read " + questions.string());

  std::vector<DatasetRecord> records;
  std::size_t errors = 0, line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string id = "line " + std::to_string(line_no);
    try {
      const auto j = nlohmann::json::parse(line);
      id = j.at("id").get<std::string>();
      const auto question = j.at("question").get<std::string>();
      const auto category = j.value("category", std::string());
      if (j.contains("answers") && !j["answers"].empty()) {
        std::vector<ScoredAnswer> answers;
        for (const auto& a : j["answers"])
          answers.push_back({a.at("text").get<std::string>(), a.value("score", 0LL)});
        records.push_back({id + "-h", category, question, select_canonical(answers), Origin::Human, {}});
      }
      records.push_back({id + "-s", category, question,
                         synth_incorrect(*services.generator, prompts, cfg, question),
                         Origin::Synthetic, {}});
    } catch (const std::exception& e) {
      ++errors;
      std::cerr << "error: " << id << " " << error_chain(e) << "\n";
    }
  }
  write_dataset(out, records);
  std::cout << records.size() << " records written to " << out.string() << ", " << errors
            << " errors\n";
  return errors == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factuality assessment and correction over atomic claims"};
  app.require_subcommand(1);

  ServiceOptions service;
  ConfigOptions config;
  fs::path input, out = "factloop-run";

  auto* assess = app.add_subcommand("assess", "score each response in a dataset");
  assess->add_option("dataset", input, "JSON Lines dataset")->required()->check(CLI::ExistingFile);
  assess->add_option("--out", out, "run directory")->capture_default_str();
  add_config_options(*assess, config, false);
  add_service_options(*assess, service);

  auto* correct = app.add_subcommand("correct", "score and refine each response");
  correct->add_option("dataset", input, "JSON Lines dataset")->required()->check(CLI::ExistingFile);
  correct->add_option("--out", out, "run directory")->capture_default_str();
  add_config_options(*correct, config, true);
  add_service_options(*correct, service);

  auto* report = app.add_subcommand("report", "rebuild summary files of a run directory");
  report->add_option("run-dir", input, "run directory")->required()->check(CLI::ExistingDirectory);

  fs::path synth_out = "synthetic.jsonl";
  auto* synthesize = app.add_subcommand("synth", "generate incorrect answers for questions");
  synthesize->add_option("questions", input, "JSON Lines questions file")
      ->required()
      ->check(CLI::ExistingFile);
  synthesize->add_option("--out", synth_out, "output dataset")->capture_default_str();
  add_config_options(*synthesize, config, false);
  add_service_options(*synthesize, service);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*assess) return run(RunKind::Assess, input, out, config, service);
    if (*correct) return run(RunKind::Correct, input, out, config, service);
    if (*synthesize) return synth(input, synth_out, config, service);
    const auto summary = report_run(input);
    print_summary(summary);
    return summary.errors == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "factloop: " << error_chain(e) << "\n";
    return 2;
  }
}
