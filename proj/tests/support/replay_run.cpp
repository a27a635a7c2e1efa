#include "replay_run.hpp"

#include "prompt_golden.hpp"
#include "scripted_world.hpp"
#include "test_paths.hpp"

namespace factloop::testing {

RunManifest replay_manifest(const std::filesystem::path& dataset, const std::filesystem::path& output_dir,
                            std::size_t parallelism) {
  RunManifest m;
  m.kind = RunKind::Correct;
  m.dataset = dataset;
  m.config = fixture_config();
  m.mode = StoreMode::Replay;
  m.store = fixture_dir() / "replay" / "store";
  m.output_dir = output_dir;
  m.parallelism = parallelism;
  return m;
}

RunResult run_replay(const RunManifest& manifest) {
  auto store = std::make_shared<ResponseStore>(manifest.store);
  return run_benchmark(manifest, std::make_shared<StoredGenerator>(nullptr, store, StoreMode::Replay),
                       std::make_shared<StoredSearch>(nullptr, store, StoreMode::Replay));
}

std::string run_outputs(const std::filesystem::path& dir) {
  std::string all;
  for (const char* name : {"traces.jsonl", "reports.jsonl", "errors.jsonl", "summary.json", "summary.tsv",
                           "precision.tsv"})
    all += std::string("== ") + name + "\n" + read_file(dir / name);
  return all;
}

}  // namespace factloop::testing
