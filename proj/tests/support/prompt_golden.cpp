#include "prompt_golden.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace factloop::testing {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

namespace {

std::string render_refine_input(const PromptSet& prompts, const nlohmann::json& in) {
  std::vector<IncorrectAtom> incorrect;
  for (const auto& a : in.at("incorrect")) {
    IncorrectAtom atom{a.at("text").get<std::string>(), {}};
    for (const auto& ev : a.at("evidence"))
      atom.evidence.push_back({ev.at(0).get<std::string>(), parse_relation(ev.at(1).get<std::string>())});
    incorrect.push_back(std::move(atom));
  }
  const auto unverified = in.at("unverified").get<std::vector<std::string>>();
  return render_refine(prompts, in.at("question").get<std::string>(), in.at("response").get<std::string>(),
                       incorrect, unverified);
}

}  // namespace

std::map<std::string, std::string> render_golden_inputs(const PromptSet& prompts,
                                                        const std::filesystem::path& dir) {
  const auto in = nlohmann::json::parse(read_file(dir / "inputs.json"));
  auto s = [](const nlohmann::json& j, const char* key) { return j.at(key).get<std::string>(); };
  auto v = [](const nlohmann::json& j, const char* key) { return j.at(key).get<std::vector<std::string>>(); };
  std::map<std::string, std::string> out;
  out["judge"] = render_judge(prompts, s(in["judge"], "reference"), s(in["judge"], "candidate"));
  out["llm1"] = render_llm1(prompts, s(in["llm1"], "question"), s(in["llm1"], "response"));
  out["llm2"] = render_llm2(prompts, s(in["llm2"], "question"), v(in["llm2"], "contexts"),
                            s(in["llm2"], "response"), v(in["llm2"], "unverified"));
  out["refine"] = render_refine_input(prompts, in["refine"]);
  out["refine_unverified_only"] = render_refine_input(prompts, in["refine_unverified_only"]);
  out["veli5"] = render_veli5(prompts, s(in["veli5"], "question"));
  out["atomize"] = render_atomize(prompts, s(in["atomize"], "response"));
  out["revise"] = render_revise(prompts, s(in["revise"], "response"), v(in["revise"], "atoms"));
  out["query"] = render_query(prompts, s(in["query"], "statement"));
  out["relation"] = render_relation(prompts, s(in["relation"], "premise"), s(in["relation"], "hypothesis"));
  return out;
}

}  // namespace factloop::testing
