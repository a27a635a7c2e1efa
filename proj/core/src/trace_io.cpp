#include "factloop/pipeline.hpp"

namespace factloop {

nlohmann::json to_json(const FactualityReport& r) {
  return nlohmann::json{{"n_atoms", r.n_atoms},
                        {"supported", r.supported},
                        {"precision", r.precision},
                        {"recall_at_k", r.recall_at_k},
                        {"f1_at_k", r.f1_at_k},
                        {"verifiability", r.verifiability},
                        {"comprehensiveness", r.comprehensiveness},
                        {"k_used", r.k_used}};
}

FactualityReport factuality_report_from_json(const nlohmann::json& j) {
  FactualityReport r;
  r.n_atoms = j.at("n_atoms").get<std::size_t>();
  r.supported = j.at("supported").get<std::size_t>();
  r.precision = j.at("precision").get<double>();
  r.recall_at_k = j.at("recall_at_k").get<double>();
  r.f1_at_k = j.at("f1_at_k").get<double>();
  r.verifiability = j.at("verifiability").get<std::size_t>();
  r.comprehensiveness = j.at("comprehensiveness").get<double>();
  r.k_used = j.at("k_used").get<std::size_t>();
  return r;
}

nlohmann::json to_json(const Feedback& fb) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const AtomRecord& a : fb.flagged_atoms) {
    nlohmann::json j{{"id", a.id}, {"text", a.text()}, {"label", std::string(label_name(a.label))}};
    if (a.posterior) j["posterior"] = *a.posterior;
    atoms.push_back(std::move(j));
  }
  nlohmann::json evidence = nlohmann::json::array();
  for (const EvidenceItem& e : fb.evidence)
    evidence.push_back({{"atom", e.atom_id},
                        {"context", e.context_id},
                        {"relation", std::string(relation_name(e.kind))},
                        {"p", e.p}});
  return nlohmann::json{{"flagged_atoms", std::move(atoms)}, {"evidence", std::move(evidence)}};
}

nlohmann::json to_json(const CorrectionTrace& t) {
  nlohmann::json its = nlohmann::json::array();
  for (const IterationRecord& it : t.iterations)
    its.push_back({{"response", it.response},
                   {"report", to_json(it.report)},
                   {"feedback", to_json(it.feedback)},
                   {"accepted", it.accepted}});
  return nlohmann::json{{"question", t.question},
                        {"iterations", std::move(its)},
                        {"final_response", t.final_response},
                        {"stop", std::string(stop_reason_name(t.stop))}};
}

std::string trace_line(const std::string& record_id, const CorrectionTrace& trace) {
  nlohmann::json j = to_json(trace);
  j["id"] = record_id;
  return j.dump();
}

}  // namespace factloop
