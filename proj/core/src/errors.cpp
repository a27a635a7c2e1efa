#include "factloop/errors.hpp"

namespace factloop {

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::Atomize: return "atomize";
    case Stage::Revise: return "revise";
    case Stage::Retrieve: return "retrieve";
    case Stage::Relate: return "relate";
    case Stage::Infer: return "infer";
    case Stage::Refine: return "refine";
    case Stage::Judge: return "judge";
    case Stage::Synthesize: return "synthesize";
  }
  return "unknown";
}

}  // namespace factloop
