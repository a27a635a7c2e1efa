#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace factloop::testing {

/// Runs `cases` random instances of each metric property (gain antisymmetry
/// and scale invariance, F1 bounds, recall clamp, precision range,
/// verifiability bound). Returns one message per violated check.
std::vector<std::string> check_metric_properties(std::uint64_t seed, int cases);

}  // namespace factloop::testing
