#pragma once

#include <cstdint>
#include <string>

namespace fixture {

/// County-like CSV keyed by "county": region (text), income and longevity
/// (continuous, three well separated clusters each), smoker (text). Income
/// depends on region, smoker on income, longevity on both. Every 50th row
/// has an empty income cell when `with_missing` is set.
std::string synthetic_csv(std::size_t rows, std::uint64_t seed, bool with_missing = true);

}  // namespace fixture
