#include "fixtures.hpp"

#include "bdn/random.hpp"

#include <cstdio>

namespace fixture {

std::string synthetic_csv(std::size_t rows, std::uint64_t seed, bool with_missing) {
  bdn::Rng rng(seed);
  static const char* regions[] = {"north", "south", "west"};
  std::string out = "county,region,income,smoker,longevity\n";
  char line[160];
  for (std::size_t i = 0; i < rows; ++i) {
    const int region = static_cast<int>(bdn::uniform_index(rng, 3));
    const int income = bdn::uniform01(rng) < 0.8 ? region : static_cast<int>(bdn::uniform_index(rng, 3));
    const bool smoker = bdn::uniform01(rng) < (income == 0 ? 0.6 : income == 1 ? 0.35 : 0.15);
    int lon = income == 2 ? 2 : income;
    if (smoker && lon > 0 && bdn::uniform01(rng) < 0.7) --lon;
    if (bdn::uniform01(rng) < 0.1) lon = static_cast<int>(bdn::uniform_index(rng, 3));
    const double income_value = 20.0 + 30.0 * income + 8.0 * bdn::uniform01(rng);
    const double lon_value = 70.0 + 8.0 * lon + 4.0 * bdn::uniform01(rng);
    char income_text[32] = "";
    if (!with_missing || i % 50 != 7) std::snprintf(income_text, sizeof income_text, "%.3f", income_value);
    std::snprintf(line, sizeof line, "c%05zu,%s,%s,%s,%.3f\n", i, regions[region], income_text, smoker ? "yes" : "no",
                  lon_value);
    out += line;
  }
  return out;
}

}  // namespace fixture
