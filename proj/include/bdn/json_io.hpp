#pragma once

#include "bdn/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace bdn {

using json = nlohmann::json;

/// Deterministic serialization: object keys sorted, floating-point numbers
/// printed with 17 significant digits, no whitespace. Identical values always
/// produce identical bytes.
std::string canonical_dump(const json& value);

/// `{"variables": [...], "edges": [[p, c], ...], "cpts": [{child, parents,
/// probabilities}]}`; probabilities are the row-major flattening of the table.
json network_to_json(const DiscreteNetwork& net);
DiscreteNetwork network_from_json(const json& doc);

json dag_to_json(const Dag& dag);

/// True for integers >= 0 whether stored signed or unsigned.
inline bool is_count(const json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0);
}

}  // namespace bdn
