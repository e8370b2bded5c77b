#include "bdn/error.hpp"

namespace bdn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_assignment: return "invalid_assignment";
    case ErrorCode::cyclic_graph: return "cyclic_graph";
    case ErrorCode::invalid_network: return "invalid_network";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::merge_key: return "merge_key";
    case ErrorCode::schema: return "schema";
    case ErrorCode::type_error: return "type_error";
    case ErrorCode::unimputable_column: return "unimputable_column";
    case ErrorCode::constant_column: return "constant_column";
    case ErrorCode::discretization_failed: return "discretization_failed";
    case ErrorCode::constraint: return "constraint";
    case ErrorCode::treewidth_limit: return "treewidth_limit";
    case ErrorCode::query: return "query";
    case ErrorCode::impossible_evidence: return "impossible_evidence";
    case ErrorCode::acceptance_failure: return "acceptance_failure";
    case ErrorCode::structure: return "structure";
    case ErrorCode::impossible_action: return "impossible_action";
    case ErrorCode::enumeration_limit: return "enumeration_limit";
    case ErrorCode::validation: return "validation";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace bdn
