#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bdn {

enum class ErrorCode {
  invalid_assignment,
  cyclic_graph,
  invalid_network,
  parse_error,
  merge_key,
  schema,
  type_error,
  unimputable_column,
  constant_column,
  discretization_failed,
  constraint,
  treewidth_limit,
  query,
  impossible_evidence,
  acceptance_failure,
  structure,
  impossible_action,
  enumeration_limit,
  validation,
  not_found,
  io,
};

/// Stable machine-readable name, used in JSON error payloads.
std::string_view to_string(ErrorCode code);

/// Single exception type for the library; `code()` distinguishes failure kinds.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace bdn
