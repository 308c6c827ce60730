#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace caco {

enum class ErrorCode {
  parse_error,           // corrupted record storage
  syntax_error,          // candidate source does not parse
  setup_error,           // interpreter or shim could not be started
  no_boxed_answer,
  empty_output,
  missing_placeholder,
  unknown_template,
  prompt_checksum,
  backend_unavailable,
  unparseable_verdict,
  empty_problem,
  storage_io,
  missing_checkpoint,
  config_error,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace caco
