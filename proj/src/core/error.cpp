#include "caco/core/error.hpp"

namespace caco {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::syntax_error: return "syntax-error";
    case ErrorCode::setup_error: return "setup-error";
    case ErrorCode::no_boxed_answer: return "no-boxed-answer";
    case ErrorCode::empty_output: return "empty-output";
    case ErrorCode::missing_placeholder: return "missing-placeholder";
    case ErrorCode::unknown_template: return "unknown-template";
    case ErrorCode::prompt_checksum: return "prompt-checksum";
    case ErrorCode::backend_unavailable: return "backend-unavailable";
    case ErrorCode::unparseable_verdict: return "unparseable-verdict";
    case ErrorCode::empty_problem: return "empty-problem";
    case ErrorCode::storage_io: return "storage-io";
    case ErrorCode::missing_checkpoint: return "missing-checkpoint";
    case ErrorCode::config_error: return "config-error";
  }
  return "unknown-error";
}

}  // namespace caco
