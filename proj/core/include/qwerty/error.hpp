#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qwerty {

// Machine-readable failure kinds. The service maps these onto HTTP status
// codes and the CLI onto exit codes, so the set is part of the wire contract.
enum class ErrorCode {
  kInvalidArgument,
  kEmptyDocument,
  kMalformedDocx,
  kUnsupportedFormat,
  kConfigError,
  kLexiconParseError,
  kAnalyzerUnavailable,
  kVerdictParseError,
  kEmptyAnalysis,
  kDivisionDomain,
  kEmptyEval,
  kNotFound,
  kBadRequest,
  kPayloadTooLarge,
  kTooManyUploads,
  kStorageError,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class LexiconParseError : public Error {
 public:
  LexiconParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kLexiconParseError,
              "lexicon line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Carries the raw completion so callers can keep it for audit.
class VerdictParseError : public Error {
 public:
  VerdictParseError(const std::string& message, std::string raw)
      : Error(ErrorCode::kVerdictParseError, message), raw_(std::move(raw)) {}

  const std::string& raw() const noexcept { return raw_; }

 private:
  std::string raw_;
};

}  // namespace qwerty
