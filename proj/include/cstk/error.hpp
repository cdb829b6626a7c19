#pragma once

#include <stdexcept>
#include <string>

namespace cstk {

enum class ErrorKind {
  // seqlogical
  UnbalancedBrackets,
  MultipleRoots,
  NestedSlot,
  EmptySlot,
  EmptyUtterance,
  MissingRoot,
  InvalidSpan,
  InvalidToken,
  LengthMismatch,
  // dataset
  ParseError,
  DuplicateId,
  InfeasibleCoverage,
  // alignment
  EmptyCorpus,
  DimensionMismatch,
  IndexOutOfRange,
  // matchfilter
  GeneratorFailure,
  NoTemplate,
  UnknownSource,
  // features
  EmbeddingFileMissing,
  MalformedEmbeddingLine,
  // io / cli
  IoError,
  ConfigError,
};

const char* to_string(ErrorKind kind);

// Every toolkit failure carries a kind so callers (and tests) can dispatch
// without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cstk
