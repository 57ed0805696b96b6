#pragma once

#include <stdexcept>
#include <string>

namespace lpdist {

enum class ErrorCode {
  BadParam,
  BadMatrix,
  CapExceeded,
  Overflow,
  FamilyMismatch,
  IncompatibleSpecs,
  DegenerateGenerators,
  InfiniteNeedsRadius,
  ZeroGradient,
  NoConvergence,
  BadScale,
  ZeroNorm,
  DegenerateInput,
  ParseError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace lpdist
