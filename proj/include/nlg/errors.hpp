#pragma once

#include <stdexcept>
#include <string>

namespace nlg {

/// Failure categories raised by the library. Each value corresponds to one
/// contract violation; the CLI maps them to nonzero exit codes.
enum class ErrorCode {
    InvalidResolution,
    GridMismatch,
    NoBoundary,
    NotAVolumeForm,
    NotADiffeo,
    NotAnImmersion,
    NotAnEmbedding,
    DimensionMismatch,
    RadiusExceedsReach,
    Unsupported,
    OutsideTube,
    AmbiguousProjection,
    SectionOutOfRange,
    DegenerateNormalSpace,
    NotInChartDomain,
    MassMismatch,
    SolverDivergence,
    FitFailure,
    ScenarioParse,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace nlg
