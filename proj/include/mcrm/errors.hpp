#ifndef MCRM_ERRORS_HPP
#define MCRM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mcrm {

/// Failure categories surfaced by constructors, evaluators and solvers.
/// Check failures are not errors; they are recorded in CheckReport entries.
enum class ErrorKind {
    NonPositiveProb,
    ProbSumMismatch,
    SpaceMismatch,
    DimMismatch,
    NotMeasurable,
    AlgebraMismatch,
    OutOfRange,
    NonPositiveAlpha,
    NotIndependent,
    NotNormalized,
    DegenerateFit,
    NonAffineRelation,
    RangeNotNested,
    NotAFiltration,
    SizeOverflow,
    ParseError,
    ValidationError,
    IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

} // namespace mcrm

#endif
