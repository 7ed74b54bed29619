#include "mcrm/errors.hpp"

namespace mcrm {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NonPositiveProb: return "NonPositiveProb";
        case ErrorKind::ProbSumMismatch: return "ProbSumMismatch";
        case ErrorKind::SpaceMismatch: return "SpaceMismatch";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::NotMeasurable: return "NotMeasurable";
        case ErrorKind::AlgebraMismatch: return "AlgebraMismatch";
        case ErrorKind::OutOfRange: return "OutOfRange";
        case ErrorKind::NonPositiveAlpha: return "NonPositiveAlpha";
        case ErrorKind::NotIndependent: return "NotIndependent";
        case ErrorKind::NotNormalized: return "NotNormalized";
        case ErrorKind::DegenerateFit: return "DegenerateFit";
        case ErrorKind::NonAffineRelation: return "NonAffineRelation";
        case ErrorKind::RangeNotNested: return "RangeNotNested";
        case ErrorKind::NotAFiltration: return "NotAFiltration";
        case ErrorKind::SizeOverflow: return "SizeOverflow";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::ValidationError: return "ValidationError";
        case ErrorKind::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace mcrm
