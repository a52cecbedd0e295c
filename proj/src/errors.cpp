#include "nlg/errors.hpp"

namespace nlg {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidResolution: return "InvalidResolution";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::NoBoundary: return "NoBoundary";
        case ErrorCode::NotAVolumeForm: return "NotAVolumeForm";
        case ErrorCode::NotADiffeo: return "NotADiffeo";
        case ErrorCode::NotAnImmersion: return "NotAnImmersion";
        case ErrorCode::NotAnEmbedding: return "NotAnEmbedding";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::RadiusExceedsReach: return "RadiusExceedsReach";
        case ErrorCode::Unsupported: return "Unsupported";
        case ErrorCode::OutsideTube: return "OutsideTube";
        case ErrorCode::AmbiguousProjection: return "AmbiguousProjection";
        case ErrorCode::SectionOutOfRange: return "SectionOutOfRange";
        case ErrorCode::DegenerateNormalSpace: return "DegenerateNormalSpace";
        case ErrorCode::NotInChartDomain: return "NotInChartDomain";
        case ErrorCode::MassMismatch: return "MassMismatch";
        case ErrorCode::SolverDivergence: return "SolverDivergence";
        case ErrorCode::FitFailure: return "FitFailure";
        case ErrorCode::ScenarioParse: return "ScenarioParse";
    }
    return "UnknownError";
}

}  // namespace nlg
