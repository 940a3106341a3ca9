#pragma once

#include <stdexcept>
#include <string>

namespace lcvlp {

enum class ErrorCode {
    InvalidArgument,
    InvalidCurve,
    BehindCamera,
    ParallelRay,
    NegativeDepth,
    NotOrthonormal,
    DuplicateId,
    InconsistentCeiling,
    UnknownId,
    Schema,
    Malformed,
    InsufficientObservations,
    Degenerate,
    NoPositiveDepthSolution,
    InfeasibleInitializer,
    Divergence,
    InfeasibleScenario,
    TooManyFailures,
    PartiallyVisible,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::InvalidCurve: return "invalid_curve";
    case ErrorCode::BehindCamera: return "behind_camera";
    case ErrorCode::ParallelRay: return "parallel_ray";
    case ErrorCode::NegativeDepth: return "negative_depth";
    case ErrorCode::NotOrthonormal: return "not_orthonormal";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::InconsistentCeiling: return "inconsistent_ceiling";
    case ErrorCode::UnknownId: return "unknown_id";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Malformed: return "malformed";
    case ErrorCode::InsufficientObservations: return "insufficient_observations";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::NoPositiveDepthSolution: return "no_positive_depth_solution";
    case ErrorCode::InfeasibleInitializer: return "infeasible_initializer";
    case ErrorCode::Divergence: return "divergence";
    case ErrorCode::InfeasibleScenario: return "infeasible_scenario";
    case ErrorCode::TooManyFailures: return "too_many_failures";
    case ErrorCode::PartiallyVisible: return "partially_visible";
    }
    return "unknown";
}

} // namespace lcvlp
