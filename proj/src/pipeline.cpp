#include "lcvlp/pipeline.hpp"

#include <exception>

#include "lcvlp/error.hpp"

namespace lcvlp {

PoseEstimate estimate_pose(const Scene& scene, const FreePnpConfig& freepnp_config,
                           const RefineOptions& refine_options) {
    const auto candidates = freepnp_candidates(scene, freepnp_config);
    PoseEstimate best;
    bool found = false;
    std::exception_ptr first_error;
    for (const auto& init : candidates) {
        try {
            RefineResult r = refine(init, scene, refine_options);
            // Candidates violating the feasible region only win when nothing else is available.
            const auto rank = [](const RefineResult& x) {
                return x.diagnostics.constraint_status == ConstraintStatus::RegionViolated ? 1 : 0;
            };
            if (!found || rank(r) < rank(best.refined) ||
                (rank(r) == rank(best.refined) && r.diagnostics.final_cost < best.refined.diagnostics.final_cost)) {
                best.initial = init;
                best.refined = std::move(r);
                found = true;
            }
        } catch (const Error&) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (!found) std::rethrow_exception(first_error);
    best.candidates = static_cast<int>(candidates.size());
    return best;
}

} // namespace lcvlp
