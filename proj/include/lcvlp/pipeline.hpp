#pragma once

#include "lcvlp/freepnp.hpp"
#include "lcvlp/refine.hpp"
#include "lcvlp/scene.hpp"

namespace lcvlp {

struct PoseEstimate {
    /// Initializer the returned refinement started from.
    Posed initial;
    RefineResult refined;
    /// Number of initializers tried.
    int candidates{0};
};

/// FreePnP followed by refinement from every initializer candidate; keeps the lowest final cost.
PoseEstimate estimate_pose(const Scene& scene, const FreePnpConfig& freepnp_config = {},
                           const RefineOptions& refine_options = {});

} // namespace lcvlp
