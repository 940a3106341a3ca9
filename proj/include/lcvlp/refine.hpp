#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lcvlp/camera.hpp"
#include "lcvlp/scene.hpp"

namespace lcvlp {

/// Axis-aligned box of admissible camera centers.
struct Box {
    Eigen::Vector3d min{Eigen::Vector3d::Constant(-std::numeric_limits<double>::infinity())};
    Eigen::Vector3d max{Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity())};

    bool contains(const Eigen::Vector3d& p) const {
        return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
    }
};

struct RefineOptions {
    /// Fraction of contour points kept for the fit, in (0, 1].
    double sampling_ratio{1.0};
    /// Bound on the RMS back-projection error of reference points (m); used only when the scene has them.
    double rp_tolerance{0.05};
    /// Admissible camera centers. Unset means unbounded in x/y and 1 mm below the ceiling in z.
    std::optional<Box> feasible_region;
    int max_iterations{100};
    /// Stop once an accepted step has a norm below this.
    double convergence_tol{1e-10};
};

enum class RefineStatus { Converged, MaxIterations };
enum class ConstraintStatus { Satisfied, RegionViolated, RefPointViolated };

const char* to_string(RefineStatus status);
const char* to_string(ConstraintStatus status);

struct RefineDiagnostics {
    int iterations{0};
    double initial_cost{0.0};
    double final_cost{0.0};
    /// Residuals clipped at the final pose.
    int clip_count{0};
    RefineStatus status{RefineStatus::Converged};
    ConstraintStatus constraint_status{ConstraintStatus::Satisfied};
    /// Objective after each accepted step, starting with the initial value. Raising the reference-point
    /// weight re-weights the objective and starts a new non-increasing run.
    std::vector<double> cost_history;
};

struct RefineResult {
    Posed pose;
    RefineDiagnostics diagnostics;
};

inline constexpr double kResidualClip = 1e6;

/// Every (1/ratio)-th point: ceil(ratio * n) points at indices floor(k / ratio).
Contour subsample_contour(const Contour& contour, double ratio);

/// Algebraic distances of back-projected contour points to their LED curves, LED-major.
Eigen::VectorXd residuals(const Posed& pose, const Scene& scene, const RefineOptions& options = {});

/// d(residuals)/d(omega, t), one row per residual.
Eigen::MatrixXd jacobian(const Posed& pose, const Scene& scene, const RefineOptions& options = {});

/// Mean squared distance between back-projected reference pixels and their known ceiling points.
double ref_point_mse(const Posed& pose, const Scene& scene);

/// Minimizes the summed squared algebraic distances over (omega, t) by Levenberg-Marquardt, with the
/// feasible region and the reference-point bound enforced as penalties while violated.
RefineResult refine(const Posed& initial, const Scene& scene, const RefineOptions& options = {});

} // namespace lcvlp
