#include "lcvlp/refine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "lcvlp/error.hpp"
#include "lcvlp/lame_curve.hpp"

namespace lcvlp {

const char* to_string(RefineStatus status) {
    switch (status) {
    case RefineStatus::Converged: return "converged";
    case RefineStatus::MaxIterations: return "max_iterations";
    }
    return "unknown";
}

const char* to_string(ConstraintStatus status) {
    switch (status) {
    case ConstraintStatus::Satisfied: return "satisfied";
    case ConstraintStatus::RegionViolated: return "region_violated";
    case ConstraintStatus::RefPointViolated: return "ref_point_violated";
    }
    return "unknown";
}

Contour subsample_contour(const Contour& contour, double ratio) {
    if (!(ratio > 0.0) || ratio > 1.0) throw Error(ErrorCode::InvalidArgument, "sampling ratio must be in (0, 1]");
    if (ratio == 1.0) return contour;
    const auto n = contour.size();
    const auto count = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
    Contour out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const auto idx = static_cast<std::size_t>(std::floor(static_cast<double>(k) / ratio + 1e-9));
        out.push_back(contour[std::min(idx, n - 1)]);
    }
    return out;
}

namespace {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix26d = Eigen::Matrix<double, 2, 6>;
using Matrix36d = Eigen::Matrix<double, 3, 6>;

// Pose quantities shared by every back-projected pixel.
struct Frame {
    Eigen::Matrix3d rt;                   // R^T
    std::array<Eigen::Matrix3d, 3> drt;   // d(R^T)/d(omega_i)
    Eigen::Vector3d center;               // -R^T t
    Matrix36d center_jac;                 // d(center)/d(omega, t)

    Frame(const Posed& pose, bool with_derivatives) {
        rt = pose.rotation().transpose();
        center = -rt * pose.t;
        if (!with_derivatives) return;
        const auto dr = rodrigues_derivatives(pose.omega);
        for (int i = 0; i < 3; ++i) {
            drt[i] = dr[i].transpose();
            center_jac.col(i) = -drt[i] * pose.t;
        }
        center_jac.rightCols<3>() = -rt;
    }
};

// Ceiling intersection of the ray d (camera frame) and optionally its derivative w.r.t. (omega, t).
Eigen::Vector2d back_project(const Frame& f, double z0, const Eigen::Vector3d& d, Matrix26d* jac) {
    const Eigen::Vector3d w = f.rt * d;
    if (!(std::abs(w.z()) > 1e-9)) throw Error(ErrorCode::ParallelRay, "viewing ray is parallel to the ceiling");
    const double depth = (z0 - f.center.z()) / w.z();
    if (!(depth > 0.0)) throw Error(ErrorCode::NegativeDepth, "ceiling lies behind the camera");
    const Eigen::Vector2d xy = f.center.head<2>() + depth * w.head<2>();
    if (jac) {
        Eigen::Matrix<double, 2, 3> proj;
        proj << 1.0, 0.0, -w.x() / w.z(), 0.0, 1.0, -w.y() / w.z();
        Matrix36d dw = Matrix36d::Zero();
        for (int i = 0; i < 3; ++i) dw.col(i) = f.drt[i] * d;
        *jac = proj * (f.center_jac + depth * dw);
    }
    return xy;
}

struct Evaluation {
    Eigen::VectorXd data;
    Eigen::MatrixXd data_jac;
    int clips{0};
    double rp_mse{0.0};
    Vector6d rp_grad{Vector6d::Zero()};
    Eigen::Vector3d center;
    Matrix36d center_jac;
};

// Rays K^-1 [u, v, 1] of the retained pixels, tagged with their LED index.
struct Problem {
    const Scene& scene;
    std::vector<std::pair<std::size_t, Eigen::Vector3d>> rays;

    Problem(const Scene& s, double ratio) : scene(s) {
        if (s.leds.size() != s.observations.size())
            throw Error(ErrorCode::InvalidArgument, "scene LEDs and observations differ in count");
        for (std::size_t i = 0; i < s.observations.size(); ++i) {
            for (const auto& px : subsample_contour(s.observations[i].contour, ratio))
                rays.emplace_back(i, s.camera.ray(px));
        }
    }

    Evaluation evaluate(const Posed& pose, bool with_jacobian) const {
        const Frame frame(pose, with_jacobian);
        Evaluation ev;
        const auto n = static_cast<Eigen::Index>(rays.size());
        ev.data.resize(n);
        if (with_jacobian) ev.data_jac.resize(n, 6);
        Matrix26d jxy;
        for (Eigen::Index k = 0; k < n; ++k) {
            const auto& [led, ray] = rays[static_cast<std::size_t>(k)];
            const auto& curve = scene.leds[led].curve;
            const Eigen::Vector2d xy = back_project(frame, scene.z0, ray, with_jacobian ? &jxy : nullptr);
            double r = algebraic_distance(curve, xy);
            bool clipped = false;
            if (std::abs(r) > kResidualClip) {
                r = std::copysign(kResidualClip, r);
                clipped = true;
                ++ev.clips;
            }
            ev.data(k) = r;
            if (with_jacobian) {
                if (clipped) {
                    ev.data_jac.row(k).setZero();
                } else {
                    ev.data_jac.row(k) = algebraic_distance_gradient(curve, xy).transpose() * jxy;
                }
            }
        }
        ev.center = frame.center;
        ev.center_jac = frame.center_jac;
        if (!scene.ref_points.empty()) {
            for (const auto& rp : scene.ref_points) {
                const Eigen::Vector2d xy =
                    back_project(frame, scene.z0, scene.camera.ray(rp.pixel), with_jacobian ? &jxy : nullptr);
                const Eigen::Vector2d e = xy - rp.world.head<2>();
                ev.rp_mse += e.squaredNorm();
                if (with_jacobian) ev.rp_grad += 2.0 * jxy.transpose() * e;
            }
            const auto m = static_cast<double>(scene.ref_points.size());
            ev.rp_mse /= m;
            ev.rp_grad /= m;
        }
        return ev;
    }
};

constexpr double kRegionWeight = 1e6;       // per squared meter of violation
constexpr double kRefPointWeight0 = 1e2;    // initial weight on (mse - eps^2)^2
constexpr int kRefPointRamps = 3;
constexpr double kRegionSlack = 1e-6;       // m; smaller violations count as feasible

struct Objective {
    const Problem& problem;
    Box region;
    double eps_sq;
    double rp_weight;

    // Stacked residual: data rows, three region rows, and one reference-point row when present.
    Eigen::VectorXd stack(const Evaluation& ev) const {
        const bool has_rp = !problem.scene.ref_points.empty();
        Eigen::VectorXd r(ev.data.size() + 3 + (has_rp ? 1 : 0));
        r.head(ev.data.size()) = ev.data;
        const double w = std::sqrt(kRegionWeight);
        for (int i = 0; i < 3; ++i) {
            const double c = ev.center(i);
            r(ev.data.size() + i) = w * (c - std::clamp(c, region.min(i), region.max(i)));
        }
        if (has_rp) r(r.size() - 1) = std::sqrt(rp_weight) * std::max(0.0, ev.rp_mse - eps_sq);
        return r;
    }

    Eigen::MatrixXd stack_jacobian(const Evaluation& ev) const {
        const bool has_rp = !problem.scene.ref_points.empty();
        Eigen::MatrixXd j = Eigen::MatrixXd::Zero(ev.data.size() + 3 + (has_rp ? 1 : 0), 6);
        j.topRows(ev.data.size()) = ev.data_jac;
        const double w = std::sqrt(kRegionWeight);
        for (int i = 0; i < 3; ++i) {
            const double c = ev.center(i);
            if (c < region.min(i) || c > region.max(i)) j.row(ev.data.size() + i) = w * ev.center_jac.row(i);
        }
        if (has_rp && ev.rp_mse > eps_sq) j.row(j.rows() - 1) = std::sqrt(rp_weight) * ev.rp_grad.transpose();
        return j;
    }

    // Objective value, or +inf if some pixel cannot be back-projected under this pose.
    double cost(const Posed& pose) const {
        try {
            return stack(problem.evaluate(pose, false)).squaredNorm();
        } catch (const Error&) {
            return std::numeric_limits<double>::infinity();
        }
    }
};

struct LmOutcome {
    Vector6d params;
    int iterations{0};
    bool converged{false};
};

LmOutcome levenberg_marquardt(const Objective& obj, Vector6d params, int max_iterations, double step_tol,
                              std::vector<double>& history) {
    LmOutcome out;
    // Start conservatively; FreePnP poses can sit well outside the Gauss-Newton basin.
    double lambda = 1.0;
    Evaluation ev = obj.problem.evaluate(Posed::from_vector(params), true);
    Eigen::VectorXd r = obj.stack(ev);
    double cost = r.squaredNorm();
    if (!std::isfinite(cost)) throw Error(ErrorCode::Divergence, "objective is not finite");
    history.push_back(cost);

    for (int iter = 0; iter < max_iterations; ++iter) {
        if (cost == 0.0) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd j = obj.stack_jacobian(ev);
        const Eigen::Matrix<double, 6, 6> jtj = j.transpose() * j;
        const Vector6d g = j.transpose() * r;

        bool accepted = false;
        bool stop = false;
        while (!accepted) {
            Eigen::Matrix<double, 6, 6> a = jtj;
            for (int i = 0; i < 6; ++i) a(i, i) += lambda * std::max(jtj(i, i), 1e-12);
            const Vector6d step = a.ldlt().solve(-g);
            const Vector6d candidate = params + step;
            const double new_cost = step.allFinite() ? obj.cost(Posed::from_vector(candidate))
                                                     : std::numeric_limits<double>::infinity();
            if (new_cost < cost) {
                const double rel = (cost - new_cost) / cost;
                params = candidate;
                cost = new_cost;
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                history.push_back(cost);
                if (step.norm() < step_tol || rel < 1e-12) stop = true;
            } else {
                lambda *= 10.0;
                if (lambda > 1e16) {
                    // No descent direction left at machine precision: a numerical minimum.
                    stop = true;
                    break;
                }
            }
        }
        out.iterations = iter + 1;
        if (stop) {
            out.converged = true;
            break;
        }
        ev = obj.problem.evaluate(Posed::from_vector(params), true);
        r = obj.stack(ev);
    }
    out.params = params;
    return out;
}

Box resolve_region(const RefineOptions& options, double z0) {
    Box region = options.feasible_region.value_or(Box{});
    if (!options.feasible_region) region.max.z() = z0 - 1e-3;
    if (!(region.max.z() < z0)) throw Error(ErrorCode::InvalidArgument, "feasible region must lie below the ceiling");
    if (!(region.min.array() <= region.max.array()).all())
        throw Error(ErrorCode::InvalidArgument, "feasible region is empty");
    return region;
}

} // namespace

Eigen::VectorXd residuals(const Posed& pose, const Scene& scene, const RefineOptions& options) {
    return Problem(scene, options.sampling_ratio).evaluate(pose, false).data;
}

Eigen::MatrixXd jacobian(const Posed& pose, const Scene& scene, const RefineOptions& options) {
    return Problem(scene, options.sampling_ratio).evaluate(pose, true).data_jac;
}

double ref_point_mse(const Posed& pose, const Scene& scene) {
    Scene rp_only;
    rp_only.camera = scene.camera;
    rp_only.z0 = scene.z0;
    rp_only.ref_points = scene.ref_points;
    return Problem(rp_only, 1.0).evaluate(pose, false).rp_mse;
}

RefineResult refine(const Posed& initial, const Scene& scene, const RefineOptions& options) {
    if (!(options.rp_tolerance > 0.0)) throw Error(ErrorCode::InvalidArgument, "rp_tolerance must be positive");
    if (options.max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be positive");
    const Box region = resolve_region(options, scene.z0);
    const Problem problem(scene, options.sampling_ratio);

    Objective obj{problem, region, options.rp_tolerance * options.rp_tolerance, kRefPointWeight0};
    RefineResult result;
    auto& diag = result.diagnostics;

    try {
        diag.initial_cost = obj.stack(problem.evaluate(initial, false)).squaredNorm();
    } catch (const Error& e) {
        throw Error(ErrorCode::InfeasibleInitializer, std::string("initial pose is infeasible: ") + e.what());
    }

    Vector6d params = initial.vector();
    LmOutcome lm = levenberg_marquardt(obj, params, options.max_iterations, options.convergence_tol, diag.cost_history);
    params = lm.params;
    diag.iterations = lm.iterations;

    const bool has_rp = !scene.ref_points.empty();
    for (int ramp = 0; has_rp && ramp < kRefPointRamps; ++ramp) {
        if (problem.evaluate(Posed::from_vector(params), false).rp_mse <= obj.eps_sq) break;
        obj.rp_weight *= 10.0;
        lm = levenberg_marquardt(obj, params, options.max_iterations, options.convergence_tol, diag.cost_history);
        params = lm.params;
        diag.iterations += lm.iterations;
    }

    result.pose = Posed::from_vector(params).canonical();
    const Evaluation final_ev = problem.evaluate(result.pose, false);
    diag.final_cost = obj.stack(final_ev).squaredNorm();
    diag.clip_count = final_ev.clips;
    diag.status = lm.converged ? RefineStatus::Converged : RefineStatus::MaxIterations;
    const Eigen::Vector3d clamped = final_ev.center.cwiseMax(region.min).cwiseMin(region.max);
    if ((final_ev.center - clamped).norm() > kRegionSlack) {
        diag.constraint_status = ConstraintStatus::RegionViolated;
    } else if (has_rp && final_ev.rp_mse > obj.eps_sq * (1.0 + 1e-9)) {
        diag.constraint_status = ConstraintStatus::RefPointViolated;
    }
    return result;
}

} // namespace lcvlp
