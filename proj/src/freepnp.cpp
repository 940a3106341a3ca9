#include "lcvlp/freepnp.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "lcvlp/error.hpp"

namespace lcvlp {

Eigen::Vector2d projected_center(const Contour& contour) {
    if (contour.empty()) throw Error(ErrorCode::InvalidArgument, "empty contour");
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto& p : contour) sum += p;
    return sum / static_cast<double>(contour.size());
}

std::size_t select_start_pixel(const Contour& contour, const Eigen::Vector2d& center,
                               const Eigen::Vector2d& neighbor_center) {
    const Eigen::Vector2d dir = neighbor_center - center;
    if (!(dir.norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "neighbor center coincides with the LED center");
    if (contour.empty()) throw Error(ErrorCode::InvalidArgument, "empty contour");
    std::size_t best = 0;
    double best_angle = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < contour.size(); ++k) {
        const Eigen::Vector2d v = contour[k] - center;
        // A point sitting on the center has no direction; rank it last.
        const double angle = v.norm() > 0.0 ? std::atan2(std::abs(v.x() * dir.y() - v.y() * dir.x()), v.dot(dir))
                                            : std::numbers::pi;
        if (angle < best_angle) {
            best_angle = angle;
            best = k;
        }
    }
    return best;
}

double start_polar_angle(const LedRecord& led, const LedRecord& neighbor) {
    const double dx = neighbor.curve.center_x - led.curve.center_x;
    const double dy = neighbor.curve.center_y - led.curve.center_y;
    if (dx == 0.0 && dy == 0.0) throw Error(ErrorCode::InvalidArgument, "LED centers coincide");
    return std::atan2(dy, dx) - led.curve.phi;
}

namespace {

double signed_area(const Contour& contour) {
    double twice = 0.0;
    const std::size_t n = contour.size();
    for (std::size_t k = 0; k < n; ++k) {
        const auto& p = contour[k];
        const auto& q = contour[(k + 1) % n];
        twice += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * twice;
}

// Net turning of the direction from the centroid; +-2*pi for a contour delivered in boundary order.
double winding_angle(const Contour& contour) {
    const Eigen::Vector2d c = projected_center(contour);
    double total = 0.0;
    const std::size_t n = contour.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Eigen::Vector2d a = contour[k] - c;
        const Eigen::Vector2d b = contour[(k + 1) % n] - c;
        total += std::atan2(a.x() * b.y() - a.y() * b.x(), a.dot(b));
    }
    return total;
}

} // namespace

Contour reorder_ccw(const Contour& contour, std::size_t start) {
    const std::size_t n = contour.size();
    if (n < 3) throw Error(ErrorCode::Degenerate, "contour needs at least three points");
    if (start >= n) throw Error(ErrorCode::InvalidArgument, "start index out of range");

    double extent = 0.0;
    const Eigen::Vector2d c = projected_center(contour);
    for (const auto& p : contour) extent = std::max(extent, (p - c).norm());
    const double area = signed_area(contour);
    if (!(std::abs(area) > 1e-12 * std::max(extent * extent, 1e-300)))
        throw Error(ErrorCode::Degenerate, "contour encloses no area");

    Contour out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = area > 0.0 ? contour[(start + k) % n] : contour[(start + n - k) % n];
    return out;
}

std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m) {
    if (m == 0 || n < m) throw Error(ErrorCode::InvalidArgument, "need at least as many points as samples");
    std::vector<std::size_t> idx(m);
    for (std::size_t k = 0; k < m; ++k) idx[k] = k * n / m;
    return idx;
}

std::vector<Correspondence> build_virtual_correspondences(const Scene& scene, const FreePnpConfig& config) {
    const std::size_t n_leds = scene.observations.size();
    if (n_leds < 2 || scene.leds.size() != n_leds)
        throw Error(ErrorCode::InsufficientObservations, "at least two identified LEDs are required");
    if (config.samples_per_led < 4) throw Error(ErrorCode::InvalidArgument, "samples_per_led must be at least 4");
    const auto m = static_cast<std::size_t>(config.samples_per_led);

    std::vector<Eigen::Vector2d> centers(n_leds);
    for (std::size_t i = 0; i < n_leds; ++i) {
        const auto& contour = scene.observations[i].contour;
        if (contour.size() < m)
            throw Error(ErrorCode::InvalidArgument, "contour of LED " + std::to_string(scene.observations[i].led_id) +
                                                        " has fewer points than samples_per_led");
        // A contour not delivered in boundary order cannot be matched to polar-angle samples.
        if (std::abs(std::abs(winding_angle(contour)) - 2.0 * std::numbers::pi) > std::numbers::pi)
            throw Error(ErrorCode::InvalidArgument,
                        "contour of LED " + std::to_string(scene.observations[i].led_id) + " is not in boundary order");
        centers[i] = projected_center(contour);
    }

    std::vector<Correspondence> out;
    out.reserve(n_leds * m);
    for (std::size_t i = 0; i < n_leds; ++i) {
        const std::size_t j = (i + 1) % n_leds;
        const auto& contour = scene.observations[i].contour;
        const std::size_t start = select_start_pixel(contour, centers[i], centers[j]);
        const double beta = start_polar_angle(scene.leds[i], scene.leds[j]);
        const auto world = sample_polar(scene.leds[i].curve, beta, config.samples_per_led);
        const Contour ordered = reorder_ccw(contour, start);
        const auto idx = sample_indices(ordered.size(), m);
        for (std::size_t k = 0; k < m; ++k) out.push_back({world[k], ordered[idx[k]]});
    }
    return out;
}

namespace {

// Similarity transform taking points to zero mean and mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= static_cast<double>(pts.size());
    double dist = 0.0;
    for (const auto& p : pts) dist += (p - mean).norm();
    dist /= static_cast<double>(pts.size());
    const double s = dist > 0.0 ? std::sqrt(2.0) / dist : 1.0;
    Eigen::Matrix3d t;
    t << s, 0, -s * mean.x(), 0, s, -s * mean.y(), 0, 0, 1;
    return t;
}

// Gauss-Newton on the pixel reprojection error; keeps the input pose if no step improves it.
Posed polish_reprojection(Posed pose, std::span<const Correspondence> corr, const CameraIntrinsicsd& k) {
    const auto n = static_cast<Eigen::Index>(corr.size());
    const auto cost_of = [&](const Posed& p, Eigen::VectorXd* r, Eigen::MatrixXd* j) {
        const Eigen::Matrix3d rot = p.rotation();
        std::array<Eigen::Matrix3d, 3> dr;
        if (j) dr = rodrigues_derivatives(p.omega);
        double cost = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& c = corr[static_cast<std::size_t>(i)];
            const Eigen::Vector3d xc = rot * c.world + p.t;
            if (!(xc.z() > 1e-9)) return std::numeric_limits<double>::infinity();
            const Eigen::Vector2d e(k.fx * xc.x() / xc.z() + k.u0 - c.pixel.x(), k.fy * xc.y() / xc.z() + k.v0 - c.pixel.y());
            cost += e.squaredNorm();
            if (r) r->segment<2>(2 * i) = e;
            if (j) {
                Eigen::Matrix<double, 2, 3> dp;
                dp << k.fx / xc.z(), 0.0, -k.fx * xc.x() / (xc.z() * xc.z()), 0.0, k.fy / xc.z(),
                    -k.fy * xc.y() / (xc.z() * xc.z());
                for (int a = 0; a < 3; ++a) j->block<2, 1>(2 * i, a) = dp * (dr[a] * c.world);
                j->block<2, 3>(2 * i, 3) = dp;
            }
        }
        return cost;
    };
    Eigen::VectorXd r(2 * n);
    Eigen::MatrixXd j(2 * n, 6);
    double cost = cost_of(pose, &r, &j);
    if (!std::isfinite(cost)) return pose;
    double lambda = 1e-3;
    for (int iter = 0; iter < 50; ++iter) {
        const Eigen::Matrix<double, 6, 6> jtj = j.transpose() * j;
        const Eigen::Matrix<double, 6, 1> g = j.transpose() * r;
        bool accepted = false;
        while (lambda < 1e12) {
            Eigen::Matrix<double, 6, 6> a = jtj;
            for (int d = 0; d < 6; ++d) a(d, d) += lambda * std::max(jtj(d, d), 1e-12);
            const Eigen::Matrix<double, 6, 1> step = a.ldlt().solve(-g);
            const Posed trial = Posed::from_vector(pose.vector() + step);
            const double c = cost_of(trial, nullptr, nullptr);
            if (c < cost) {
                const bool done = (cost - c) < 1e-12 * cost || step.norm() < 1e-12;
                pose = trial;
                lambda = std::max(lambda * 0.1, 1e-12);
                accepted = true;
                cost = cost_of(pose, &r, &j);
                if (done) return pose.canonical();
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) break;
    }
    return pose.canonical();
}

double rotation_gap(const Posed& a, const Posed& b) {
    return (a.rotation() - b.rotation()).norm();
}

// The two rotations consistent with the first-order behaviour of the homography at the plane point
// `origin` (Collins and Bartoli's infinitesimal plane-based decomposition). `hom` maps plane (x, y, 1)
// to normalized rays. Rotations map plane-frame axes to camera axes.
std::vector<Eigen::Matrix3d> ambiguity_rotations(const Eigen::Matrix3d& hom, const Eigen::Vector2d& origin) {
    Eigen::Matrix3d shift = Eigen::Matrix3d::Identity();
    shift.block<2, 1>(0, 2) = origin;
    Eigen::Matrix3d h = hom * shift;
    if (!(std::abs(h(2, 2)) > 0.0)) return {};
    h /= h(2, 2);
    const Eigen::Vector2d v(h(0, 2), h(1, 2));
    Eigen::Matrix2d jac;
    jac << h(0, 0) - h(2, 0) * v.x(), h(0, 1) - h(2, 1) * v.x(), h(1, 0) - h(2, 0) * v.y(),
        h(1, 1) - h(2, 1) * v.y();

    // Rotation taking the optical axis onto the ray through v.
    Eigen::Matrix3d rv = Eigen::Matrix3d::Identity();
    const double tn = v.norm();
    if (tn > 1e-15) {
        const double sn = std::sqrt(1.0 + tn * tn);
        const double cth = 1.0 / sn;
        const double sth = std::sqrt(1.0 - 1.0 / (sn * sn));
        Eigen::Matrix3d kx = Eigen::Matrix3d::Zero();
        kx.block<2, 1>(0, 2) = v / tn;
        kx.block<1, 2>(2, 0) = -v.transpose() / tn;
        rv += sth * kx + (1.0 - cth) * kx * kx;
    }
    Eigen::Matrix<double, 2, 3> proj;
    proj << 1.0, 0.0, -v.x(), 0.0, 1.0, -v.y();
    const Eigen::Matrix2d b = proj * rv.leftCols<2>();
    if (!(std::abs(b.determinant()) > 1e-15)) return {};
    const Eigen::Matrix2d a = b.inverse() * jac;
    const Eigen::Matrix2d aat = a * a.transpose();
    const double gamma = std::sqrt(0.5 * (aat(0, 0) + aat(1, 1) +
                                          std::sqrt((aat(0, 0) - aat(1, 1)) * (aat(0, 0) - aat(1, 1)) +
                                                    4.0 * aat(0, 1) * aat(0, 1))));
    if (!(gamma > 0.0)) return {};
    const Eigen::Matrix2d r22 = a / gamma;
    const Eigen::Matrix2d hh = Eigen::Matrix2d::Identity() - r22.transpose() * r22;
    Eigen::Vector2d bb(std::sqrt(std::max(0.0, hh(0, 0))), std::sqrt(std::max(0.0, hh(1, 1))));
    if (hh(0, 1) < 0.0) bb.y() = -bb.y();
    const Eigen::Vector3d d = Eigen::Vector3d(r22(0, 0), r22(1, 0), bb.x()).cross(Eigen::Vector3d(r22(0, 1), r22(1, 1), bb.y()));
    Eigen::Matrix3d m1, m2;
    m1 << r22(0, 0), r22(0, 1), d.x(), r22(1, 0), r22(1, 1), d.y(), bb.x(), bb.y(), d.z();
    m2 << r22(0, 0), r22(0, 1), -d.x(), r22(1, 0), r22(1, 1), -d.y(), -bb.x(), -bb.y(), d.z();
    std::vector<Eigen::Matrix3d> out;
    for (const auto& m : {m1, m2}) {
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(rv * m, Eigen::ComputeFullU | Eigen::ComputeFullV);
        Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
        if (r.determinant() < 0.0) continue;
        out.push_back(r);
    }
    return out;
}

} // namespace

std::vector<Posed> planar_pnp_candidates(std::span<const Correspondence> correspondences,
                                         const CameraIntrinsicsd& camera) {
    const std::size_t n = correspondences.size();
    if (n < 4) throw Error(ErrorCode::Degenerate, "planar PnP needs at least four correspondences");
    const double z0 = correspondences.front().world.z();

    std::vector<Eigen::Vector2d> plane(n), image(n);
    for (std::size_t k = 0; k < n; ++k) {
        const auto& c = correspondences[k];
        if (std::abs(c.world.z() - z0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "world points are not coplanar");
        plane[k] = c.world.head<2>();
        image[k] = camera.ray(c.pixel).head<2>();
    }

    // Collinear world points leave the homography under-determined.
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : plane) mean += p;
    mean /= static_cast<double>(n);
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : plane) cov += (p - mean) * (p - mean).transpose();
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
    if (!(ev(0) > 1e-12 * ev(1))) throw Error(ErrorCode::Degenerate, "world points are collinear");

    const Eigen::Matrix3d tp = normalizing_transform(plane);
    const Eigen::Matrix3d ti = normalizing_transform(image);
    Eigen::MatrixXd a(2 * n, 9);
    for (std::size_t k = 0; k < n; ++k) {
        const Eigen::Vector3d x = tp * plane[k].homogeneous();
        const Eigen::Vector3d u = ti * image[k].homogeneous();
        const auto r = static_cast<Eigen::Index>(2 * k);
        a.row(r) << x.transpose(), 0, 0, 0, -u.x() * x.transpose();
        a.row(r + 1) << 0, 0, 0, x.transpose(), -u.y() * x.transpose();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd sv = svd.singularValues();
    if (!(sv(7) > 1e-10 * sv(0))) throw Error(ErrorCode::Degenerate, "homography system is rank deficient");
    const Eigen::VectorXd h = svd.matrixV().col(8);
    Eigen::Matrix3d hn;
    hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
    // Maps plane (x, y, 1) to normalized camera rays, up to scale: [r1 r2 z0*r3 + t].
    Eigen::Matrix3d hom = ti.inverse() * hn * tp;

    double depth_sum = 0.0;
    for (const auto& p : plane) depth_sum += (hom * p.homogeneous()).z();
    if (depth_sum < 0.0) hom = -hom;
    for (const auto& p : plane) {
        if (!((hom * p.homogeneous()).z() > 0.0))
            throw Error(ErrorCode::NoPositiveDepthSolution, "no homography sign gives positive depths");
    }

    const double scale = 2.0 / (hom.col(0).norm() + hom.col(1).norm());
    Eigen::Matrix3d approx;
    approx.col(0) = scale * hom.col(0);
    approx.col(1) = scale * hom.col(1);
    approx.col(2) = approx.col(0).cross(approx.col(1));
    Eigen::JacobiSVD<Eigen::Matrix3d> rsvd(approx, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    fix(2, 2) = (rsvd.matrixU() * rsvd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Eigen::Matrix3d r = rsvd.matrixU() * fix * rsvd.matrixV().transpose();
    const Eigen::Vector3d t = scale * hom.col(2) - z0 * r.col(2);

    std::vector<Posed> out{polish_reprojection(Posed::from_rotation(r, t), correspondences, camera)};
    for (const auto& rot : ambiguity_rotations(hom, mean)) {
        // Rotation of the plane frame centered at (mean, z0); translation by least squares.
        Eigen::MatrixXd m(2 * n, 3);
        Eigen::VectorXd rhs(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            const Eigen::Vector3d x(plane[k].x() - mean.x(), plane[k].y() - mean.y(), 0.0);
            Eigen::Matrix<double, 2, 3> p;
            p << 1.0, 0.0, -image[k].x(), 0.0, 1.0, -image[k].y();
            const auto row = static_cast<Eigen::Index>(2 * k);
            m.block<2, 3>(row, 0) = p;
            rhs.segment<2>(row) = -p * (rot * x);
        }
        const Eigen::Vector3d tc = m.colPivHouseholderQr().solve(rhs);
        const Eigen::Vector3d tw = tc - rot * Eigen::Vector3d(mean.x(), mean.y(), z0);
        bool in_front = true;
        for (const auto& c : correspondences) in_front = in_front && (rot * c.world + tw).z() > 0.0;
        if (!in_front) continue;
        const Posed cand = polish_reprojection(Posed::from_rotation(rot, tw), correspondences, camera);
        bool duplicate = false;
        for (const auto& o : out)
            duplicate = duplicate || (rotation_gap(o, cand) < 1e-6 && (o.t - cand.t).norm() < 1e-6);
        if (!duplicate) out.push_back(cand);
    }
    return out;
}

double reprojection_rms(const Posed& pose, std::span<const Correspondence> correspondences,
                        const CameraIntrinsicsd& camera) {
    double sum = 0.0;
    for (const auto& c : correspondences) {
        const Eigen::Vector3d xc = pose.rotation() * c.world + pose.t;
        if (!(xc.z() > 1e-9)) return std::numeric_limits<double>::infinity();
        const Eigen::Vector2d px(camera.fx * xc.x() / xc.z() + camera.u0, camera.fy * xc.y() / xc.z() + camera.v0);
        sum += (px - c.pixel).squaredNorm();
    }
    return std::sqrt(sum / static_cast<double>(correspondences.size()));
}

Posed planar_pnp(std::span<const Correspondence> correspondences, const CameraIntrinsicsd& camera) {
    const auto cands = planar_pnp_candidates(correspondences, camera);
    std::size_t best = 0;
    double best_rms = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const double rms = reprojection_rms(cands[i], correspondences, camera);
        if (rms < best_rms) {
            best_rms = rms;
            best = i;
        }
    }
    return cands[best];
}

std::vector<Posed> freepnp_candidates(const Scene& scene, const FreePnpConfig& config) {
    const auto corr = build_virtual_correspondences(scene, config);
    return planar_pnp_candidates(corr, scene.camera);
}

Posed freepnp(const Scene& scene, const FreePnpConfig& config) {
    const auto corr = build_virtual_correspondences(scene, config);
    return planar_pnp(corr, scene.camera);
}

} // namespace lcvlp
