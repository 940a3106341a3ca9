#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "lcvlp/camera.hpp"
#include "lcvlp/lame_curve.hpp"
#include "lcvlp/led_database.hpp"
#include "lcvlp/scene.hpp"

namespace testing_support {

using namespace lcvlp;

inline std::vector<LedRecord> circle_leds(double radius = 0.15) {
    std::vector<LedRecord> leds;
    int id = 1;
    for (const auto& c : reference_led_centers())
        leds.push_back({id++, LameCurved::make(c.x(), c.y(), kReferenceCeiling, radius, radius, 2.0)});
    return leds;
}

/// Camera at `center` whose optical axis is tilted by `tilt` about the world direction (cos az, sin az, 0)
/// away from straight up, after a roll of `roll` about the world vertical.
inline Posed upward_pose(const Eigen::Vector3d& center, double roll = 0.0, double tilt = 0.0, double az = 0.0) {
    const Eigen::Matrix3d r_cw =
        (Eigen::AngleAxisd(tilt, Eigen::Vector3d(std::cos(az), std::sin(az), 0.0)) *
         Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()))
            .toRotationMatrix();
    return Posed::from_center(r_cw, center);
}

/// Projections of `n` points equally spaced in global polar angle, in increasing angle.
inline Contour projected_contour(const LameCurved& curve, const Posed& pose, const CameraIntrinsicsd& k, int n,
                                 double theta0 = 0.0) {
    Contour c;
    for (int i = 0; i < n; ++i) {
        const double th = theta0 + 2.0 * std::numbers::pi * i / n;
        c.push_back(project(k, pose, point_at(curve, th)));
    }
    return c;
}

inline CameraIntrinsicsd wide_camera() { return CameraIntrinsicsd::make(800.0, 800.0, 880.0, 660.0, 1760, 1320); }

inline double rotation_gap_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
    return Eigen::AngleAxisd(a * b.transpose()).angle() * 180.0 / std::numbers::pi;
}

} // namespace testing_support
