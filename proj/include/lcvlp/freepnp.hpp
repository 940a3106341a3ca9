#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "lcvlp/camera.hpp"
#include "lcvlp/scene.hpp"

namespace lcvlp {

/// A 3D ceiling point paired with the pixel assumed to be its projection.
struct Correspondence {
    Eigen::Vector3d world{Eigen::Vector3d::Zero()};
    Eigen::Vector2d pixel{Eigen::Vector2d::Zero()};
};

struct FreePnpConfig {
    /// Virtual correspondences generated per LED.
    int samples_per_led{12};
};

/// Centroid of the contour points, used in place of the unknown projection of the LED center.
Eigen::Vector2d projected_center(const Contour& contour);

/// Index of the contour point whose direction from `center` makes the smallest angle with
/// `neighbor_center - center`. Ties resolve to the smallest index.
std::size_t select_start_pixel(const Contour& contour, const Eigen::Vector2d& center,
                               const Eigen::Vector2d& neighbor_center);

/// Local polar angle (in the LED's rotated frame) of the direction towards the neighbor's center.
double start_polar_angle(const LedRecord& led, const LedRecord& neighbor);

/// Reorders a closed contour so that element 0 is `start` and traversal has positive signed area in
/// pixel coordinates, which is the image orientation of counterclockwise (increasing polar angle)
/// travel on the ceiling for a camera below it.
Contour reorder_ccw(const Contour& contour, std::size_t start);

/// floor(k * n / m) for k = 0..m-1.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m);

/// N * M approximate 3D-2D pairs; LED i is paired with its successor (i + 1) mod N.
std::vector<Correspondence> build_virtual_correspondences(const Scene& scene, const FreePnpConfig& config);

/// Poses from coplanar correspondences (all world points share one z). The first comes from the
/// normalized DLT homography decomposition; the others are the two-fold planar ambiguity solutions of
/// the same homography. All are polished on the pixel reprojection error; duplicates are dropped.
std::vector<Posed> planar_pnp_candidates(std::span<const Correspondence> correspondences,
                                         const CameraIntrinsicsd& camera);

/// Pixel RMS of the correspondences reprojected under `pose`; infinite if any point is behind the camera.
double reprojection_rms(const Posed& pose, std::span<const Correspondence> correspondences,
                        const CameraIntrinsicsd& camera);

/// The candidate with the lowest reprojection RMS.
Posed planar_pnp(std::span<const Correspondence> correspondences, const CameraIntrinsicsd& camera);

/// Correspondence-free initial pose from identified LED contours.
Posed freepnp(const Scene& scene, const FreePnpConfig& config = {});
std::vector<Posed> freepnp_candidates(const Scene& scene, const FreePnpConfig& config = {});

} // namespace lcvlp
