#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lcvlp/camera.hpp"
#include "lcvlp/led_database.hpp"

namespace lcvlp {

using Contour = std::vector<Eigen::Vector2d>;

/// Identified LED contour: pixel points along the projected boundary, in boundary order.
struct Observation {
    int led_id{0};
    Contour contour;
};

inline constexpr std::size_t kMinContourPoints = 8;

/// One localization instance. `leds[i]` is the database record observed by `observations[i]`.
struct Scene {
    CameraIntrinsicsd camera;
    double z0{0.0};
    std::vector<LedRecord> leds;
    std::vector<Observation> observations;
    std::vector<RefPoint> ref_points;

    std::size_t size() const { return observations.size(); }
};

/// Checks point count and finiteness; with `check_bounds` also that every point lies in the image.
void validate_observation(const Observation& obs, const CameraIntrinsicsd& camera, bool check_bounds);

/// Resolves observation ids against the database. Reference points from the database are appended
/// after `ref_points`.
Scene make_scene(const Database& db, const CameraIntrinsicsd& camera, std::vector<Observation> observations,
                 std::vector<RefPoint> ref_points = {});

/// Contents of an obs.json document.
struct ObservationDocument {
    CameraIntrinsicsd camera;
    std::vector<Observation> observations;
    std::vector<RefPoint> ref_points;
};

/// obs.json: {intrinsics: {fx, fy, u0, v0, width, height}, observations: [{id, contour: [[u, v], ...]}],
/// ref_points: [{x, y, u, v}]}. Reference point z is filled in from `z0`.
ObservationDocument observation_document_from_json(const std::string& text, double z0);
std::string observation_document_to_json(const ObservationDocument& doc);
ObservationDocument load_observation_document(const std::filesystem::path& path, double z0);

} // namespace lcvlp
