#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "lcvlp/lame_curve.hpp"

namespace lcvlp {

/// One ceiling LED: the identity it broadcasts over VLC and its boundary curve.
struct LedRecord {
    int id{0};
    LameCurved curve;

    bool operator==(const LedRecord&) const = default;
};

/// Pre-calibrated reference point: a known ceiling point and its observed pixel.
struct RefPoint {
    Eigen::Vector3d world{Eigen::Vector3d::Zero()};
    Eigen::Vector2d pixel{Eigen::Vector2d::Zero()};

    bool operator==(const RefPoint& other) const { return world == other.world && pixel == other.pixel; }
};

/// Immutable, id-indexed LED parameter store for a single ceiling plane.
class Database {
public:
    inline static constexpr int kSchemaVersion = 1;

    /// Validates and indexes the records. Throws on an empty list, duplicate ids, mixed ceiling
    /// heights or reference points off the ceiling.
    static Database build(std::vector<LedRecord> records, std::vector<RefPoint> ref_points = {});

    const LedRecord& lookup(int id) const;
    bool contains(int id) const { return index_.count(id) != 0; }

    double z0() const { return z0_; }
    std::size_t size() const { return records_.size(); }
    const std::vector<LedRecord>& records() const { return records_; }
    const std::vector<RefPoint>& ref_points() const { return ref_points_; }

    bool operator==(const Database& other) const {
        return z0_ == other.z0_ && records_ == other.records_ && ref_points_ == other.ref_points_;
    }

private:
    std::vector<LedRecord> records_;
    std::vector<RefPoint> ref_points_;
    std::unordered_map<int, std::size_t> index_;
    double z0_{0.0};
};

/// led-db.json text: {version, z0, leds: [{id, cx, cy, a, b, gamma, phi}], ref_points: [{x, y, u, v}]}.
std::string database_to_json(const Database& db);
Database database_from_json(const std::string& text);

void save(const Database& db, const std::filesystem::path& path);
Database load_database(const std::filesystem::path& path);

/// Ceiling LED centers of the reference room (6 m x 8 m x 3 m).
std::vector<Eigen::Vector2d> reference_led_centers();
inline constexpr double kReferenceCeiling = 3.0;

} // namespace lcvlp
