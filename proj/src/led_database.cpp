#include "lcvlp/led_database.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcvlp/error.hpp"

namespace lcvlp {

using nlohmann::json;

Database Database::build(std::vector<LedRecord> records, std::vector<RefPoint> ref_points) {
    if (records.empty()) throw Error(ErrorCode::InvalidArgument, "LED database needs at least one record");
    Database db;
    db.z0_ = records.front().curve.z0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto& rec = records[i];
        // Re-run curve validation so hand-assembled records obey the same invariants.
        rec.curve = LameCurved::make(rec.curve.center_x, rec.curve.center_y, rec.curve.z0, rec.curve.a, rec.curve.b,
                                     rec.curve.gamma, rec.curve.phi);
        if (rec.curve.z0 != db.z0_)
            throw Error(ErrorCode::InconsistentCeiling,
                        "LED " + std::to_string(rec.id) + " is not on the shared ceiling plane");
        if (!db.index_.emplace(rec.id, i).second)
            throw Error(ErrorCode::DuplicateId, "duplicate LED id " + std::to_string(rec.id));
    }
    for (const auto& rp : ref_points) {
        if (!rp.world.allFinite() || !rp.pixel.allFinite())
            throw Error(ErrorCode::InvalidArgument, "reference point coordinates must be finite");
        if (rp.world.z() != db.z0_)
            throw Error(ErrorCode::InconsistentCeiling, "reference point is not on the ceiling plane");
    }
    db.records_ = std::move(records);
    db.ref_points_ = std::move(ref_points);
    return db;
}

const LedRecord& Database::lookup(int id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw Error(ErrorCode::UnknownId, "unknown LED id " + std::to_string(id));
    return records_[it->second];
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const char* where) {
    if (!obj.is_object() || !obj.contains(key))
        throw Error(ErrorCode::Schema, std::string("missing required field \"") + key + "\" in " + where);
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::Schema, std::string("field \"") + key + "\" in " + where + " has the wrong type");
    }
}

} // namespace

std::string database_to_json(const Database& db) {
    json doc;
    doc["version"] = Database::kSchemaVersion;
    doc["z0"] = db.z0();
    json leds = json::array();
    for (const auto& rec : db.records()) {
        leds.push_back({{"id", rec.id},
                        {"cx", rec.curve.center_x},
                        {"cy", rec.curve.center_y},
                        {"a", rec.curve.a},
                        {"b", rec.curve.b},
                        {"gamma", rec.curve.gamma},
                        {"phi", rec.curve.phi}});
    }
    doc["leds"] = std::move(leds);
    json rps = json::array();
    for (const auto& rp : db.ref_points()) {
        rps.push_back({{"x", rp.world.x()}, {"y", rp.world.y()}, {"u", rp.pixel.x()}, {"v", rp.pixel.y()}});
    }
    doc["ref_points"] = std::move(rps);
    return doc.dump(2) + "\n";
}

Database database_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Malformed, std::string("LED database is not valid JSON: ") + e.what());
    }
    const int version = required<int>(doc, "version", "database");
    if (version != Database::kSchemaVersion)
        throw Error(ErrorCode::Schema, "unsupported database schema version " + std::to_string(version));
    const double z0 = required<double>(doc, "z0", "database");
    const json leds = required<json>(doc, "leds", "database");
    if (!leds.is_array()) throw Error(ErrorCode::Schema, "\"leds\" must be an array");

    std::vector<LedRecord> records;
    for (const auto& led : leds) {
        LedRecord rec;
        rec.id = required<int>(led, "id", "led");
        rec.curve = LameCurved::make(required<double>(led, "cx", "led"), required<double>(led, "cy", "led"), z0,
                                     required<double>(led, "a", "led"), required<double>(led, "b", "led"),
                                     required<double>(led, "gamma", "led"), required<double>(led, "phi", "led"));
        records.push_back(rec);
    }

    std::vector<RefPoint> rps;
    if (doc.contains("ref_points")) {
        if (!doc["ref_points"].is_array()) throw Error(ErrorCode::Schema, "\"ref_points\" must be an array");
        for (const auto& rp : doc["ref_points"]) {
            rps.push_back({Eigen::Vector3d(required<double>(rp, "x", "ref_point"), required<double>(rp, "y", "ref_point"), z0),
                           Eigen::Vector2d(required<double>(rp, "u", "ref_point"), required<double>(rp, "v", "ref_point"))});
        }
    }
    return Database::build(std::move(records), std::move(rps));
}

void save(const Database& db, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << database_to_json(db);
}

Database load_database(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return database_from_json(buffer.str());
}

std::vector<Eigen::Vector2d> reference_led_centers() {
    return {{2.0, 2.0}, {2.0, 6.0}, {4.0, 2.0}, {4.0, 6.0}};
}

} // namespace lcvlp
