#include "lcvlp/scene.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lcvlp/error.hpp"

namespace lcvlp {

using nlohmann::json;

void validate_observation(const Observation& obs, const CameraIntrinsicsd& camera, bool check_bounds) {
    if (obs.contour.size() < kMinContourPoints)
        throw Error(ErrorCode::InvalidArgument, "contour of LED " + std::to_string(obs.led_id) + " has fewer than " +
                                                    std::to_string(kMinContourPoints) + " points");
    for (const auto& p : obs.contour) {
        if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "contour point is not finite");
        if (check_bounds && (p.x() < 0.0 || p.y() < 0.0 || p.x() > camera.width || p.y() > camera.height))
            throw Error(ErrorCode::InvalidArgument,
                        "contour point of LED " + std::to_string(obs.led_id) + " is outside the image");
    }
}

Scene make_scene(const Database& db, const CameraIntrinsicsd& camera, std::vector<Observation> observations,
                 std::vector<RefPoint> ref_points) {
    Scene scene;
    scene.camera = camera;
    scene.z0 = db.z0();
    scene.leds.reserve(observations.size());
    for (const auto& obs : observations) scene.leds.push_back(db.lookup(obs.led_id));
    scene.observations = std::move(observations);
    scene.ref_points = std::move(ref_points);
    for (const auto& rp : db.ref_points()) scene.ref_points.push_back(rp);
    return scene;
}

namespace {

double number(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_number())
        throw Error(ErrorCode::Schema, std::string("missing or non-numeric field \"") + key + "\"");
    return obj.at(key).get<double>();
}

} // namespace

ObservationDocument observation_document_from_json(const std::string& text, double z0) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Malformed, std::string("observation file is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("intrinsics") || !doc.contains("observations"))
        throw Error(ErrorCode::Schema, "observation file needs \"intrinsics\" and \"observations\"");

    const json& k = doc["intrinsics"];
    ObservationDocument out;
    out.camera = CameraIntrinsicsd::make(number(k, "fx"), number(k, "fy"), number(k, "u0"), number(k, "v0"),
                                         static_cast<int>(number(k, "width")), static_cast<int>(number(k, "height")));

    if (!doc["observations"].is_array()) throw Error(ErrorCode::Schema, "\"observations\" must be an array");
    for (const auto& o : doc["observations"]) {
        Observation obs;
        obs.led_id = static_cast<int>(number(o, "id"));
        if (!o.contains("contour") || !o["contour"].is_array())
            throw Error(ErrorCode::Schema, "observation needs a \"contour\" array");
        for (const auto& p : o["contour"]) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw Error(ErrorCode::Schema, "contour points must be [u, v] pairs");
            obs.contour.emplace_back(p[0].get<double>(), p[1].get<double>());
        }
        validate_observation(obs, out.camera, true);
        out.observations.push_back(std::move(obs));
    }

    if (doc.contains("ref_points")) {
        if (!doc["ref_points"].is_array()) throw Error(ErrorCode::Schema, "\"ref_points\" must be an array");
        for (const auto& rp : doc["ref_points"]) {
            out.ref_points.push_back({Eigen::Vector3d(number(rp, "x"), number(rp, "y"), z0),
                                      Eigen::Vector2d(number(rp, "u"), number(rp, "v"))});
        }
    }
    return out;
}

std::string observation_document_to_json(const ObservationDocument& doc) {
    json out;
    out["intrinsics"] = {{"fx", doc.camera.fx},       {"fy", doc.camera.fy},         {"u0", doc.camera.u0},
                         {"v0", doc.camera.v0},       {"width", doc.camera.width}, {"height", doc.camera.height}};
    json observations = json::array();
    for (const auto& obs : doc.observations) {
        json contour = json::array();
        for (const auto& p : obs.contour) contour.push_back({p.x(), p.y()});
        observations.push_back({{"id", obs.led_id}, {"contour", std::move(contour)}});
    }
    out["observations"] = std::move(observations);
    json rps = json::array();
    for (const auto& rp : doc.ref_points)
        rps.push_back({{"x", rp.world.x()}, {"y", rp.world.y()}, {"u", rp.pixel.x()}, {"v", rp.pixel.y()}});
    out["ref_points"] = std::move(rps);
    return out.dump() + "\n";
}

ObservationDocument load_observation_document(const std::filesystem::path& path, double z0) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return observation_document_from_json(buffer.str(), z0);
}

} // namespace lcvlp
