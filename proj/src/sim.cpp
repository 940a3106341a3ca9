#include "lcvlp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <Eigen/Geometry>
#include <json.hpp>

#include "lcvlp/error.hpp"
#include "lcvlp/pipeline.hpp"

namespace lcvlp {

using nlohmann::json;

void ScenarioConfig::validate() const {
    if (leds.empty()) throw Error(ErrorCode::InvalidArgument, "scenario has no LEDs");
    Database::build(leds);
    for (const auto& led : leds) {
        if (led.curve.z0 != z0) throw Error(ErrorCode::InconsistentCeiling, "LED is not on the scenario ceiling");
    }
    if (!room.min.allFinite() || !room.max.allFinite() || !(room.min.array() < room.max.array()).all())
        throw Error(ErrorCode::InvalidArgument, "room box is empty or unbounded");
    if (room.max.z() != z0) throw Error(ErrorCode::InconsistentCeiling, "room height must equal the ceiling height");
    if (!(noise_std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise_std must be non-negative");
    if (trials < 1) throw Error(ErrorCode::InvalidArgument, "trials must be at least 1");
    if (min_visible_leds < 2) throw Error(ErrorCode::InvalidArgument, "min_visible_leds must be at least 2");
    if (!(contour_density > 0.0)) throw Error(ErrorCode::InvalidArgument, "contour_density must be positive");
    const auto& ps = pose_sampler;
    if (!(ps.inset >= 0.0) || !(2.0 * ps.inset < std::min(room.max.x() - room.min.x(), room.max.y() - room.min.y())))
        throw Error(ErrorCode::InvalidArgument, "pose_sampler.inset leaves no room footprint");
    if (!(ps.height_min <= ps.height_max) || !(ps.height_min > room.min.z()) || !(ps.height_max < z0))
        throw Error(ErrorCode::InvalidArgument, "pose_sampler height range must lie inside the room");
    if (!(ps.max_tilt >= 0.0) || !(ps.max_tilt < std::numbers::pi / 2.0))
        throw Error(ErrorCode::InvalidArgument, "pose_sampler.max_tilt must be in [0, pi/2)");
    if (!(ps.roll_min <= ps.roll_max)) throw Error(ErrorCode::InvalidArgument, "pose_sampler roll range is empty");
    if (freepnp.samples_per_led < 4) throw Error(ErrorCode::InvalidArgument, "samples_per_led must be at least 4");
    if (!(refine.sampling_ratio > 0.0) || refine.sampling_ratio > 1.0)
        throw Error(ErrorCode::InvalidArgument, "sampling_ratio must be in (0, 1]");
}

void scale_leds(ScenarioConfig& config, double factor) {
    if (!(factor > 0.0) || !std::isfinite(factor)) throw Error(ErrorCode::InvalidArgument, "led scale must be positive");
    for (auto& led : config.leds) {
        const auto& c = led.curve;
        led.curve = LameCurved::make(c.center_x, c.center_y, c.z0, c.a * factor, c.b * factor, c.gamma, c.phi);
    }
}

ScenarioConfig scenario_preset(const std::string& name, const std::string& shape) {
    struct Shape {
        double gamma, a, b;
    };
    const auto shape_of = [](const std::string& s) -> Shape {
        if (s == "rhombus") return {1.0, 0.15, 0.12};
        if (s == "square") return {1.0, 0.15, 0.15};
        if (s == "ellipse") return {2.0, 0.15, 0.12};
        if (s == "circle") return {2.0, 0.15, 0.15};
        if (s == "rectangle") return {100.0, 0.15, 0.12};
        throw Error(ErrorCode::InvalidArgument, "unknown shape \"" + s + "\"");
    };

    std::vector<Shape> shapes;
    if (name == "A") {
        shapes.assign(4, shape_of("circle"));
    } else if (name == "B") {
        shapes.assign(4, shape_of("rectangle"));
    } else if (name == "C") {
        shapes.assign(4, shape_of(shape));
    } else if (name == "D") {
        shapes = {shape_of("rhombus"), shape_of("ellipse"), shape_of("circle"), shape_of("rectangle")};
    } else {
        throw Error(ErrorCode::InvalidArgument, "unknown scenario \"" + name + "\"");
    }

    ScenarioConfig config;
    config.name = name == "C" ? "C-" + shape : name;
    config.z0 = kReferenceCeiling;
    config.room.min = Eigen::Vector3d::Zero();
    config.room.max = Eigen::Vector3d(6.0, 8.0, kReferenceCeiling);
    const auto centers = reference_led_centers();
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto& s = shapes[i];
        config.leds.push_back({static_cast<int>(i + 1),
                               LameCurved::make(centers[i].x(), centers[i].y(), config.z0, s.a, s.b, s.gamma, 0.0)});
    }
    return config;
}

std::string config_to_json(const ScenarioConfig& config) {
    json doc;
    doc["name"] = config.name;
    doc["database"] = json::parse(database_to_json(Database::build(config.leds)));
    doc["room"] = {{"min", {config.room.min.x(), config.room.min.y(), config.room.min.z()}},
                   {"max", {config.room.max.x(), config.room.max.y(), config.room.max.z()}}};
    const auto& k = config.camera;
    doc["camera"] = {{"fx", k.fx}, {"fy", k.fy}, {"u0", k.u0}, {"v0", k.v0}, {"width", k.width}, {"height", k.height}};
    doc["noise_std"] = config.noise_std;
    doc["trials"] = config.trials;
    doc["seed"] = config.seed;
    const auto& ps = config.pose_sampler;
    doc["pose_sampler"] = {{"inset", ps.inset},       {"height_min", ps.height_min}, {"height_max", ps.height_max},
                           {"max_tilt", ps.max_tilt}, {"roll_min", ps.roll_min},     {"roll_max", ps.roll_max}};
    doc["contour_density"] = config.contour_density;
    doc["min_visible_leds"] = config.min_visible_leds;
    doc["samples_per_led"] = config.freepnp.samples_per_led;
    doc["refine"] = {{"sampling_ratio", config.refine.sampling_ratio},
                     {"rp_tolerance", config.refine.rp_tolerance},
                     {"max_iterations", config.refine.max_iterations},
                     {"convergence_tol", config.refine.convergence_tol}};
    doc["led_semi_angle_deg"] = config.led_semi_angle_deg;
    return doc.dump(2) + "\n";
}

namespace {

template <typename T>
T field(const json& obj, const char* key, const char* where) {
    if (!obj.is_object() || !obj.contains(key))
        throw Error(ErrorCode::Schema, std::string("missing config field \"") + where + key + "\"");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::Schema, std::string("config field \"") + where + key + "\" has the wrong type");
    }
}

template <typename T>
T field_or(const json& obj, const char* key, const char* where, T fallback) {
    return obj.is_object() && obj.contains(key) ? field<T>(obj, key, where) : fallback;
}

Eigen::Vector3d vec3(const json& v, const char* what) {
    if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
        throw Error(ErrorCode::Schema, std::string("config field \"") + what + "\" must be a 3-vector");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

} // namespace

ScenarioConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Malformed, std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw Error(ErrorCode::Schema, "config must be a JSON object");

    ScenarioConfig config;
    config.name = field_or<std::string>(doc, "name", "", config.name);
    const Database db = database_from_json(field<json>(doc, "database", "").dump());
    config.leds = db.records();
    config.z0 = db.z0();
    const json room = field<json>(doc, "room", "");
    config.room.min = vec3(field<json>(room, "min", "room."), "room.min");
    config.room.max = vec3(field<json>(room, "max", "room."), "room.max");
    if (doc.contains("camera")) {
        const json& k = doc["camera"];
        config.camera = CameraIntrinsicsd::make(field<double>(k, "fx", "camera."), field<double>(k, "fy", "camera."),
                                                field<double>(k, "u0", "camera."), field<double>(k, "v0", "camera."),
                                                field<int>(k, "width", "camera."), field<int>(k, "height", "camera."));
    }
    config.noise_std = field_or(doc, "noise_std", "", config.noise_std);
    config.trials = field_or(doc, "trials", "", config.trials);
    config.seed = field_or(doc, "seed", "", config.seed);
    if (doc.contains("pose_sampler")) {
        const json& p = doc["pose_sampler"];
        auto& ps = config.pose_sampler;
        ps.inset = field_or(p, "inset", "pose_sampler.", ps.inset);
        ps.height_min = field_or(p, "height_min", "pose_sampler.", ps.height_min);
        ps.height_max = field_or(p, "height_max", "pose_sampler.", ps.height_max);
        ps.max_tilt = field_or(p, "max_tilt", "pose_sampler.", ps.max_tilt);
        ps.roll_min = field_or(p, "roll_min", "pose_sampler.", ps.roll_min);
        ps.roll_max = field_or(p, "roll_max", "pose_sampler.", ps.roll_max);
    }
    config.contour_density = field_or(doc, "contour_density", "", config.contour_density);
    config.min_visible_leds = field_or(doc, "min_visible_leds", "", config.min_visible_leds);
    config.freepnp.samples_per_led = field_or(doc, "samples_per_led", "", config.freepnp.samples_per_led);
    if (doc.contains("refine")) {
        const json& r = doc["refine"];
        auto& ro = config.refine;
        ro.sampling_ratio = field_or(r, "sampling_ratio", "refine.", ro.sampling_ratio);
        ro.rp_tolerance = field_or(r, "rp_tolerance", "refine.", ro.rp_tolerance);
        ro.max_iterations = field_or(r, "max_iterations", "refine.", ro.max_iterations);
        ro.convergence_tol = field_or(r, "convergence_tol", "refine.", ro.convergence_tol);
    }
    config.led_semi_angle_deg = field_or(doc, "led_semi_angle_deg", "", config.led_semi_angle_deg);
    config.validate();
    return config;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

std::string apply_overrides(const std::string& config_json, const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = json::parse(config_json);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Malformed, std::string("config is not valid JSON: ") + e.what());
    }
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0)
            throw Error(ErrorCode::InvalidArgument, "override \"" + item + "\" is not key=value");
        const std::string key = item.substr(0, eq);
        const std::string text = item.substr(eq + 1);
        json value;
        try {
            value = json::parse(text);
        } catch (const json::parse_error&) {
            value = text;
        }
        json* node = &doc;
        std::size_t pos = 0;
        while (true) {
            const auto dot = key.find('.', pos);
            const std::string part = key.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
            if (!node->is_object() || !node->contains(part))
                throw Error(ErrorCode::InvalidArgument, "unknown config field \"" + key + "\"");
            node = &(*node)[part];
            if (dot == std::string::npos) break;
            pos = dot + 1;
        }
        *node = value;
    }
    return doc.dump(2) + "\n";
}

namespace {

constexpr int kVisibilitySamples = 256;
constexpr int kPoseAttempts = 10000;
constexpr int kDenseSamples = 4096;
constexpr std::size_t kMinSynthPoints = 90;

bool visible(const LedRecord& led, const Eigen::Matrix3d& r, const Eigen::Vector3d& t, const CameraIntrinsicsd& k,
             double margin) {
    for (int j = 0; j < kVisibilitySamples; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / kVisibilitySamples;
        const Eigen::Vector3d xc = r * point_at(led.curve, theta) + t;
        if (!(xc.z() > 1e-9)) return false;
        const double u = k.fx * xc.x() / xc.z() + k.u0;
        const double v = k.fy * xc.y() / xc.z() + k.v0;
        if (u < margin || v < margin || u > k.width - 1 - margin || v > k.height - 1 - margin) return false;
    }
    return true;
}

} // namespace

bool led_fully_visible(const LedRecord& led, const Posed& pose, const CameraIntrinsicsd& camera, double margin) {
    return visible(led, pose.rotation(), pose.t, camera, margin);
}

std::vector<std::size_t> visible_leds(const ScenarioConfig& config, const Posed& pose) {
    const Eigen::Matrix3d r = pose.rotation();
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < config.leds.size(); ++i) {
        if (visible(config.leds[i], r, pose.t, config.camera, 1.0)) out.push_back(i);
    }
    return out;
}

Posed sample_pose(const ScenarioConfig& config, Rng& rng) {
    const auto& ps = config.pose_sampler;
    std::uniform_real_distribution<double> ux(config.room.min.x() + ps.inset, config.room.max.x() - ps.inset);
    std::uniform_real_distribution<double> uy(config.room.min.y() + ps.inset, config.room.max.y() - ps.inset);
    std::uniform_real_distribution<double> uz(ps.height_min, ps.height_max);
    std::uniform_real_distribution<double> uaxis(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> utilt(0.0, ps.max_tilt);
    std::uniform_real_distribution<double> uroll(ps.roll_min, ps.roll_max);

    for (int attempt = 0; attempt < kPoseAttempts; ++attempt) {
        const Eigen::Vector3d center(ux(rng), uy(rng), uz(rng));
        const double alpha = uaxis(rng);
        const double tilt = utilt(rng);
        const double roll = uroll(rng);
        const Eigen::Matrix3d r_cw =
            (Eigen::AngleAxisd(tilt, Eigen::Vector3d(std::cos(alpha), std::sin(alpha), 0.0)) *
             Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitZ()))
                .toRotationMatrix();
        const Eigen::Matrix3d r = r_cw.transpose();
        const Eigen::Vector3d t = -r * center;
        int count = 0;
        for (const auto& led : config.leds) count += visible(led, r, t, config.camera, 1.0) ? 1 : 0;
        if (count >= config.min_visible_leds) return Posed::from_rotation(r, t);
    }
    throw Error(ErrorCode::InfeasibleScenario, "no pose with enough visible LEDs after " +
                                                   std::to_string(kPoseAttempts) + " attempts");
}

Observation synthesize_contour(const LedRecord& led, const Posed& pose, const CameraIntrinsicsd& camera,
                               double noise_std, double density, Rng& rng) {
    if (!(noise_std >= 0.0) || !(density > 0.0))
        throw Error(ErrorCode::InvalidArgument, "noise_std must be non-negative and density positive");
    const Eigen::Matrix3d r = pose.rotation();
    const auto pixel_at = [&](double theta) -> Eigen::Vector2d {
        const Eigen::Vector3d xc = r * point_at(led.curve, theta) + pose.t;
        if (!(xc.z() > 1e-9)) throw Error(ErrorCode::PartiallyVisible, "LED " + std::to_string(led.id) + " is behind the camera");
        const Eigen::Vector2d px(camera.fx * xc.x() / xc.z() + camera.u0, camera.fy * xc.y() / xc.z() + camera.v0);
        if (!camera.contains(px))
            throw Error(ErrorCode::PartiallyVisible, "LED " + std::to_string(led.id) + " is not fully in the image");
        return px;
    };

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double theta0 = 2.0 * std::numbers::pi * unit(rng);
    const double dtheta = 2.0 * std::numbers::pi / kDenseSamples;

    // Dense closed polyline and its cumulative arc length.
    std::vector<Eigen::Vector2d> dense(kDenseSamples + 1);
    std::vector<double> arc(kDenseSamples + 1, 0.0);
    for (int j = 0; j <= kDenseSamples; ++j) {
        dense[j] = j == kDenseSamples ? dense[0] : pixel_at(theta0 + j * dtheta);
        if (j > 0) arc[j] = arc[j - 1] + (dense[j] - dense[j - 1]).norm();
    }
    const double perimeter = arc.back();
    const auto n = std::max(kMinSynthPoints, static_cast<std::size_t>(std::llround(density * perimeter)));
    const double spacing = perimeter / static_cast<double>(n);
    const double offset = spacing * unit(rng);
    const bool reverse = unit(rng) < 0.5;
    std::normal_distribution<double> noise(0.0, 1.0);

    Observation obs;
    obs.led_id = led.id;
    obs.contour.reserve(n);
    std::size_t seg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double s = offset + spacing * static_cast<double>(k);
        while (seg + 1 < static_cast<std::size_t>(kDenseSamples) && arc[seg + 1] < s) ++seg;
        const double len = arc[seg + 1] - arc[seg];
        const double frac = len > 0.0 ? std::clamp((s - arc[seg]) / len, 0.0, 1.0) : 0.0;
        obs.contour.push_back(pixel_at(theta0 + (static_cast<double>(seg) + frac) * dtheta));
    }
    if (reverse) std::reverse(obs.contour.begin(), obs.contour.end());
    if (noise_std > 0.0) {
        for (auto& p : obs.contour) {
            const double du = noise(rng);
            const double dv = noise(rng);
            p += noise_std * Eigen::Vector2d(du, dv);
        }
    }
    return obs;
}

double position_error(const Eigen::Vector3d& truth, const Eigen::Vector3d& estimate) {
    return (estimate - truth).norm();
}

double rotation_error_deg(const Eigen::Matrix3d& r_true, const Eigen::Matrix3d& r_est) {
    // Same angle as acos((tr - 1) / 2), without the loss of precision near zero.
    const Eigen::Matrix3d d = r_est * r_true.transpose();
    const double s = 0.5 * Eigen::Vector3d(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)).norm();
    const double c = 0.5 * (d.trace() - 1.0);
    return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

TrialResult run_trial(const ScenarioConfig& config, std::size_t index) {
    Rng rng(config.seed ^ static_cast<std::uint64_t>(index));
    TrialResult result;
    result.index = index;
    result.truth = sample_pose(config, rng);
    try {
        std::vector<Observation> observations;
        for (const auto i : visible_leds(config, result.truth))
            observations.push_back(synthesize_contour(config.leds[i], result.truth, config.camera, config.noise_std,
                                                      config.contour_density, rng));
        const Scene scene = make_scene(Database::build(config.leds), config.camera, std::move(observations));
        RefineOptions options = config.refine;
        if (!options.feasible_region) {
            Box region = config.room;
            region.max.z() = std::min(region.max.z(), config.z0 - 1e-3);
            options.feasible_region = region;
        }
        const PoseEstimate est = estimate_pose(scene, config.freepnp, options);
        result.estimate = est.refined.pose;
        result.diagnostics = est.refined.diagnostics;
        result.ep = position_error(camera_center(result.truth), camera_center(result.estimate));
        result.er = rotation_error_deg(result.truth.rotation(), result.estimate.rotation());
        if (!std::isfinite(result.ep) || !std::isfinite(result.er))
            throw Error(ErrorCode::Divergence, "estimate is not finite");
        result.ok = true;
        result.status = "ok";
    } catch (const Error& e) {
        result.ok = false;
        result.status = to_string(e.code());
    }
    return result;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCode::InvalidArgument, "percentile level must be in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& std) {
    mean = 0.0;
    for (const double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const double x : v) var += (x - mean) * (x - mean);
    std = std::sqrt(var / static_cast<double>(v.size()));
}

std::vector<std::pair<double, double>> cdf(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::vector<std::pair<double, double>> out;
    for (int k = 1; k <= 100; ++k) {
        const double q = k / 100.0;
        out.emplace_back(percentile(values, q), q);
    }
    return out;
}

} // namespace

SummaryStats summarize(const std::vector<TrialResult>& trials) {
    SummaryStats s;
    s.trials = trials.size();
    std::vector<double> ep, er;
    for (const auto& t : trials) {
        if (!t.ok) continue;
        ep.push_back(t.ep);
        er.push_back(t.er);
    }
    s.succeeded = ep.size();
    s.failed = s.trials - s.succeeded;
    if (ep.empty()) return s;
    mean_std(ep, s.mpe, s.std_p);
    mean_std(er, s.mre, s.std_r);
    s.p50 = percentile(ep, 0.5);
    s.p90 = percentile(ep, 0.9);
    s.r50 = percentile(er, 0.5);
    s.r90 = percentile(er, 0.9);
    s.mpe_ci95 = 1.96 * s.std_p / std::sqrt(static_cast<double>(ep.size()));
    s.cdf_p = cdf(ep);
    s.cdf_r = cdf(er);
    return s;
}

MonteCarloResult run_monte_carlo(const ScenarioConfig& config, unsigned workers) {
    config.validate();
    const auto n = static_cast<std::size_t>(config.trials);
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));

    MonteCarloResult out;
    out.trials.resize(n);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;

    const auto work = [&] {
        while (!abort.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out.trials[i] = run_trial(config, i);
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
                abort = true;
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (fatal) std::rethrow_exception(fatal);

    out.summary = summarize(out.trials);
    if (static_cast<double>(out.summary.failed) > 0.05 * static_cast<double>(n))
        throw Error(ErrorCode::TooManyFailures, std::to_string(out.summary.failed) + " of " + std::to_string(n) +
                                                    " trials failed");
    return out;
}

namespace {

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace

std::string trials_csv(const std::vector<TrialResult>& trials) {
    std::string out = "trial_index,ep_m,er_deg,iterations,final_cost,status\n";
    for (const auto& t : trials) {
        out += std::to_string(t.index) + ",";
        if (t.ok) {
            out += num(t.ep) + "," + num(t.er) + "," + std::to_string(t.diagnostics.iterations) + "," +
                   num(t.diagnostics.final_cost);
        } else {
            out += "nan,nan,0,nan";
        }
        out += "," + t.status + "\n";
    }
    return out;
}

std::string summary_json(const MonteCarloResult& result, const ScenarioConfig& config) {
    const auto& s = result.summary;
    json doc;
    doc["scenario"] = config.name;
    doc["seed"] = config.seed;
    doc["trials"] = s.trials;
    doc["succeeded"] = s.succeeded;
    doc["failed"] = s.failed;
    json failures = json::object();
    for (const auto& t : result.trials) {
        if (!t.ok) failures[t.status] = failures.value(t.status, 0) + 1;
    }
    doc["failures_by_code"] = failures;
    doc["mpe_m"] = s.mpe;
    doc["p50_m"] = s.p50;
    doc["p90_m"] = s.p90;
    doc["std_m"] = s.std_p;
    doc["mpe_ci95_m"] = s.mpe_ci95;
    doc["mre_deg"] = s.mre;
    doc["r50_deg"] = s.r50;
    doc["r90_deg"] = s.r90;
    doc["std_deg"] = s.std_r;
    json cp = json::array(), cr = json::array();
    for (const auto& [e, f] : s.cdf_p) cp.push_back({e, f});
    for (const auto& [e, f] : s.cdf_r) cr.push_back({e, f});
    doc["cdf_position"] = cp;
    doc["cdf_rotation"] = cr;
    doc["config"] = json::parse(config_to_json(config));
    return doc.dump(2) + "\n";
}

} // namespace lcvlp
