#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lcvlp/error.hpp"
#include "lcvlp/freepnp.hpp"
#include "lcvlp/led_database.hpp"
#include "lcvlp/pipeline.hpp"
#include "lcvlp/refine.hpp"
#include "lcvlp/scene.hpp"
#include "lcvlp/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lcvlp;

namespace {

// 0 ok, 1 usage or configuration, 2 unknown LED id, 3 too few observations, 4 numerical failure,
// 5 infeasible scenario or too many failed trials, 6 malformed or schema-invalid input.
int exit_code(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnknownId: return 2;
    case ErrorCode::InsufficientObservations: return 3;
    case ErrorCode::BehindCamera:
    case ErrorCode::ParallelRay:
    case ErrorCode::NegativeDepth:
    case ErrorCode::NotOrthonormal:
    case ErrorCode::Degenerate:
    case ErrorCode::NoPositiveDepthSolution:
    case ErrorCode::InfeasibleInitializer:
    case ErrorCode::Divergence: return 4;
    case ErrorCode::InfeasibleScenario:
    case ErrorCode::TooManyFailures:
    case ErrorCode::PartiallyVisible: return 5;
    case ErrorCode::InvalidCurve:
    case ErrorCode::DuplicateId:
    case ErrorCode::InconsistentCeiling:
    case ErrorCode::Schema:
    case ErrorCode::Malformed: return 6;
    case ErrorCode::InvalidArgument: return 1;
    }
    return 1;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::InvalidArgument, "failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct SimulateArgs {
    std::string config_path;
    std::string scenario;
    std::string shape{"rhombus"};
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::optional<double> noise_std;
    std::optional<double> led_scale;
    std::optional<double> sampling_ratio;
    std::optional<int> samples_per_led;
    unsigned workers{0};
    std::string out_dir;
    std::vector<std::string> overrides;
};

int simulate(const SimulateArgs& args) {
    ScenarioConfig base;
    if (!args.config_path.empty()) {
        base = load_config(args.config_path);
    } else {
        base = scenario_preset(args.scenario.empty() ? "A" : args.scenario, args.shape);
    }
    if (args.led_scale) scale_leds(base, *args.led_scale);

    std::vector<std::string> overrides;
    if (args.trials) overrides.push_back("trials=" + std::to_string(*args.trials));
    if (args.seed) overrides.push_back("seed=" + std::to_string(*args.seed));
    const auto real = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    if (args.noise_std) overrides.push_back("noise_std=" + real(*args.noise_std));
    if (args.sampling_ratio) overrides.push_back("refine.sampling_ratio=" + real(*args.sampling_ratio));
    if (args.samples_per_led) overrides.push_back("samples_per_led=" + std::to_string(*args.samples_per_led));
    overrides.insert(overrides.end(), args.overrides.begin(), args.overrides.end());
    const ScenarioConfig config = config_from_json(apply_overrides(config_to_json(base), overrides));

    const fs::path out(args.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw Error(ErrorCode::InvalidArgument, "cannot create " + out.string() + ": " + ec.message());

    const MonteCarloResult result = run_monte_carlo(config, args.workers);
    write_file(out / "trials.csv", trials_csv(result.trials));
    write_file(out / "summary.json", summary_json(result, config));
    const auto& s = result.summary;
    std::printf("scenario %s: %zu/%zu trials ok, MPE %.4f cm (+-%.4f), MRE %.4f deg\n", config.name.c_str(),
                s.succeeded, s.trials, 100.0 * s.mpe, 100.0 * s.mpe_ci95, s.mre);
    return 0;
}

int localize(const std::string& db_path, const std::string& obs_path, const std::string& out_path) {
    const Database db = load_database(db_path);
    ObservationDocument doc = load_observation_document(obs_path, db.z0());
    const Scene scene = make_scene(db, doc.camera, std::move(doc.observations), std::move(doc.ref_points));
    const PoseEstimate est = estimate_pose(scene);
    const RefineResult& result = est.refined;
    const Posed& initial = est.initial;

    const Eigen::Vector3d c = camera_center(result.pose);
    const Eigen::Matrix3d r = result.pose.rotation();
    const auto& d = result.diagnostics;
    json out;
    out["position_m"] = {c.x(), c.y(), c.z()};
    out["rodrigues"] = {result.pose.omega.x(), result.pose.omega.y(), result.pose.omega.z()};
    out["rotation_matrix"] = json::array();
    for (int i = 0; i < 3; ++i) out["rotation_matrix"].push_back({r(i, 0), r(i, 1), r(i, 2)});
    const Eigen::Vector3d c0 = camera_center(initial);
    out["diagnostics"] = {{"iterations", d.iterations},
                          {"initial_cost", d.initial_cost},
                          {"final_cost", d.final_cost},
                          {"clip_count", d.clip_count},
                          {"status", to_string(d.status)},
                          {"constraint_status", to_string(d.constraint_status)},
                          {"initial_position_m", {c0.x(), c0.y(), c0.z()}},
                          {"cost_history", d.cost_history}};
    write_file(out_path, out.dump(2) + "\n");
    std::printf("position %.6f %.6f %.6f m\n", c.x(), c.y(), c.z());
    return 0;
}

int db_validate(const std::string& db_path) {
    const Database db = load_database(db_path);
    std::printf("ok: %zu LEDs, %zu reference points, ceiling at %.17g m\n", db.size(), db.ref_points().size(), db.z0());
    return 0;
}

int export_cdf(const std::string& trials_path, const std::string& out_path) {
    std::istringstream in(read_file(trials_path));
    std::string line;
    if (!std::getline(in, line) || line.rfind("trial_index,ep_m,er_deg", 0) != 0)
        throw Error(ErrorCode::Malformed, "trials file lacks the expected header");
    std::vector<double> ep, er;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) cols.push_back(cell);
        if (cols.size() != 6) throw Error(ErrorCode::Malformed, "row " + std::to_string(row) + " needs 6 columns");
        if (cols[5] != "ok") continue;
        try {
            std::size_t used = 0;
            const double p = std::stod(cols[1], &used);
            if (used != cols[1].size()) throw std::invalid_argument(cols[1]);
            const double q = std::stod(cols[2], &used);
            if (used != cols[2].size()) throw std::invalid_argument(cols[2]);
            if (!(p >= 0.0) || !(q >= 0.0)) throw std::invalid_argument("negative error");
            ep.push_back(p);
            er.push_back(q);
        } catch (const std::exception&) {
            throw Error(ErrorCode::Malformed, "row " + std::to_string(row) + " has a bad error value");
        }
    }
    if (ep.empty()) throw Error(ErrorCode::Malformed, "trials file has no successful trials");
    std::sort(ep.begin(), ep.end());
    std::sort(er.begin(), er.end());

    std::string out = "metric,error,cumulative_fraction\n";
    const auto emit = [&](const char* metric, const std::vector<double>& v) {
        char buf[96];
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g\n", metric, v[i],
                          static_cast<double>(i + 1) / static_cast<double>(v.size()));
            out += buf;
        }
    };
    emit("ep_m", ep);
    emit("er_deg", er);
    write_file(out_path, out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pose estimation from identified LED contours on a known ceiling"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo simulation of a scenario");
    simulate_cmd->add_option("--config", sim.config_path, "Scenario config JSON")->check(CLI::ExistingFile);
    simulate_cmd->add_option("--scenario", sim.scenario, "Preset A, B, C or D")
        ->check(CLI::IsMember({"A", "B", "C", "D"}));
    simulate_cmd->add_option("--shape", sim.shape, "Scenario C shape")
        ->check(CLI::IsMember({"rhombus", "square", "ellipse", "circle", "rectangle"}));
    simulate_cmd->add_option("--trials", sim.trials);
    simulate_cmd->add_option("--seed", sim.seed);
    simulate_cmd->add_option("--noise-std", sim.noise_std, "Pixel noise sigma");
    simulate_cmd->add_option("--led-scale", sim.led_scale, "Multiplies every LED semi-axis");
    simulate_cmd->add_option("--sampling-ratio", sim.sampling_ratio, "Fraction of contour points used by refinement");
    simulate_cmd->add_option("--samples-per-led", sim.samples_per_led, "Virtual correspondences per LED");
    simulate_cmd->add_option("--workers", sim.workers, "Worker threads, 0 for all cores");
    simulate_cmd->add_option("--out", sim.out_dir, "Output directory")->required();
    simulate_cmd->add_option("--set", sim.overrides, "Dotted key=value config override");
    simulate_cmd->get_option("--config")->excludes(simulate_cmd->get_option("--scenario"));

    std::string db_path, obs_path, out_path, trials_path;
    auto* localize_cmd = app.add_subcommand("localize", "Estimate the camera pose from one observation file");
    localize_cmd->add_option("db", db_path)->required()->check(CLI::ExistingFile);
    localize_cmd->add_option("obs", obs_path)->required()->check(CLI::ExistingFile);
    localize_cmd->add_option("out", out_path)->required();

    auto* validate_cmd = app.add_subcommand("db-validate", "Check an LED database file");
    validate_cmd->add_option("db", db_path)->required()->check(CLI::ExistingFile);

    auto* cdf_cmd = app.add_subcommand("export-cdf", "Empirical CDFs of the errors in a trials file");
    cdf_cmd->add_option("trials", trials_path)->required()->check(CLI::ExistingFile);
    cdf_cmd->add_option("out", out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*simulate_cmd) return simulate(sim);
        if (*localize_cmd) return localize(db_path, obs_path, out_path);
        if (*validate_cmd) return db_validate(db_path);
        if (*cdf_cmd) return export_cdf(trials_path, out_path);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
