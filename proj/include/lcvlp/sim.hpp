#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lcvlp/camera.hpp"
#include "lcvlp/freepnp.hpp"
#include "lcvlp/led_database.hpp"
#include "lcvlp/refine.hpp"
#include "lcvlp/scene.hpp"

namespace lcvlp {

using Rng = std::mt19937_64;

/// Camera of the simulated scenarios: focal length of the reference camera with a 1760 x 1320 image
/// centered on the principal point. A 640 x 480 image cannot hold two LEDs of the reference room for
/// cameras in the sampled envelope.
inline CameraIntrinsicsd simulation_camera() { return CameraIntrinsicsd::make(800.0, 800.0, 880.0, 660.0, 1760, 1320); }

struct PoseSampler {
    /// Camera centers keep this distance from the walls.
    double inset{0.5};
    double height_min{0.8};
    double height_max{1.8};
    /// Largest angle between the camera z-axis and the world vertical.
    double max_tilt{std::numbers::pi / 6.0};
    double roll_min{0.0};
    double roll_max{2.0 * std::numbers::pi};
};

struct ScenarioConfig {
    std::string name{"custom"};
    std::vector<LedRecord> leds;
    double z0{kReferenceCeiling};
    /// Room interior; the ceiling is at room.max.z().
    Box room;
    CameraIntrinsicsd camera{simulation_camera()};
    double noise_std{2.0};
    int trials{2000};
    std::uint64_t seed{42};
    PoseSampler pose_sampler;
    /// Contour points per pixel of projected perimeter.
    double contour_density{1.0};
    int min_visible_leds{2};
    FreePnpConfig freepnp;
    RefineOptions refine;
    /// LED half-power semi-angle (degrees). Photometry is not simulated; the value is only echoed.
    double led_semi_angle_deg{60.0};

    void validate() const;
};

/// Uniform LED scaling: semi-axes multiplied by `factor`.
void scale_leds(ScenarioConfig& config, double factor);

/// Reference room with shapes of scenario A, B, C or D. `shape` picks the scenario C variant
/// (rhombus, square, ellipse, circle, rectangle) and is ignored otherwise.
ScenarioConfig scenario_preset(const std::string& name, const std::string& shape = "rhombus");

std::string config_to_json(const ScenarioConfig& config);
ScenarioConfig config_from_json(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);
/// Applies dotted key=value overrides (e.g. "refine.sampling_ratio=0.5") to a config document.
std::string apply_overrides(const std::string& config_json, const std::vector<std::string>& overrides);

/// All of the LED's boundary projects in front of the camera and inside the image, `margin` px from the border.
bool led_fully_visible(const LedRecord& led, const Posed& pose, const CameraIntrinsicsd& camera, double margin = 1.0);
std::vector<std::size_t> visible_leds(const ScenarioConfig& config, const Posed& pose);

/// Random pose inside the configured envelope with at least min_visible_leds LEDs fully in view.
Posed sample_pose(const ScenarioConfig& config, Rng& rng);

/// Projected LED boundary sampled uniformly in image arc length, then perturbed by pixel noise.
Observation synthesize_contour(const LedRecord& led, const Posed& pose, const CameraIntrinsicsd& camera,
                               double noise_std, double density, Rng& rng);

double position_error(const Eigen::Vector3d& truth, const Eigen::Vector3d& estimate);
double rotation_error_deg(const Eigen::Matrix3d& r_true, const Eigen::Matrix3d& r_est);

struct TrialResult {
    std::size_t index{0};
    bool ok{false};
    /// "ok" or the failure code.
    std::string status;
    Posed truth;
    Posed estimate;
    double ep{0.0};
    double er{0.0};
    RefineDiagnostics diagnostics;
};

struct SummaryStats {
    std::size_t trials{0};
    std::size_t succeeded{0};
    std::size_t failed{0};
    double mpe{0.0}, p50{0.0}, p90{0.0}, std_p{0.0};
    double mre{0.0}, r50{0.0}, r90{0.0}, std_r{0.0};
    /// Half width of the 95% normal interval on MPE.
    double mpe_ci95{0.0};
    /// (error, cumulative fraction) at fractions 0.01, 0.02, ..., 1.
    std::vector<std::pair<double, double>> cdf_p;
    std::vector<std::pair<double, double>> cdf_r;
};

struct MonteCarloResult {
    SummaryStats summary;
    std::vector<TrialResult> trials;
};

/// Linear interpolation between order statistics; `q` in [0, 1].
double percentile(std::vector<double> values, double q);
SummaryStats summarize(const std::vector<TrialResult>& trials);

TrialResult run_trial(const ScenarioConfig& config, std::size_t index);

/// Runs config.trials independent trials on `workers` threads (0 = hardware concurrency). Aborts with
/// TooManyFailures when more than 5% fail.
MonteCarloResult run_monte_carlo(const ScenarioConfig& config, unsigned workers = 0);

std::string trials_csv(const std::vector<TrialResult>& trials);
std::string summary_json(const MonteCarloResult& result, const ScenarioConfig& config);

} // namespace lcvlp
