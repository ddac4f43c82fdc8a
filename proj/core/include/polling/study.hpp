#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "polling/asymptotics.hpp"
#include "polling/config.hpp"
#include "polling/stats.hpp"
#include "polling/transforms.hpp"

namespace polling {

// A sweep study: simulate the scenario along a load ramp (heavy traffic) or a
// switch-over ramp (large deterministic switch-overs), scale the delays for
// the matching regime and compare their empirical CDFs against the limit laws.
struct StudySpec {
    enum class Kind { HeavyTraffic, LargeSwitchover };
    Kind kind = Kind::HeavyTraffic;
    std::vector<double> sweep;  // load values (rho < 1) or total switch-over times (r > 0)
    SystemConfig base;
    std::uint64_t served_target = 2000;
    double warmup = 0.1;
    std::uint64_t seed = 1;
    std::filesystem::path out_dir;
};

std::vector<double> default_sweep(StudySpec::Kind kind);

// The configuration simulated at one sweep point: heavy traffic rescales the
// arrival rates to the target load; the switch-over ramp replaces all four
// switch-over times by equal deterministic values with E S^tot = r.
SystemConfig config_for_sweep_point(const StudySpec& spec, double value);

struct StudyPoint {
    double value = 0.0;            // sweep coordinate (rho or r)
    double rho = 0.0;              // realized total load
    std::array<double, 3> ks{};    // KS distance per class vs the limit CDF
    std::uint64_t samples[3] = {0, 0, 0};
    std::filesystem::path cdf_path;
};

struct StudyResult {
    std::vector<StudyPoint> points;
    std::filesystem::path summary_path;
};

// Runs every sweep point (in parallel, with per-point seeds derived from the
// root seed), writes one CDF dataset per point plus a KS summary, and returns
// the distances. Deterministic given (spec, seed).
StudyResult study(const StudySpec& spec);

struct ScenarioReport {
    std::filesystem::path derived_path;
    std::filesystem::path analytic_path;
    std::filesystem::path simulation_path;
    std::filesystem::path comparison_path;
    bool all_means_covered = false;  // analytic means inside simulation CIs
    bool degenerate_sigma = false;
    std::string summary_text;
};

// Full single-scenario report: derived model, analytic means, simulation
// summary with confidence intervals, and a comparison table with relative
// errors and CI-coverage flags.
ScenarioReport run_scenario(const SystemConfig& config, const std::filesystem::path& out_dir,
                            std::uint64_t seed, std::uint64_t served_target, double warmup,
                            const EvalOptions& options = {});

// Analytic-only comparison of the rescaled heavy-traffic law against the
// double-limit uniform law (the simulation route converges too slowly to be
// useful; this check is exact). Writes one curve file per r and a summary of
// sup-differences.
struct DoubleLimitResult {
    std::vector<double> r_values;
    std::vector<std::array<double, 3>> sup_diff;  // per r, per class
    std::filesystem::path summary_path;
};
DoubleLimitResult double_limit_consistency(const SystemConfig& base,
                                           const std::filesystem::path& out_dir,
                                           std::vector<double> r_values = {100.0, 1000.0, 10000.0});

// Reference scenarios used throughout the studies: symmetric class split,
// exponential services with mean 0.85, p1 = 0.4, p2 = 0.3.
SystemConfig reference_heavy_traffic_config(double rho);      // exponential switch-overs, sigma = 2.4
SystemConfig reference_large_switchover_config(double r);     // deterministic switch-overs, E S^tot = r, rho = 0.8

}  // namespace polling
