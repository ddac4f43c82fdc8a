#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "polling/distribution.hpp"

namespace polling {

// One polling-system scenario: the single source of truth the analytic engine
// and the simulator both consume.
//
// Queue 1 holds two customer classes, H (non-preemptive priority) and L.
// Queue 2 holds one class. After exhausting queue i the server repeats the
// poll with probability p_i (switch-over s_ii) and moves on otherwise
// (switch-over s_ij).
struct SystemConfig {
    double lambda_h;
    double lambda_l;
    double lambda_2;
    ServiceDistribution service_h;
    ServiceDistribution service_l;
    ServiceDistribution service_2;
    double p1;
    double p2;
    ServiceDistribution s11;
    ServiceDistribution s12;
    ServiceDistribution s21;
    ServiceDistribution s22;

    double lambda_1() const noexcept { return lambda_h + lambda_l; }
    double total_load() const noexcept {
        return lambda_h * service_h.mean() + lambda_l * service_l.mean() +
               lambda_2 * service_2.mean();
    }

    bool operator==(const SystemConfig&) const = default;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const noexcept { return violations.empty(); }
    std::string to_string() const;
};

// Lists every violated invariant; never throws.
ValidationReport validate(const SystemConfig& config);

// Scales the three arrival rates by a common factor so that the total load
// becomes rho, keeping the ratios lambda_H : lambda_L : lambda_2 fixed.
SystemConfig with_total_load(const SystemConfig& config, double rho);

// JSON codec. Layout:
//   {"lambda": {"H":.., "L":.., "2":..},
//    "service": {"H": dist, "L": dist, "2": dist},
//    "routing": {"p1":.., "p2":..},
//    "switchover": {"s11": dist, "s12": dist, "s21": dist, "s22": dist}}
// where dist is {"kind":"exponential","rate":..} | {"kind":"deterministic",
// "value":..} | {"kind":"erlang","shape":..,"rate":..}.
SystemConfig config_from_json(const std::string& text);
std::string config_to_json(const SystemConfig& config);
SystemConfig load_config(const std::filesystem::path& path);
void save_config(const SystemConfig& config, const std::filesystem::path& path);

}  // namespace polling
