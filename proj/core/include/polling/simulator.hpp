#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "polling/config.hpp"
#include "polling/model.hpp"

namespace polling {

struct SimOptions {
    std::uint64_t served_target = 2000;  // stop once this many services completed
    double warmup_fraction = 0.1;        // share of served customers discarded up front
    std::uint64_t seed = 1;
    std::ostream* event_log = nullptr;   // optional line-delimited event trace
};

// Everything one replication produces. Samples are in model time units,
// recorded after the warm-up boundary; time averages likewise.
struct SampleSet {
    std::array<std::vector<double>, 3> waiting;  // indexed by CustomerClass
    std::vector<double> cycles_q1;  // successive visit-beginning gaps at Q1
    std::vector<double> cycles_q2;
    std::array<double, 3> time_avg_waiting{};    // time-average number waiting
    std::array<double, 3> time_avg_in_system{};  // waiting + in service
    double arrival_avg_q2 = 0.0;  // mean number waiting in Q2 seen by type-2 arrivals
    std::uint64_t arrival_avg_q2_count = 0;
    std::uint64_t seed = 0;
    std::uint64_t served = 0;
    std::uint64_t warmup_discarded = 0;
    std::uint64_t visits_q1 = 0;
    std::uint64_t visits_q2 = 0;
    double horizon = 0.0;  // measured span after warm-up

    const std::vector<double>& waiting_for(CustomerClass c) const {
        return waiting[static_cast<int>(c)];
    }
};

// Event-driven simulation of the model: Poisson arrivals, exhaustive service,
// non-preemptive H-over-L priority at Q1, Markovian routing with switch-over
// times. Deterministic for fixed (config, options): one root seed spawns a
// named substream per arrival class, service class, routing decision and
// switch-over kind.
//
// Throws ValidationError for unstable or malformed configs (zero arrival
// rates are allowed: an empty system yields pure switch-over cycles).
SampleSet run_simulation(const SystemConfig& config, const SimOptions& options);

// Writes waiting-time samples as CSV, one column per class.
void export_waiting_csv(const SampleSet& samples, std::ostream& out);

}  // namespace polling
