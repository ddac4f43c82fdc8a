#pragma once

#include <functional>
#include <vector>

#include "polling/simulator.hpp"

namespace polling {

// Right-continuous empirical distribution function of a sample set.
class EmpiricalCdf {
public:
    // Sorts a copy of the samples; throws NumericalError on an empty set.
    explicit EmpiricalCdf(std::vector<double> samples);

    double operator()(double t) const;  // (#samples <= t) / n
    double min() const { return sorted_.front(); }
    double max() const { return sorted_.back(); }
    std::size_t size() const { return sorted_.size(); }
    double quantile(double q) const;

private:
    std::vector<double> sorted_;
};

// Exact Kolmogorov-Smirnov statistic sup_t |F_emp(t) - F_ref(t)|, evaluating
// both one-sided gaps at every sample point.
double ks_distance(const std::vector<double>& samples,
                   const std::function<double(double)>& reference_cdf);

struct MeanCI {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t count = 0;
    int batches = 0;
    bool available = false;

    bool covers(double value) const {
        return available && value >= mean - half_width && value <= mean + half_width;
    }
};

// Batch-means confidence interval (>= 20 batches) for correlated within-run
// samples. Unavailable when there are fewer than two samples per batch.
MeanCI batch_means_ci(const std::vector<double>& samples, int batches = 20,
                      double confidence = 0.95);

struct SimulationSummary {
    MeanCI waiting[3];  // indexed by CustomerClass
    MeanCI cycle_q1;
    MeanCI cycle_q2;
    double time_avg_waiting[3];
    double time_avg_in_system[3];
    std::uint64_t served = 0;
};

SimulationSummary summarize(const SampleSet& samples);

}  // namespace polling
