#include "polling/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "polling/errors.hpp"

namespace polling {

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) throw NumericalError("empirical CDF needs a nonempty sample set");
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double t) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), t);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::quantile(double q) const {
    const double clamped = std::clamp(q, 0.0, 1.0);
    double pos = std::ceil(clamped * static_cast<double>(sorted_.size())) - 1.0;
    if (pos < 0.0) pos = 0.0;
    return sorted_[std::min(sorted_.size() - 1, static_cast<std::size_t>(pos))];
}

double ks_distance(const std::vector<double>& samples,
                   const std::function<double(double)>& reference_cdf) {
    if (samples.empty()) throw NumericalError("KS distance needs a nonempty sample set");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = reference_cdf(sorted[i]);
        d = std::max(d, std::abs((static_cast<double>(i) + 1.0) / n - f));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

MeanCI batch_means_ci(const std::vector<double>& samples, int batches, double confidence) {
    if (batches < 20) batches = 20;
    MeanCI ci;
    ci.count = samples.size();
    const std::size_t per_batch = samples.size() / static_cast<std::size_t>(batches);
    if (per_batch < 2) return ci;  // too few samples for batching

    std::vector<double> means(static_cast<std::size_t>(batches));
    for (int b = 0; b < batches; ++b) {
        double sum = 0.0;
        for (std::size_t i = 0; i < per_batch; ++i) {
            sum += samples[static_cast<std::size_t>(b) * per_batch + i];
        }
        means[static_cast<std::size_t>(b)] = sum / static_cast<double>(per_batch);
    }
    double grand = 0.0;
    for (double mb : means) grand += mb;
    grand /= static_cast<double>(batches);
    double var = 0.0;
    for (double mb : means) var += (mb - grand) * (mb - grand);
    var /= static_cast<double>(batches - 1);

    const boost::math::students_t dist(batches - 1);
    const double tq = boost::math::quantile(dist, 0.5 + confidence / 2.0);
    ci.mean = grand;
    ci.half_width = tq * std::sqrt(var / static_cast<double>(batches));
    ci.batches = batches;
    ci.available = true;
    return ci;
}

SimulationSummary summarize(const SampleSet& s) {
    SimulationSummary out{};
    for (int c = 0; c < 3; ++c) {
        out.waiting[c] = batch_means_ci(s.waiting[c]);
        out.time_avg_waiting[c] = s.time_avg_waiting[c];
        out.time_avg_in_system[c] = s.time_avg_in_system[c];
    }
    out.cycle_q1 = batch_means_ci(s.cycles_q1);
    out.cycle_q2 = batch_means_ci(s.cycles_q2);
    out.served = s.served;
    return out;
}

}  // namespace polling
