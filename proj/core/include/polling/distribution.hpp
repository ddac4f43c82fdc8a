#pragma once

#include <string>

#include "polling/rng.hpp"

namespace polling {

// Nonnegative duration distribution with closed-form LST, first two moments
// and an exact sampler. Covers service times and switch-over times.
class ServiceDistribution {
public:
    enum class Kind { Exponential, Deterministic, Erlang };

    // Degenerate zero duration; the value deterministic(0) would give.
    ServiceDistribution() : ServiceDistribution(Kind::Deterministic, 0.0, 0.0, 0) {}

    static ServiceDistribution exponential(double rate);
    static ServiceDistribution deterministic(double value);
    static ServiceDistribution erlang(int shape, double rate);

    Kind kind() const noexcept { return kind_; }
    double mean() const noexcept;
    double second_moment() const noexcept;

    // E[exp(-sX)]. Defined for s > -rate (exponential/erlang); the analytic
    // continuation to small negative s is what central-difference moment
    // extraction relies on.
    double lst(double s) const;

    // 1 - lst(s) without cancellation; keeps full relative precision for
    // tiny s, which the descendant-set recursions depend on.
    double one_minus_lst(double s) const;

    double sample(Rng& rng) const;

    // Distribution with the same kind and mean scaled by c >= 0. A zero scale
    // degenerates to deterministic(0).
    ServiceDistribution scaled(double c) const;

    double rate() const noexcept { return rate_; }
    double value() const noexcept { return value_; }
    int shape() const noexcept { return shape_; }

    std::string describe() const;

    bool operator==(const ServiceDistribution&) const = default;

private:
    ServiceDistribution(Kind kind, double rate, double value, int shape)
        : kind_(kind), rate_(rate), value_(value), shape_(shape) {}

    Kind kind_;
    double rate_ = 0.0;   // exponential, erlang
    double value_ = 0.0;  // deterministic
    int shape_ = 0;       // erlang
};

}  // namespace polling
