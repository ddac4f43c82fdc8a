#include "polling/distribution.hpp"

#include <cmath>
#include <cstdio>

#include "polling/errors.hpp"

namespace polling {

ServiceDistribution ServiceDistribution::exponential(double rate) {
    if (!(rate > 0.0)) throw ValidationError("exponential rate must be > 0");
    return {Kind::Exponential, rate, 0.0, 0};
}

ServiceDistribution ServiceDistribution::deterministic(double value) {
    if (!(value >= 0.0)) throw ValidationError("deterministic value must be >= 0");
    return {Kind::Deterministic, 0.0, value, 0};
}

ServiceDistribution ServiceDistribution::erlang(int shape, double rate) {
    if (shape < 1) throw ValidationError("erlang shape must be a positive integer");
    if (!(rate > 0.0)) throw ValidationError("erlang rate must be > 0");
    return {Kind::Erlang, rate, 0.0, shape};
}

double ServiceDistribution::mean() const noexcept {
    switch (kind_) {
        case Kind::Exponential: return 1.0 / rate_;
        case Kind::Deterministic: return value_;
        case Kind::Erlang: return shape_ / rate_;
    }
    return 0.0;
}

double ServiceDistribution::second_moment() const noexcept {
    switch (kind_) {
        case Kind::Exponential: return 2.0 / (rate_ * rate_);
        case Kind::Deterministic: return value_ * value_;
        case Kind::Erlang: return shape_ * (shape_ + 1.0) / (rate_ * rate_);
    }
    return 0.0;
}

double ServiceDistribution::lst(double s) const {
    switch (kind_) {
        case Kind::Exponential: return rate_ / (rate_ + s);
        case Kind::Deterministic: return std::exp(-value_ * s);
        case Kind::Erlang: return std::pow(rate_ / (rate_ + s), shape_);
    }
    return 1.0;
}

double ServiceDistribution::one_minus_lst(double s) const {
    switch (kind_) {
        case Kind::Exponential: return s / (rate_ + s);
        case Kind::Deterministic: return -std::expm1(-value_ * s);
        case Kind::Erlang: return -std::expm1(shape_ * std::log1p(-s / (rate_ + s)));
    }
    return 0.0;
}

double ServiceDistribution::sample(Rng& rng) const {
    switch (kind_) {
        case Kind::Exponential: return rng.exponential(rate_);
        case Kind::Deterministic: return value_;
        case Kind::Erlang: {
            double total = 0.0;
            for (int i = 0; i < shape_; ++i) total += rng.exponential(rate_);
            return total;
        }
    }
    return 0.0;
}

ServiceDistribution ServiceDistribution::scaled(double c) const {
    if (!(c >= 0.0)) throw ValidationError("scale factor must be >= 0");
    if (c == 0.0) return deterministic(0.0);
    switch (kind_) {
        case Kind::Exponential: return exponential(rate_ / c);
        case Kind::Deterministic: return deterministic(value_ * c);
        case Kind::Erlang: return erlang(shape_, rate_ / c);
    }
    return deterministic(0.0);
}

std::string ServiceDistribution::describe() const {
    char buf[64];
    switch (kind_) {
        case Kind::Exponential:
            std::snprintf(buf, sizeof buf, "exponential(rate=%g)", rate_);
            break;
        case Kind::Deterministic:
            std::snprintf(buf, sizeof buf, "deterministic(value=%g)", value_);
            break;
        case Kind::Erlang:
            std::snprintf(buf, sizeof buf, "erlang(shape=%d, rate=%g)", shape_, rate_);
            break;
    }
    return buf;
}

}  // namespace polling
