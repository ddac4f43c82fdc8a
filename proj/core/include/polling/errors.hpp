#pragma once

#include <stdexcept>
#include <string>

namespace polling {

// A configuration that violates model preconditions (bad rates, p_i >= 1,
// unstable load where stability is required).
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A transform evaluation that could not reach its tolerance: fixed point not
// converged within the iteration cap, or an infinite product truncated at
// max_depth before the factors settled.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double achieved)
        : std::runtime_error(what), achieved_(achieved) {}

    // Residual (fixed point) or |factor - 1| (product) at the point of failure.
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// An argument outside the admissible domain of a transform.
class DomainError : public std::runtime_error {
public:
    DomainError(const std::string& what, double admissible_min, double admissible_max)
        : std::runtime_error(what), min_(admissible_min), max_(admissible_max) {}

    double admissible_min() const noexcept { return min_; }
    double admissible_max() const noexcept { return max_; }

private:
    double min_;
    double max_;
};

// Numerical differentiation or parameter extraction failure.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace polling
