#include "polling/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

namespace polling {

namespace {

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, format, a, b, c);
    return buf;
}

// Deficit form of the Kendall functional equation: y = 1 - theta~(s) solves
// y = F(s + lambda y) with F(u) = 1 - B~(u). Iterating from y = 1 descends
// monotonically to the deficit of the minimal root; working on deficits keeps
// relative precision when y decays toward zero inside the DSA recursions.
template <typename OneMinusLst>
double kendall_deficit(double lambda, const OneMinusLst& f, double s, const EvalOptions& o,
                       const char* what) {
    if (lambda <= 0.0) return f(s);  // no arrivals: the busy period is one service
    if (s == 0.0) return 0.0;        // stable queue empties almost surely

    double y = 1.0;
    double residual = 1.0;
    double prev_delta = std::numeric_limits<double>::infinity();
    for (long it = 0; it < o.fixpoint_max_iter; ++it) {
        const double next = f(s + lambda * y);
        const double delta = std::abs(next - y);
        y = next;
        // Linear convergence: the distance still to go is about
        // delta * rate / (1 - rate). The tolerance is taken relative to the
        // deficit itself once that drops below fixpoint scale.
        const double rate = std::isfinite(prev_delta) && prev_delta > 0.0
                                ? std::min(delta / prev_delta, 0.999999)
                                : 0.999999;
        const double remaining = delta * rate / (1.0 - rate);
        prev_delta = delta;
        const double tol = 0.25 * o.fixpoint_tol * std::max(std::abs(y), 1e-3);
        if (delta == 0.0 || remaining <= tol) {
            const double again = f(s + lambda * y);
            residual = std::abs(again - y);
            y = again;
            if (residual <= 4.0 * tol) return y;
        }
    }
    throw ConvergenceError(
        std::string(what) + fmt(": busy-period fixed point not converged at s=%g, residual=%g", s, residual),
        residual);
}

double bisect_root(const std::function<double(double)>& g, double lo, double hi) {
    // g(lo) > 0 > g(hi) by construction of the callers.
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (g(mid) > 0.0) lo = mid; else hi = mid;
    }
    return lo;
}

}  // namespace

// ---------------------------------------------------------------------------
// TransformHandle
// ---------------------------------------------------------------------------

TransformHandle::TransformHandle(Kind kind, std::string name, std::function<double(double)> eval,
                                 double arg_min, double arg_max, EvalOptions options)
    : kind_(kind), name_(std::move(name)), eval_(std::move(eval)),
      arg_min_(arg_min), arg_max_(arg_max), options_(options) {}

double TransformHandle::operator()(double arg) const {
    if (!(arg >= arg_min_ && arg <= arg_max_)) {
        throw DomainError(
            name_ + fmt(": argument %g outside admissible range [%g, %g]", arg, arg_min_, arg_max_),
            arg_min_, arg_max_);
    }
    return eval_(arg);
}

double transform_moment(const TransformHandle& handle, int k) {
    if (k != 1 && k != 2) throw NumericalError("transform_moment supports orders 1 and 2");

    const double x0 = handle.identity_point();
    const auto f = [&](double x) { return handle.evaluate_unchecked(x); };

    // Two-stage step selection: a crude slope fixes the natural scale of the
    // argument, then the relative step is applied against it.
    double scale = 1.0;
    for (int stage = 0; stage < 2; ++stage) {
        const double h0 = 1e-3 / scale;
        const double slope = std::abs(f(x0 + h0) - f(x0 - h0)) / (2.0 * h0);
        if (!std::isfinite(slope) || slope <= 1.0) break;
        scale = slope;
    }
    const double h = handle.options().fd_step / scale;

    const auto central = [&](double step) { return (f(x0 + step) - f(x0 - step)) / (2.0 * step); };
    const double d_h = central(h);
    const double d_h2 = central(0.5 * h);
    const double d1 = (4.0 * d_h2 - d_h) / 3.0;

    const double sign = handle.kind() == TransformHandle::Kind::Lst ? -1.0 : 1.0;
    const double m1 = sign * d1;
    if (!std::isfinite(m1) || m1 < 0.0) {
        throw NumericalError(handle.name() +
                             fmt(": first-moment estimate %g invalid (step %g, slope scale %g)", m1, h, scale));
    }
    if (k == 1) return m1;

    const double d2 = (-f(x0 + 2.0 * h) + 16.0 * f(x0 + h) - 30.0 * f(x0) + 16.0 * f(x0 - h) -
                       f(x0 - 2.0 * h)) /
                      (12.0 * h * h);
    // LSTs: f''(0) = E X^2. PGFs: f''(1) is the second factorial moment.
    const double m2 = handle.kind() == TransformHandle::Kind::Lst ? d2 : d2 + m1;
    if (!std::isfinite(m2)) {
        throw NumericalError(handle.name() + fmt(": second-moment estimate invalid (step %g)", h));
    }
    return m2;
}

// ---------------------------------------------------------------------------
// TransformEngine
// ---------------------------------------------------------------------------

TransformEngine::TransformEngine(SystemConfig config, EvalOptions options)
    : config_(std::move(config)), model_(derive_model(config_)), options_(options) {
    if (!(config_.lambda_h >= 0.0 && config_.lambda_l >= 0.0 && config_.lambda_2 >= 0.0)) {
        throw ValidationError("arrival rates must be >= 0");
    }
    if (!(model_.lambda_1 > 0.0)) {
        throw ValidationError("transforms require lambda_H + lambda_L > 0");
    }
    if (!model_.stable()) {
        throw ValidationError(fmt("transforms require total load < 1 (rho = %g)", model_.rho));
    }
}

double TransformEngine::theta1_deficit(double s) const {
    // 1 - B~_1(u) for the class mixture B_1.
    const auto f = [this](double u) {
        return (config_.lambda_h * config_.service_h.one_minus_lst(u) +
                config_.lambda_l * config_.service_l.one_minus_lst(u)) /
               model_.lambda_1;
    };
    return kendall_deficit(model_.lambda_1, f, s, options_, "theta_1");
}

double TransformEngine::theta2_deficit(double s) const {
    return kendall_deficit(config_.lambda_2,
                           [this](double u) { return config_.service_2.one_minus_lst(u); }, s,
                           options_, "theta_2");
}

double TransformEngine::thetaH_deficit(double s) const {
    return kendall_deficit(config_.lambda_h,
                           [this](double u) { return config_.service_h.one_minus_lst(u); }, s,
                           options_, "theta_H");
}

double TransformEngine::completion_deficit(double s) const {
    return config_.service_l.one_minus_lst(s + config_.lambda_h * thetaH_deficit(s));
}

double TransformEngine::completion_time(double s) const {
    return 1.0 - completion_deficit(s);
}

double TransformEngine::thetaLp_deficit(double s) const {
    return kendall_deficit(config_.lambda_l, [this](double u) { return completion_deficit(u); }, s,
                           options_, "theta_L'");
}

double TransformEngine::busy_period(QueueId queue, double s) const {
    return queue == QueueId::Q1 ? theta1(s) : theta2(s);
}

double TransformEngine::busy_period(CustomerClass cls, double s) const {
    switch (cls) {
        case CustomerClass::High: return thetaH(s);
        case CustomerClass::Low: return thetaLp(s);
        case CustomerClass::Two: return theta2(s);
    }
    throw NumericalError("unknown customer class");
}

double TransformEngine::arrivals_pgf(int i, int j, double z) const {
    if ((i != 1 && i != 2) || (j != 1 && j != 2)) {
        throw NumericalError("arrivals_pgf indices must be 1 or 2");
    }
    const double lambda_j = j == 1 ? model_.lambda_1 : config_.lambda_2;
    const double s = lambda_j * (1.0 - z);
    return 1.0 - (i == 1 ? theta1_deficit(s) : theta2_deficit(s));
}

double TransformEngine::switchover_lst(int i, int j, double u) const {
    if (i == 1 && j == 1) return config_.s11.lst(u);
    if (i == 1 && j == 2) return config_.s12.lst(u);
    if (i == 2 && j == 1) return config_.s21.lst(u);
    if (i == 2 && j == 2) return config_.s22.lst(u);
    throw NumericalError("switchover indices must be 1 or 2");
}

double TransformEngine::switchover_pgf(int i, int j, double z1, double z2) const {
    const double u = model_.lambda_1 * (1.0 - z1) + config_.lambda_2 * (1.0 - z2);
    return switchover_lst(i, j, u);
}

// The generation products run on iterate deficits y = 1 - f_i^(j)(z): the
// switch-over LST arguments are exact weighted deficit sums, so the factors
// approach 1 cleanly instead of flooring on 1 - theta cancellation.
double TransformEngine::product_a1(double z2) const {
    const auto& r = model_.routing;
    const double lam1 = model_.lambda_1;
    const double lam2 = config_.lambda_2;
    double prod = 1.0;
    double yw = 1.0 - z2;
    double deviation = 0.0;
    for (int j = 0; j < options_.max_depth; ++j) {
        const double yk12 = theta1_deficit(lam2 * yw);   // 1 - K~_12(w)
        const double yf1 = theta2_deficit(lam1 * yk12);  // 1 - f_1(w)
        const double u_a = lam1 * yk12 + lam2 * yw;      // M~ args at (K~_12(w), w)
        const double u_b = lam1 * yk12 + lam2 * yf1;     // M~ args at (K~_12(w), f_1(w))
        const double factor = r.r21 * switchover_lst(2, 1, u_a) /
                              (1.0 - r.r11 * switchover_lst(1, 1, u_a)) *
                              (r.r12 * switchover_lst(1, 2, u_b) /
                               (1.0 - r.r22 * switchover_lst(2, 2, u_b)));
        prod *= factor;
        deviation = std::abs(factor - 1.0);
        if (deviation < options_.product_tol) return prod;
        yw = yf1;
    }
    throw ConvergenceError(
        fmt("polling-epoch product over a_1 hit max_depth=%g with factor deviation %g",
            static_cast<double>(options_.max_depth), deviation),
        deviation);
}

double TransformEngine::product_a2(double z1) const {
    const auto& r = model_.routing;
    const double lam1 = model_.lambda_1;
    const double lam2 = config_.lambda_2;
    double prod = 1.0;
    double yw = 1.0 - z1;
    double deviation = 0.0;
    for (int j = 0; j < options_.max_depth; ++j) {
        const double yk21 = theta2_deficit(lam1 * yw);   // 1 - K~_21(w)
        const double yf2 = theta1_deficit(lam2 * yk21);  // 1 - f_2(w)
        const double u_a = lam1 * yw + lam2 * yk21;      // M~ args at (w, K~_21(w))
        const double u_b = lam1 * yf2 + lam2 * yk21;     // M~ args at (f_2(w), K~_21(w))
        const double factor = r.r12 * switchover_lst(1, 2, u_a) /
                              (1.0 - r.r22 * switchover_lst(2, 2, u_a)) *
                              (r.r21 * switchover_lst(2, 1, u_b) /
                               (1.0 - r.r11 * switchover_lst(1, 1, u_b)));
        prod *= factor;
        deviation = std::abs(factor - 1.0);
        if (deviation < options_.product_tol) return prod;
        yw = yf2;
    }
    throw ConvergenceError(
        fmt("polling-epoch product over a_2 hit max_depth=%g with factor deviation %g",
            static_cast<double>(options_.max_depth), deviation),
        deviation);
}

double TransformEngine::polling_epoch_pgf(QueueId queue, double z1, double z2) const {
    const auto& r = model_.routing;
    const double p1 = product_a1(z2);
    const double p2 = product_a2(z1);
    if (queue == QueueId::Q1) {
        return r.r11 * switchover_pgf(1, 1, z1, z2) * p1 + r.r21 * switchover_pgf(2, 1, z1, z2) * p2;
    }
    return r.r12 * switchover_pgf(1, 2, z1, z2) * p1 + r.r22 * switchover_pgf(2, 2, z1, z2) * p2;
}

double TransformEngine::mixture_arg(double zh, double zl) const {
    return (config_.lambda_h * zh + config_.lambda_l * zl) / model_.lambda_1;
}

double TransformEngine::priority_epoch_pgf(QueueId queue, double zh, double zl, double z2) const {
    return polling_epoch_pgf(queue, mixture_arg(zh, zl), z2);
}

// ---------------------------------------------------------------------------
// Descendant-set transforms
// ---------------------------------------------------------------------------

double TransformEngine::r1_tilde(double u) const {
    const auto& r = model_.routing;
    return switchover_lst(1, 2, u) * r.r12 / (1.0 - r.r22 * switchover_lst(2, 2, u));
}

double TransformEngine::r2_tilde(double u) const {
    const auto& r = model_.routing;
    return switchover_lst(2, 1, u) * r.r21 / (1.0 - r.r11 * switchover_lst(1, 1, u));
}

double TransformEngine::dsa_h1(double z) const { return dsa_h1_from_deficit(1.0 - z); }

double TransformEngine::dsa_h1_from_deficit(double y) const {
    const double lam1 = model_.lambda_1;
    const double lam2 = config_.lambda_2;
    double y1_prev = y;    // 1 - A_{1,c-1}, seeded with A_{1,-1}(z) = z
    double y2_prev = 0.0;  // 1 - A_{2,c-1}, seeded with A_{2,-1}(z) = 1
    double prod = 1.0;
    double deviation = 0.0;
    for (int c = 0; c < options_.max_depth; ++c) {
        const double y2_cur = theta2_deficit(lam1 * y1_prev);  // 1 - K~_21(A_{1,c-1})
        const double u1 = lam1 * y1_prev + lam2 * y2_cur;
        const double u2 = lam1 * y1_prev + lam2 * y2_prev;
        const double factor = r1_tilde(u1) * r2_tilde(u2);
        prod *= factor;
        deviation = std::abs(factor - 1.0);
        if (deviation < options_.product_tol) return prod;
        y1_prev = theta1_deficit(lam2 * y2_cur);  // 1 - K~_12(A_{2,c})
        y2_prev = y2_cur;
    }
    throw ConvergenceError(
        fmt("H~_1 generation product hit max_depth=%g with factor deviation %g",
            static_cast<double>(options_.max_depth), deviation),
        deviation);
}

double TransformEngine::dsa_h1_deterministic(double z) const {
    return dsa_h1_deterministic_from_deficit(1.0 - z);
}

double TransformEngine::dsa_h1_deterministic_from_deficit(double y) const {
    const double lam1 = model_.lambda_1;
    const double lam2 = config_.lambda_2;
    double y1_prev = y;
    double y2_prev = 0.0;
    double exponent = 0.0;
    double increment = 0.0;
    for (int c = 0; c < options_.max_depth; ++c) {
        const double y2_cur = theta2_deficit(lam1 * y1_prev);
        const double u1 = lam1 * y1_prev + lam2 * y2_cur;
        const double u2 = lam1 * y1_prev + lam2 * y2_prev;
        increment = model_.r1 * u1 + model_.r2 * u2;
        exponent += increment;
        if (std::abs(increment) < options_.product_tol) return std::exp(-exponent);
        y1_prev = theta1_deficit(lam2 * y2_cur);
        y2_prev = y2_cur;
    }
    throw ConvergenceError(
        fmt("deterministic H~_1 sum hit max_depth=%g with increment %g",
            static_cast<double>(options_.max_depth), increment),
        increment);
}

double TransformEngine::dsa_g1(double z) const {
    const auto& r = model_.routing;
    return dsa_h1(z) * (1.0 - r.r11 * switchover_pgf(1, 1, z, 1.0)) / r.r21;
}

double TransformEngine::dsa_g1_product(double z) const {
    return switchover_pgf(2, 1, z, 1.0) * product_a2(z);
}

double TransformEngine::dsa_k_direct(double z) const {
    const double lh = config_.lambda_h;
    const double ll = config_.lambda_l;
    const double l2 = config_.lambda_2;
    double yh_prev = thetaH_deficit(ll * (1.0 - z));  // 1 - B~_{H,-1}
    double yl_prev = 1.0 - z;                         // 1 - B~_{L,-1}
    double y2_prev = 0.0;                             // 1 - B~_{2,-1}
    double exponent = 0.0;
    double increment = 0.0;
    for (int c = 0; c < options_.max_depth; ++c) {
        const double y2_cur = theta2_deficit(lh * yh_prev + ll * yl_prev);
        const double t1 = lh * yh_prev + ll * yl_prev + l2 * y2_cur;
        const double t2 = lh * yh_prev + ll * yl_prev + l2 * y2_prev;
        increment = model_.r1 * t1 + model_.r2 * t2;
        exponent += increment;
        if (std::abs(increment) < options_.product_tol) return std::exp(-exponent);
        const double yl_cur = thetaLp_deficit(l2 * y2_cur);
        yh_prev = thetaH_deficit(ll * yl_cur + l2 * y2_cur);
        yl_prev = yl_cur;
        y2_prev = y2_cur;
    }
    throw ConvergenceError(
        fmt("K~ generation sum hit max_depth=%g with increment %g",
            static_cast<double>(options_.max_depth), increment),
        increment);
}

double TransformEngine::dsa_k_composed(double z) const {
    // 1 - w for w = (lambda_H theta~_H(lambda_L (1-z)) + lambda_L z) / lambda_1.
    const double y = (config_.lambda_h * thetaH_deficit(config_.lambda_l * (1.0 - z)) +
                      config_.lambda_l * (1.0 - z)) /
                     model_.lambda_1;
    return dsa_h1_deterministic_from_deficit(y);
}

// ---------------------------------------------------------------------------
// Cycle and intervisit times
// ---------------------------------------------------------------------------

double TransformEngine::intervisit_admissible_max(QueueId queue) const {
    const double lambda = queue == QueueId::Q1 ? model_.lambda_1 : config_.lambda_2;
    if (!(lambda > 0.0)) throw ValidationError("intervisit LST needs a positive arrival rate");
    return lambda;
}

double TransformEngine::cycle_admissible_max(QueueId queue) const {
    const double lambda = queue == QueueId::Q1 ? model_.lambda_1 : config_.lambda_2;
    if (!(lambda > 0.0)) throw ValidationError("cycle-time LST needs a positive arrival rate");
    const auto g = [&](double s) { return busy_period(queue, s) - s / lambda; };
    if (g(lambda) >= 0.0) return lambda;  // PGF argument stays in [0, 1] up to lambda
    return bisect_root(g, 0.0, lambda);
}

double TransformEngine::intervisit_time(QueueId queue, double s) const {
    const double smax = intervisit_admissible_max(queue);
    if (!(s >= 0.0 && s <= smax)) {
        throw DomainError(fmt("intervisit LST: s=%g outside admissible [0, %g]", s, smax), 0.0, smax);
    }
    if (queue == QueueId::Q1) return polling_epoch_pgf(QueueId::Q1, 1.0 - s / model_.lambda_1, 1.0);
    return polling_epoch_pgf(QueueId::Q2, 1.0, 1.0 - s / config_.lambda_2);
}

double TransformEngine::cycle_time(QueueId queue, double s) const {
    const double smax = cycle_admissible_max(queue);
    if (!(s >= 0.0 && s <= smax)) {
        throw DomainError(fmt("cycle-time LST: s=%g outside admissible [0, %g]", s, smax), 0.0, smax);
    }
    if (queue == QueueId::Q1) {
        return polling_epoch_pgf(QueueId::Q1, theta1(s) - s / model_.lambda_1, 1.0);
    }
    return polling_epoch_pgf(QueueId::Q2, 1.0, theta2(s) - s / config_.lambda_2);
}

// ---------------------------------------------------------------------------
// Waiting times
// ---------------------------------------------------------------------------

double TransformEngine::waiting_admissible_max(CustomerClass cls) const {
    switch (cls) {
        case CustomerClass::High:
            return model_.lambda_1;
        case CustomerClass::Low: {
            if (!(config_.lambda_l > 0.0)) throw ValidationError("W~_L needs lambda_L > 0");
            const auto g = [&](double s) {
                return config_.lambda_h * thetaH(s) + config_.lambda_l - s;
            };
            if (g(model_.lambda_1) >= 0.0) return model_.lambda_1;
            return bisect_root(g, 0.0, model_.lambda_1);
        }
        case CustomerClass::Two:
            if (!(config_.lambda_2 > 0.0)) throw ValidationError("W~_2 needs lambda_2 > 0");
            return config_.lambda_2;
    }
    throw NumericalError("unknown customer class");
}

double TransformEngine::waiting_time(CustomerClass cls, double s) const {
    if (!(model_.sigma > 0.0)) {
        throw ValidationError("waiting-time transforms are degenerate for zero switch-over times");
    }
    const double smax = waiting_admissible_max(cls);
    if (!(s >= 0.0 && s <= smax)) {
        throw DomainError(fmt("waiting-time LST: s=%g outside admissible [0, %g]", s, smax), 0.0, smax);
    }
    if (s == 0.0) return 1.0;
    const auto& m = model_;
    switch (cls) {
        case CustomerClass::High: {
            const double den = s - config_.lambda_h * (1.0 - config_.service_h.lst(s));
            const double vb = polling_epoch_pgf(QueueId::Q1, 1.0 - s / m.lambda_1, 1.0);
            return m.routing.pi1 * (1.0 - m.rho) * (1.0 - vb) / (m.sigma * den) +
                   config_.lambda_l * (1.0 - config_.service_l.lst(s)) / den;
        }
        case CustomerClass::Low: {
            const double den = s - config_.lambda_l * (1.0 - completion_time(s));
            const double z1 = (config_.lambda_h * thetaH(s) + config_.lambda_l - s) / m.lambda_1;
            const double vb = polling_epoch_pgf(QueueId::Q1, z1, 1.0);
            return m.routing.pi1 * (1.0 - m.rho) * (1.0 - vb) / (m.sigma * den);
        }
        case CustomerClass::Two: {
            const double den = s - config_.lambda_2 * (1.0 - config_.service_2.lst(s));
            const double vb = polling_epoch_pgf(QueueId::Q2, 1.0, 1.0 - s / config_.lambda_2);
            return m.routing.pi2 * (1.0 - m.rho) * (1.0 - vb) / (m.sigma * den);
        }
    }
    throw NumericalError("unknown customer class");
}

double TransformEngine::waiting_time_alt(CustomerClass cls, double s) const {
    if (!(model_.sigma > 0.0)) {
        throw ValidationError("waiting-time transforms are degenerate for zero switch-over times");
    }
    const double smax = waiting_admissible_max(cls);
    if (!(s >= 0.0 && s <= smax)) {
        throw DomainError(fmt("waiting-time LST: s=%g outside admissible [0, %g]", s, smax), 0.0, smax);
    }
    if (s == 0.0) return 1.0;
    const auto& m = model_;
    const auto& r = m.routing;
    switch (cls) {
        case CustomerClass::High: {
            const double den = s - config_.lambda_h * (1.0 - config_.service_h.lst(s));
            const double z = 1.0 - s / m.lambda_1;
            const double bracket =
                1.0 - r.r11 * switchover_pgf(1, 1, z, 1.0) - r.r21 * dsa_g1(z);
            const double tail = m.rho_l * (1.0 - config_.service_l.lst(s)) /
                                (den * config_.service_l.mean());
            return r.pi1 * (1.0 - m.rho) * bracket / (m.sigma * den) + tail;
        }
        case CustomerClass::Low: {
            const double den = s - config_.lambda_l * (1.0 - completion_time(s));
            const double z = (config_.lambda_h * thetaH(s) + config_.lambda_l - s) / m.lambda_1;
            const double bracket =
                1.0 - r.r11 * switchover_pgf(1, 1, z, 1.0) - r.r21 * dsa_g1(z);
            return r.pi1 * (1.0 - m.rho) * bracket / (m.sigma * den);
        }
        case CustomerClass::Two:
            return waiting_time(cls, s);
    }
    throw NumericalError("unknown customer class");
}

// ---------------------------------------------------------------------------
// Joint queue length at an arbitrary time
// ---------------------------------------------------------------------------

double TransformEngine::lambda_of(double zh, double zl, double z2) const {
    return config_.lambda_h * (1.0 - zh) + config_.lambda_l * (1.0 - zl) +
           config_.lambda_2 * (1.0 - z2);
}

double TransformEngine::arbitrary_time_pgf(double zh, double zl, double z2) const {
    const auto& m = model_;
    const auto& c = config_;
    if (!(m.sigma > 0.0)) {
        throw ValidationError("arbitrary-time PGF is degenerate for zero switch-over times");
    }
    const double lam = lambda_of(zh, zl, z2);
    if (lam == 0.0) return 1.0;

    const double pi1_w = m.routing.pi1 * (1.0 - m.rho) / m.sigma;
    const double pi2_w = m.routing.pi2 * (1.0 - m.rho) / m.sigma;
    double total = 0.0;

    // Server in a type-H service (weight rho_{H'} folded into the prefactor).
    const double h_h = thetaH(c.lambda_l * (1.0 - zl) + c.lambda_2 * (1.0 - z2));
    const double vc_h = priority_epoch_pgf(QueueId::Q1, h_h, zl, z2);
    if (c.lambda_h > 0.0) {
        const double vb_h = priority_epoch_pgf(QueueId::Q1, zh, zl, z2);
        const double bh = c.service_h.lst(lam);
        total += pi1_w * zh * (vb_h - vc_h) / (zh - bh) * (1.0 - bh) / lam;
    }

    // Server in a type-L completion time (weight rho_{L'} folded; the factor
    // E B_{L'} = rho_{L'} / lambda_L).
    if (c.lambda_l > 0.0) {
        // Content accumulated within the elapsed completion time. The owner
        // is present only while its own service runs (the setup share
        // 1 - rho_H of the completion time); during the H-clearing share the
        // delay-busy-period term counts the accumulated type-H customers.
        double inside =
            (1.0 - m.rho_h) * zl * (1.0 - c.service_l.lst(lam)) / (lam * c.service_l.mean());
        if (c.lambda_h > 0.0) {
            const double lam_hh = c.lambda_h * (1.0 - h_h) + c.lambda_l * (1.0 - zl) +
                                  c.lambda_2 * (1.0 - z2);
            const double bh = c.service_h.lst(lam);
            inside += (1.0 - m.rho_h) * zh * (c.service_l.lst(lam) - c.service_l.lst(lam_hh)) /
                      (zh - bh) * (1.0 - bh) / (lam * c.service_l.mean());
        }

        // State at an arbitrary completion-time beginning, owner excluded:
        // the telescoping over successive beginnings marks only the arrivals
        // that persist across one completion time (types L and 2).
        const double lam_l2 = c.lambda_l * (1.0 - zl) + c.lambda_2 * (1.0 - z2);
        if (lam_l2 == 0.0) {
            total += m.rho_lp * inside;  // the service-beginning ratio tends to E[N_L per visit]
        } else {
            const double vb_l = vc_h;  // V~_{b_L} = V~_{c_H}
            const double h_lp = thetaLp(c.lambda_2 * (1.0 - z2));
            const double vb_l_end = priority_epoch_pgf(
                QueueId::Q1, thetaH(c.lambda_l * (1.0 - h_lp) + c.lambda_2 * (1.0 - z2)), h_lp, z2);
            const double beta = completion_time(lam_l2);
            const double mean_blp = c.service_l.mean() / (1.0 - m.rho_h);
            total += pi1_w * mean_blp * (vb_l - vb_l_end) / (zl - beta) * inside;
        }
    }

    // Server in a type-2 service.
    if (c.lambda_2 > 0.0) {
        const double vb_2 = priority_epoch_pgf(QueueId::Q2, zh, zl, z2);
        const double h_2 = theta2(c.lambda_h * (1.0 - zh) + c.lambda_l * (1.0 - zl));
        const double vc_2 = priority_epoch_pgf(QueueId::Q2, zh, zl, h_2);
        const double b2 = c.service_2.lst(lam);
        total += pi2_w * z2 * (vb_2 - vc_2) / (z2 - b2) * (1.0 - b2) / lam;
    }

    // Server in a switch-over S_ij; the state at its start is the preceding
    // visit-end state.
    const double z1mix = mixture_arg(zh, zl);
    const double vc1 = polling_epoch_pgf(QueueId::Q1, arrivals_pgf(1, 2, z2), z2);
    const double vc2sw = polling_epoch_pgf(QueueId::Q2, z1mix, arrivals_pgf(2, 1, z1mix));
    const auto& r = m.routing;
    const double sw_w = (1.0 - m.rho) / m.sigma;
    total += sw_w * r.r11 * r.pi1 * vc1 * (1.0 - switchover_lst(1, 1, lam)) / lam;
    total += sw_w * r.r12 * r.pi2 * vc1 * (1.0 - switchover_lst(1, 2, lam)) / lam;
    total += sw_w * r.r21 * r.pi1 * vc2sw * (1.0 - switchover_lst(2, 1, lam)) / lam;
    total += sw_w * r.r22 * r.pi2 * vc2sw * (1.0 - switchover_lst(2, 2, lam)) / lam;
    return total;
}

double TransformEngine::mean_number_in_system(CustomerClass cls) const {
    const auto f = [&](double z) {
        switch (cls) {
            case CustomerClass::High: return arbitrary_time_pgf(z, 1.0, 1.0);
            case CustomerClass::Low: return arbitrary_time_pgf(1.0, z, 1.0);
            case CustomerClass::Two: return arbitrary_time_pgf(1.0, 1.0, z);
        }
        return 1.0;
    };
    // The per-location pieces are 0/0 ratios near z = 1; a step much smaller
    // than ~1e-3 drowns in cancellation of the truncated products, so the
    // step is kept coarse and Richardson recovers the order.
    double scale = 1.0;
    {
        const double h0 = 0.02;
        const double slope = (1.0 - f(1.0 - h0)) / h0;
        if (std::isfinite(slope) && slope > 1.0) scale = slope;
    }
    const double h = std::max(0.01 / scale, 1e-3);
    const auto central = [&](double step) { return (f(1.0 + step) - f(1.0 - step)) / (2.0 * step); };
    const double d_h = central(h);
    const double d_h2 = central(0.5 * h);
    const double d_h4 = central(0.25 * h);
    const double mean = (64.0 * d_h4 - 20.0 * d_h2 + d_h) / 45.0;
    if (!std::isfinite(mean) || mean < 0.0) {
        throw NumericalError(fmt("mean queue length estimate invalid (%g at step %g)", mean, h));
    }
    return mean;
}

double TransformEngine::mean_number_waiting(CustomerClass cls) const {
    double rho_c = 0.0;
    switch (cls) {
        case CustomerClass::High: rho_c = model_.rho_h; break;
        case CustomerClass::Low: rho_c = model_.rho_l; break;
        case CustomerClass::Two: rho_c = model_.rho_2; break;
    }
    return mean_number_in_system(cls) - rho_c;
}

// ---------------------------------------------------------------------------
// Means and handles
// ---------------------------------------------------------------------------

double TransformEngine::mean_cycle_time(QueueId queue) const {
    const double pi = queue == QueueId::Q1 ? model_.routing.pi1 : model_.routing.pi2;
    return model_.sigma / (pi * (1.0 - model_.rho));
}

double TransformEngine::mean_intervisit_time(QueueId queue) const {
    const double rho_i = queue == QueueId::Q1 ? model_.rho_1 : model_.rho_2;
    return (1.0 - rho_i) * mean_cycle_time(queue);
}

double TransformEngine::mean_busy_period(QueueId queue) const {
    if (queue == QueueId::Q1) return (model_.rho_1 / model_.lambda_1) / (1.0 - model_.rho_1);
    return config_.service_2.mean() / (1.0 - model_.rho_2);
}

double TransformEngine::mean_waiting_time(CustomerClass cls) const {
    return transform_moment(waiting_time_handle(cls), 1);
}

TransformHandle TransformEngine::busy_period_handle(QueueId queue) const {
    TransformEngine copy = *this;
    const char* name = queue == QueueId::Q1 ? "theta_1" : "theta_2";
    return {TransformHandle::Kind::Lst, name,
            [copy, queue](double s) { return copy.busy_period(queue, s); },
            0.0, std::numeric_limits<double>::infinity(), options_};
}

TransformHandle TransformEngine::busy_period_handle(CustomerClass cls) const {
    TransformEngine copy = *this;
    const std::string name = std::string("theta_") + to_string(cls);
    return {TransformHandle::Kind::Lst, name,
            [copy, cls](double s) { return copy.busy_period(cls, s); },
            0.0, std::numeric_limits<double>::infinity(), options_};
}

TransformHandle TransformEngine::completion_time_handle() const {
    TransformEngine copy = *this;
    return {TransformHandle::Kind::Lst, "B_L'",
            [copy](double s) { return copy.completion_time(s); },
            0.0, std::numeric_limits<double>::infinity(), options_};
}

TransformHandle TransformEngine::cycle_time_handle(QueueId queue) const {
    TransformEngine copy = *this;
    const char* name = queue == QueueId::Q1 ? "C_1" : "C_2";
    const double lambda = queue == QueueId::Q1 ? model_.lambda_1 : config_.lambda_2;
    return {TransformHandle::Kind::Lst, name,
            [copy, queue, lambda](double s) {
                const double z = copy.busy_period(queue, s) - s / lambda;
                return queue == QueueId::Q1 ? copy.polling_epoch_pgf(QueueId::Q1, z, 1.0)
                                            : copy.polling_epoch_pgf(QueueId::Q2, 1.0, z);
            },
            0.0, cycle_admissible_max(queue), options_};
}

TransformHandle TransformEngine::intervisit_handle(QueueId queue) const {
    TransformEngine copy = *this;
    const char* name = queue == QueueId::Q1 ? "I_1" : "I_2";
    const double lambda = queue == QueueId::Q1 ? model_.lambda_1 : config_.lambda_2;
    return {TransformHandle::Kind::Lst, name,
            [copy, queue, lambda](double s) {
                return queue == QueueId::Q1
                           ? copy.polling_epoch_pgf(QueueId::Q1, 1.0 - s / lambda, 1.0)
                           : copy.polling_epoch_pgf(QueueId::Q2, 1.0, 1.0 - s / lambda);
            },
            0.0, intervisit_admissible_max(queue), options_};
}

TransformHandle TransformEngine::waiting_time_handle(CustomerClass cls) const {
    TransformEngine copy = *this;
    const std::string name = std::string("W_") + to_string(cls);
    const auto& m = model_;
    const auto& c = config_;
    std::function<double(double)> eval;
    switch (cls) {
        case CustomerClass::High:
            eval = [copy, m, c](double s) {
                if (s == 0.0) return 1.0;
                const double den = s - c.lambda_h * (1.0 - c.service_h.lst(s));
                const double vb = copy.polling_epoch_pgf(QueueId::Q1, 1.0 - s / m.lambda_1, 1.0);
                return m.routing.pi1 * (1.0 - m.rho) * (1.0 - vb) / (m.sigma * den) +
                       c.lambda_l * (1.0 - c.service_l.lst(s)) / den;
            };
            break;
        case CustomerClass::Low:
            eval = [copy, m, c](double s) {
                if (s == 0.0) return 1.0;
                const double den = s - c.lambda_l * (1.0 - copy.completion_time(s));
                const double z1 = (c.lambda_h * copy.busy_period(CustomerClass::High, s) +
                                   c.lambda_l - s) / m.lambda_1;
                const double vb = copy.polling_epoch_pgf(QueueId::Q1, z1, 1.0);
                return m.routing.pi1 * (1.0 - m.rho) * (1.0 - vb) / (m.sigma * den);
            };
            break;
        case CustomerClass::Two:
            eval = [copy, m, c](double s) {
                if (s == 0.0) return 1.0;
                const double den = s - c.lambda_2 * (1.0 - c.service_2.lst(s));
                const double vb = copy.polling_epoch_pgf(QueueId::Q2, 1.0, 1.0 - s / c.lambda_2);
                return m.routing.pi2 * (1.0 - m.rho) * (1.0 - vb) / (m.sigma * den);
            };
            break;
    }
    if (!(model_.sigma > 0.0)) {
        throw ValidationError("waiting-time transforms are degenerate for zero switch-over times");
    }
    // Near s = 0 the waiting-time forms are 0/0 ratios of truncated products,
    // so their evaluation noise grows like 1/s; moment extraction needs a
    // coarser relative step than plain transforms (Richardson keeps the
    // truncation error at ~1e-8 regardless).
    EvalOptions moment_options = options_;
    moment_options.fd_step = std::max(options_.fd_step, 1e-2);
    return {TransformHandle::Kind::Lst, name, std::move(eval), 0.0, waiting_admissible_max(cls),
            moment_options};
}

TransformHandle TransformEngine::dsa_g1_handle() const {
    TransformEngine copy = *this;
    return {TransformHandle::Kind::Pgf, "G_1", [copy](double z) { return copy.dsa_g1(z); },
            0.0, 1.0, options_};
}

TransformHandle TransformEngine::dsa_h1_handle() const {
    TransformEngine copy = *this;
    return {TransformHandle::Kind::Pgf, "H_1", [copy](double z) { return copy.dsa_h1(z); },
            0.0, 1.0, options_};
}

TransformHandle TransformEngine::dsa_k_handle() const {
    TransformEngine copy = *this;
    return {TransformHandle::Kind::Pgf, "K", [copy](double z) { return copy.dsa_k_direct(z); },
            0.0, 1.0, options_};
}

}  // namespace polling
