#include "polling/asymptotics.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "polling/errors.hpp"

namespace polling {

AsymptoticParams heavy_traffic_params(const SystemConfig& config) {
    const DerivedModel m = derive_model(config);
    if (!(m.rho > 0.0)) throw ValidationError("heavy-traffic parameters need a positive load");

    AsymptoticParams p{};
    p.rho_hat_h = m.rho_h / m.rho;
    p.rho_hat_l = m.rho_l / m.rho;
    p.rho_hat_1 = m.rho_1 / m.rho;
    p.rho_hat_2 = m.rho_2 / m.rho;
    p.rho_hat_lp = p.rho_hat_l / (1.0 - p.rho_hat_h);
    p.es_tot = m.es_tot;

    const double lam_hat_h = config.lambda_h / m.rho;
    const double lam_hat_l = config.lambda_l / m.rho;
    const double lam_hat_2 = config.lambda_2 / m.rho;
    const double denom = lam_hat_h * config.service_h.second_moment() +
                         lam_hat_l * config.service_l.second_moment() +
                         lam_hat_2 * config.service_2.second_moment();
    if (!(denom > 0.0)) {
        throw NumericalError("degenerate service-time second moments: limit parameters undefined");
    }
    p.alpha = 2.0 * p.rho_hat_1 * p.rho_hat_2 * p.es_tot / denom;
    p.nu1 = 2.0 * p.rho_hat_1 / denom;
    p.nu2 = 2.0 * p.rho_hat_2 / denom;
    p.omega_h = p.nu1;
    p.omega_l = (1.0 - p.rho_hat_h) * p.nu1;
    p.omega_2 = p.nu2;
    p.alpha_1 = p.es_tot > 0.0 ? p.alpha / p.es_tot
                               : 2.0 * p.rho_hat_1 * p.rho_hat_2 / denom;

    p.rho_lp = m.rho_lp;
    p.u_h = (1.0 - m.rho_1) / (1.0 - m.rho);
    p.u_l = (1.0 - m.rho_lp) / (1.0 - m.rho);
    p.u_2 = (1.0 - m.rho_2) / (1.0 - m.rho);

    p.u_h1 = 1.0 - p.rho_hat_1;
    p.u_l1 = 1.0 - p.rho_hat_lp;
    p.u_21 = 1.0 - p.rho_hat_2;
    return p;
}

double gamma_mixture_cdf(double alpha, double omega, double t) {
    if (!(alpha > 0.0) || !(omega > 0.0)) {
        throw DomainError("gamma mixture needs alpha > 0 and omega > 0", 0.0, 0.0);
    }
    if (!(t >= 0.0)) throw DomainError("gamma mixture CDF needs t >= 0", 0.0, 0.0);
    if (t == 0.0) return 0.0;
    const double f_upper = boost::math::gamma_p(alpha + 1.0, omega * t);
    const double f_lower = boost::math::gamma_p(alpha, omega * t);
    return std::min(1.0, f_upper + t * omega / alpha * (1.0 - f_lower));
}

double gamma_mixture_mean(double alpha, double omega) {
    if (!(alpha > 0.0) || !(omega > 0.0)) {
        throw DomainError("gamma mixture needs alpha > 0 and omega > 0", 0.0, 0.0);
    }
    return (alpha + 1.0) / (2.0 * omega);
}

namespace {

double uniform_cdf(double t, double endpoint) {
    return std::min(1.0, t / endpoint);
}

}  // namespace

double limit_cdf(LimitRegime regime, CustomerClass cls, double t, const AsymptoticParams& p) {
    if (!(t >= 0.0)) throw DomainError("limit CDF needs t >= 0", 0.0, 0.0);
    switch (regime) {
        case LimitRegime::HeavyTraffic:
            switch (cls) {
                case CustomerClass::High:
                    return p.rho_hat_lp +
                           (1.0 - p.rho_hat_lp) * gamma_mixture_cdf(p.alpha, p.omega_h, t);
                case CustomerClass::Low: return gamma_mixture_cdf(p.alpha, p.omega_l, t);
                case CustomerClass::Two: return gamma_mixture_cdf(p.alpha, p.omega_2, t);
            }
            break;
        case LimitRegime::LargeSwitchover:
            switch (cls) {
                case CustomerClass::High:
                    return p.rho_lp + (1.0 - p.rho_lp) * uniform_cdf(t, p.u_h);
                case CustomerClass::Low: return uniform_cdf(t, p.u_l);
                case CustomerClass::Two: return uniform_cdf(t, p.u_2);
            }
            break;
        case LimitRegime::DoubleLimit:
            switch (cls) {
                case CustomerClass::High:
                    return p.rho_hat_lp + (1.0 - p.rho_hat_lp) * uniform_cdf(t, p.u_h1);
                case CustomerClass::Low: return uniform_cdf(t, p.u_l1);
                case CustomerClass::Two: return uniform_cdf(t, p.u_21);
            }
            break;
    }
    throw NumericalError("unknown limit regime or class");
}

double limit_mean(LimitRegime regime, CustomerClass cls, const AsymptoticParams& p) {
    switch (regime) {
        case LimitRegime::HeavyTraffic:
            switch (cls) {
                case CustomerClass::High:
                    return (1.0 - p.rho_hat_lp) * gamma_mixture_mean(p.alpha, p.omega_h);
                case CustomerClass::Low: return gamma_mixture_mean(p.alpha, p.omega_l);
                case CustomerClass::Two: return gamma_mixture_mean(p.alpha, p.omega_2);
            }
            break;
        case LimitRegime::LargeSwitchover:
            switch (cls) {
                case CustomerClass::High: return (1.0 - p.rho_lp) * 0.5 * p.u_h;
                case CustomerClass::Low: return 0.5 * p.u_l;
                case CustomerClass::Two: return 0.5 * p.u_2;
            }
            break;
        case LimitRegime::DoubleLimit:
            switch (cls) {
                case CustomerClass::High: return (1.0 - p.rho_hat_lp) * 0.5 * p.u_h1;
                case CustomerClass::Low: return 0.5 * p.u_l1;
                case CustomerClass::Two: return 0.5 * p.u_21;
            }
            break;
    }
    throw NumericalError("unknown limit regime or class");
}

double rescaled_heavy_traffic_cdf(CustomerClass cls, double t, double r,
                                  const AsymptoticParams& p) {
    if (!(r > 0.0)) throw DomainError("rescaled heavy-traffic CDF needs r > 0", 0.0, 0.0);
    if (!(t >= 0.0)) throw DomainError("rescaled heavy-traffic CDF needs t >= 0", 0.0, 0.0);
    const double alpha_r = p.alpha_1 * r;
    switch (cls) {
        case CustomerClass::High:
            return p.rho_hat_lp +
                   (1.0 - p.rho_hat_lp) * gamma_mixture_cdf(alpha_r, p.omega_h, t * r);
        case CustomerClass::Low: return gamma_mixture_cdf(alpha_r, p.omega_l, t * r);
        case CustomerClass::Two: return gamma_mixture_cdf(alpha_r, p.omega_2, t * r);
    }
    throw NumericalError("unknown customer class");
}

}  // namespace polling
