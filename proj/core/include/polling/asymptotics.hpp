#pragma once

#include "polling/config.hpp"
#include "polling/model.hpp"

namespace polling {

// Parameters of the three limit laws for the scaled delays. Gamma parameters
// are shape/rate: the limiting scaled delay of classes L and 2 (and the
// positive part of class H) is U * Gamma(alpha + 1, omega_class) with U
// uniform on [0, 1] independent of the gamma variable.
//
// Hatted quantities are loads and rates normalized by the total load; they
// are invariant along a sweep that scales all arrival rates together.
struct AsymptoticParams {
    double alpha;
    double nu1;
    double nu2;
    double omega_h;   // = nu1
    double omega_l;   // = (1 - rho_hat_H) nu1
    double omega_2;   // = nu2
    double rho_hat_h;
    double rho_hat_l;
    double rho_hat_1;
    double rho_hat_2;
    double rho_hat_lp;  // rho_hat_L / (1 - rho_hat_H): the class-H atom at 0
    double es_tot;
    double alpha_1;     // alpha / es_tot

    // Large-switch-over endpoints (at the configuration's own loads).
    double u_h;   // (1 - rho_1) / (1 - rho)
    double u_l;   // (1 - rho_{L'}) / (1 - rho)
    double u_2;   // (1 - rho_2) / (1 - rho)
    double rho_lp;  // unhatted rho_{L'}: the class-H atom in the r -> inf law

    // Double-limit endpoints.
    double u_h1;  // 1 - rho_hat_1
    double u_l1;  // 1 - rho_hat_{L'}
    double u_21;  // 1 - rho_hat_2
};

// Evaluates the limit-law parameters for the ray through `config` (all
// arrival rates scaled together). Throws NumericalError for degenerate
// second moments and ValidationError for invalid configurations.
AsymptoticParams heavy_traffic_params(const SystemConfig& config);

// P(U * Gamma <= t) for U ~ uniform[0,1] independent of Gamma with shape
// alpha + 1 and rate omega:
//   F_{alpha+1}(t) + (t omega / alpha) (1 - F_alpha(t)),
// the stationary-excess law of a Gamma(alpha) variable.
double gamma_mixture_cdf(double alpha, double omega, double t);

// Mean of U * Gamma: (alpha + 1) / (2 omega).
double gamma_mixture_mean(double alpha, double omega);

enum class LimitRegime { HeavyTraffic, LargeSwitchover, DoubleLimit };

// CDF of the limiting scaled delay for one class in one regime, at t >= 0.
// Scaled variables per regime: (1-rho) W, W/r, (1-rho) W/r.
double limit_cdf(LimitRegime regime, CustomerClass cls, double t, const AsymptoticParams& params);

// Mean of the limiting scaled delay (atoms at zero included).
double limit_mean(LimitRegime regime, CustomerClass cls, const AsymptoticParams& params);

// Heavy-traffic CDF with alpha replaced by alpha_1 * r, evaluated at t * r:
// the law of the heavy-traffic limit rescaled by a large total switch-over
// time r. Converges to the double-limit uniform law as r grows.
double rescaled_heavy_traffic_cdf(CustomerClass cls, double t, double r,
                                  const AsymptoticParams& params);

}  // namespace polling
