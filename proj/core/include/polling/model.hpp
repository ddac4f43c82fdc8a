#pragma once

#include "polling/config.hpp"

namespace polling {

enum class CustomerClass { High, Low, Two };
enum class QueueId { Q1 = 1, Q2 = 2 };

const char* to_string(CustomerClass c);

// Stationary quantities of the routing chain. r_ij is the probability that
// the previous poll was at queue i given the next poll is at queue j, so the
// columns of r sum to one.
struct RoutingQuantities {
    double pi1;
    double pi2;
    double r11;
    double r12;
    double r21;
    double r22;
};

// Throws ValidationError unless 0 <= p_i < 1.
RoutingQuantities derive_routing(double p1, double p2);

// All first-order quantities of the scenario; computed once, immutable.
struct DerivedModel {
    RoutingQuantities routing;
    double lambda_1;  // lambda_H + lambda_L
    double sigma;     // mean of an arbitrary switch-over time
    double rho_h;
    double rho_l;
    double rho_1;
    double rho_2;
    double rho;
    double rho_lp;    // rho_{L'} = rho_L / (1 - rho_H)
    double rho_hp;    // rho_{H'} = rho_1 - rho_{L'}
    double es_tot;    // E S^tot
    double r1;        // E R_1 = E S_12 + p2/(1-p2) E S_22
    double r2;        // E R_2 = p1/(1-p1) E S_11 + E S_21

    double mean_service(CustomerClass c, const SystemConfig& cfg) const;
    bool stable() const noexcept { return rho < 1.0; }
};

// Computable for any config with p_i in [0,1) and nonnegative rates; callers
// that need stability check stable() (load sweeps probe rho >= 1 on purpose).
DerivedModel derive_model(const SystemConfig& config);

}  // namespace polling
