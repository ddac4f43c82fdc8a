#include "polling/model.hpp"

#include "polling/errors.hpp"

namespace polling {

const char* to_string(CustomerClass c) {
    switch (c) {
        case CustomerClass::High: return "H";
        case CustomerClass::Low: return "L";
        case CustomerClass::Two: return "2";
    }
    return "?";
}

RoutingQuantities derive_routing(double p1, double p2) {
    if (!(p1 >= 0.0 && p1 < 1.0)) throw ValidationError("repeat probability p1 must be in [0, 1)");
    if (!(p2 >= 0.0 && p2 < 1.0)) throw ValidationError("repeat probability p2 must be in [0, 1)");
    const double denom = 2.0 - p1 - p2;
    return RoutingQuantities{
        (1.0 - p2) / denom,  // pi1
        (1.0 - p1) / denom,  // pi2
        p1,                  // r11
        1.0 - p2,            // r12
        1.0 - p1,            // r21
        p2,                  // r22
    };
}

DerivedModel derive_model(const SystemConfig& c) {
    if (!(c.lambda_h >= 0.0 && c.lambda_l >= 0.0 && c.lambda_2 >= 0.0)) {
        throw ValidationError("arrival rates must be >= 0");
    }
    const RoutingQuantities rt = derive_routing(c.p1, c.p2);

    DerivedModel m{};
    m.routing = rt;
    m.lambda_1 = c.lambda_h + c.lambda_l;
    m.rho_h = c.lambda_h * c.service_h.mean();
    m.rho_l = c.lambda_l * c.service_l.mean();
    m.rho_1 = m.rho_h + m.rho_l;
    m.rho_2 = c.lambda_2 * c.service_2.mean();
    m.rho = m.rho_1 + m.rho_2;
    m.rho_lp = m.rho_l / (1.0 - m.rho_h);
    m.rho_hp = m.rho_1 - m.rho_lp;

    m.sigma = rt.r11 * rt.pi1 * c.s11.mean() + rt.r12 * rt.pi2 * c.s12.mean() +
              rt.r21 * rt.pi1 * c.s21.mean() + rt.r22 * rt.pi2 * c.s22.mean();
    m.r1 = c.s12.mean() + c.p2 / (1.0 - c.p2) * c.s22.mean();
    m.r2 = c.p1 / (1.0 - c.p1) * c.s11.mean() + c.s21.mean();
    m.es_tot = (2.0 - c.p1 - c.p2) / ((1.0 - c.p1) * (1.0 - c.p2)) * m.sigma;
    return m;
}

double DerivedModel::mean_service(CustomerClass c, const SystemConfig& cfg) const {
    switch (c) {
        case CustomerClass::High: return cfg.service_h.mean();
        case CustomerClass::Low: return cfg.service_l.mean();
        case CustomerClass::Two: return cfg.service_2.mean();
    }
    return 0.0;
}

}  // namespace polling
