#include <doctest.h>

#include <cmath>
#include <vector>

#include "polling/errors.hpp"
#include "polling/study.hpp"
#include "polling/transforms.hpp"
#include "test_support.hpp"

using namespace polling;

namespace {

// Borel series for the busy period of M/D/1: the busy period started by one
// customer lasts n deterministic services with the Borel-Tanner weights, so
// theta~(s) = sum_n exp(-n (s + lambda) d) (n lambda d)^(n-1) / n!.
double borel_busy_lst(double lambda, double d, double s) {
    double total = 0.0;
    for (int n = 1; n < 4000; ++n) {
        const double log_term = -n * (s + lambda) * d + (n - 1) * std::log(n * lambda * d) -
                                std::lgamma(n + 1.0);
        const double term = std::exp(log_term);
        total += term;
        if (n > 5 && term < 1e-17) break;
    }
    return total;
}

}  // namespace

TEST_CASE("busy period solves the Kendall equation") {
    // M/M/1 with lambda = 0.5 and mean service 0.85, embedded as queue 1
    // with an even H/L split of the same exponential service.
    const auto service = ServiceDistribution::exponential(1.0 / 0.85);
    const SystemConfig cfg{0.25, 0.25, 0.1,   service, service,
                           ServiceDistribution::exponential(2.0),
                           0.4,  0.3,  service, service, service, service};
    const TransformEngine eng(cfg);

    SUBCASE("value 1 at s = 0") {
        CHECK(eng.busy_period(QueueId::Q1, 0.0) == 1.0);
    }
    SUBCASE("mean matches E B / (1 - rho)") {
        const double mean = transform_moment(eng.busy_period_handle(QueueId::Q1), 1);
        CHECK(mean == doctest::Approx(0.85 / (1.0 - 0.425)).epsilon(1e-8));
        CHECK(eng.mean_busy_period(QueueId::Q1) == doctest::Approx(1.478260869565).epsilon(1e-9));
    }
    SUBCASE("second moment matches E B^2 / (1 - rho)^3") {
        const double m2 = transform_moment(eng.busy_period_handle(QueueId::Q1), 2);
        CHECK(m2 == doctest::Approx(2.0 * 0.85 * 0.85 / std::pow(0.575, 3)).epsilon(1e-6));
    }
    SUBCASE("residual below fixpoint tolerance") {
        for (double s : {0.0, 0.1, 1.0, 10.0}) {
            const double x = eng.busy_period(QueueId::Q1, s);
            const double b1 = service.lst(s + 0.5 * (1.0 - x));  // both classes share the service
            CHECK(std::abs(b1 - x) <= 1e-13);
        }
    }
}

TEST_CASE("deterministic-service busy period matches the Borel series") {
    const auto service = ServiceDistribution::deterministic(1.0);
    const SystemConfig cfg{0.3, 0.3, 0.1, service, service,
                           ServiceDistribution::exponential(1.0),
                           0.2, 0.2, service, service, service, service};
    const TransformEngine eng(cfg);
    for (double s : {0.05, 0.1, 0.5, 2.0, 5.0}) {
        CHECK(eng.busy_period(QueueId::Q1, s) ==
              doctest::Approx(borel_busy_lst(0.6, 1.0, s)).epsilon(1e-13));
    }
}

TEST_CASE("completion time composes the high-priority busy period") {
    auto cfg = reference_heavy_traffic_config(0.8);
    const TransformEngine eng(cfg);
    CHECK(eng.completion_time(0.0) == 1.0);
    CHECK(transform_moment(eng.completion_time_handle(), 1) ==
          doctest::Approx(0.85 / (1.0 - 0.8 / 3.0)).epsilon(1e-8));  // 1.159091

    SUBCASE("no high-priority interference reduces to the plain service LST") {
        auto low_only = cfg;
        low_only.lambda_h = 0.0;
        const TransformEngine quiet(low_only);
        for (double s : {0.1, 0.7, 2.0}) {
            CHECK(quiet.completion_time(s) == doctest::Approx(cfg.service_l.lst(s)).epsilon(1e-13));
        }
    }
}

TEST_CASE("arrival and switch-over PGFs") {
    const auto cfg = reference_heavy_traffic_config(0.5);
    const TransformEngine eng(cfg);
    SUBCASE("identity points") {
        for (int i : {1, 2}) {
            for (int j : {1, 2}) {
                CHECK(eng.arrivals_pgf(i, j, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(eng.switchover_pgf(i, j, 1.0, 1.0) == 1.0);
            }
        }
    }
    SUBCASE("deterministic switch-over PGF is the exponential of the marks") {
        auto det = cfg;
        det.s12 = ServiceDistribution::deterministic(1.3);
        const TransformEngine deng(det);
        const double lam1 = cfg.lambda_h + cfg.lambda_l;
        const double z1 = 0.3, z2 = 0.8;
        CHECK(deng.switchover_pgf(1, 2, z1, z2) ==
              doctest::Approx(std::exp(-1.3 * (lam1 * (1 - z1) + cfg.lambda_2 * (1 - z2))))
                  .epsilon(1e-13));
    }
    SUBCASE("mean arrivals during a busy period") {
        // E K_12 = E theta_1 * lambda_2
        TransformEngine copy = eng;
        const TransformHandle k12(TransformHandle::Kind::Pgf, "K_12",
                                  [copy](double z) { return copy.arrivals_pgf(1, 2, z); }, 0.0, 1.0,
                                  eng.options());
        CHECK(transform_moment(k12, 1) ==
              doctest::Approx(eng.mean_busy_period(QueueId::Q1) * cfg.lambda_2).epsilon(1e-7));
    }
}

TEST_CASE("polling-epoch PGF evaluates to 1 at the identity and matches its marginal form") {
    testing::ConfigGen gen(31);
    for (int i = 0; i < 5; ++i) {
        const auto cfg = gen.stable_config();
        const TransformEngine eng(cfg);
        const auto& r = eng.model().routing;
        CHECK(eng.polling_epoch_pgf(QueueId::Q1, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(eng.polling_epoch_pgf(QueueId::Q2, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(eng.priority_epoch_pgf(QueueId::Q1, 1.0, 1.0, 1.0) ==
              doctest::Approx(1.0).epsilon(1e-12));
        // V~_{b_1}(z, 1) = r11 M~_11(z,1) + r21 G~_1(z), with G~_1 in the
        // direct product form: two independent evaluation routes.
        for (int k = 1; k <= 9; ++k) {
            const double z = 0.1 * k;
            const double lhs = eng.polling_epoch_pgf(QueueId::Q1, z, 1.0);
            const double rhs = r.r11 * eng.switchover_pgf(1, 1, z, 1.0) +
                               r.r21 * eng.dsa_g1_product(z);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("intervisit mean from the polling-epoch PGF") {
    const auto cfg = reference_heavy_traffic_config(0.5);
    const TransformEngine eng(cfg);
    const auto& m = eng.model();
    const double closed = m.sigma * (1.0 - m.rho_1) / (m.routing.pi1 * (1.0 - m.rho));
    CHECK(transform_moment(eng.intervisit_handle(QueueId::Q1), 1) ==
          doctest::Approx(closed).epsilon(1e-6));
}

TEST_CASE("descendant-set forms of G~_1 agree on a z-grid") {
    testing::ConfigGen gen(57);
    for (int i = 0; i < 10; ++i) {
        const auto cfg = gen.stable_config();
        const TransformEngine eng(cfg);
        CHECK(eng.dsa_h1(1.0) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(eng.dsa_g1(1.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (int k = 1; k <= 19; ++k) {
            const double z = 0.05 * k;
            CHECK(eng.dsa_g1(z) == doctest::Approx(eng.dsa_g1_product(z)).epsilon(1e-8));
        }
    }
}

TEST_CASE("general and deterministic H~_1 coincide when the aggregated switch-overs are deterministic") {
    // with p1 = p2 = 0, R_1 = S_12 and R_2 = S_21 are deterministic
    auto cfg = reference_large_switchover_config(20.0);
    cfg.p1 = 0.0;
    cfg.p2 = 0.0;
    const TransformEngine eng(cfg);
    for (double z : {0.1, 0.3, 0.6, 0.9}) {
        CHECK(eng.dsa_h1(z) == doctest::Approx(eng.dsa_h1_deterministic(z)).epsilon(1e-12));
    }
}

TEST_CASE("K~ direct generation form equals the composed form") {
    SUBCASE("reference deterministic switch-over scenario") {
        const TransformEngine eng(reference_large_switchover_config(50.0));
        CHECK(eng.dsa_k_direct(1.0) == doctest::Approx(1.0).epsilon(1e-12));
        for (double z : {0.2, 0.5, 0.8}) {
            CHECK(eng.dsa_k_direct(z) == doctest::Approx(eng.dsa_k_composed(z)).epsilon(1e-8));
        }
    }
    SUBCASE("randomized deterministic switch-over configs") {
        testing::ConfigGen gen(83);
        for (int i = 0; i < 10; ++i) {
            const TransformEngine eng(gen.stable_config_deterministic_switchover());
            for (double z : {0.2, 0.5, 0.8}) {
                CHECK(eng.dsa_k_direct(z) == doctest::Approx(eng.dsa_k_composed(z)).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("first moments of H_1 and K under deterministic switch-overs") {
    for (double r : {1.0, 50.0}) {
        const TransformEngine eng(reference_large_switchover_config(r));
        const auto& m = eng.model();
        const double eh1 = transform_moment(eng.dsa_h1_handle(), 1);
        CHECK(eh1 == doctest::Approx(m.lambda_1 * (1.0 - m.rho_1) * r / (1.0 - m.rho)).epsilon(1e-3));
        const double ek = transform_moment(eng.dsa_k_handle(), 1);
        CHECK(ek == doctest::Approx(eng.config().lambda_l * (1.0 - m.rho_lp) * r / (1.0 - m.rho))
                        .epsilon(1e-3));
    }
}

TEST_CASE("cycle and intervisit LSTs") {
    const auto cfg = reference_heavy_traffic_config(0.8);
    const TransformEngine eng(cfg);
    CHECK(eng.cycle_time(QueueId::Q1, 0.0) == 1.0);
    CHECK(eng.cycle_time(QueueId::Q2, 0.0) == 1.0);
    CHECK(eng.intervisit_time(QueueId::Q1, 0.0) == 1.0);

    SUBCASE("mean cycle time at rho = 0.8") {
        CHECK(eng.mean_cycle_time(QueueId::Q1) == doctest::Approx(22.285714285714).epsilon(1e-9));
        CHECK(transform_moment(eng.cycle_time_handle(QueueId::Q1), 1) ==
              doctest::Approx(22.285714285714).epsilon(1e-6));
    }
    SUBCASE("E I_i = (1 - rho_i) E C_i for random configs") {
        testing::ConfigGen gen(11);
        for (int i = 0; i < 6; ++i) {
            const TransformEngine e(gen.stable_config());
            for (auto q : {QueueId::Q1, QueueId::Q2}) {
                const double ec = transform_moment(e.cycle_time_handle(q), 1);
                const double ei = transform_moment(e.intervisit_handle(q), 1);
                const double rho_i = q == QueueId::Q1 ? e.model().rho_1 : e.model().rho_2;
                CHECK(ei == doctest::Approx((1.0 - rho_i) * ec).epsilon(1e-6));
                CHECK(ec == doctest::Approx(e.mean_cycle_time(q)).epsilon(1e-6));
            }
        }
    }
    SUBCASE("arguments outside the admissible range raise a domain error") {
        const double smax = eng.cycle_admissible_max(QueueId::Q1);
        CHECK(smax > 0.0);
        try {
            eng.cycle_time(QueueId::Q1, smax * 1.5);
            FAIL("expected DomainError");
        } catch (const DomainError& e) {
            CHECK(e.admissible_max() == doctest::Approx(smax));
            CHECK(std::string(e.what()).find("admissible") != std::string::npos);
        }
        // the admissible endpoint really is the root of theta~(s) - s/lambda
        const double lam1 = eng.model().lambda_1;
        if (smax < lam1) {
            CHECK(eng.busy_period(QueueId::Q1, smax) ==
                  doctest::Approx(smax / lam1).epsilon(1e-9));
        }
    }
}

TEST_CASE("waiting-time LSTs") {
    const auto cfg = reference_heavy_traffic_config(0.5);
    const TransformEngine eng(cfg);
    for (auto cls : {CustomerClass::High, CustomerClass::Low, CustomerClass::Two}) {
        CHECK(eng.waiting_time(cls, 0.0) == 1.0);
    }

    SUBCASE("primary and G~_1-route forms agree") {
        testing::ConfigGen gen(19);
        for (int i = 0; i < 6; ++i) {
            const TransformEngine e(gen.stable_config());
            for (auto cls : {CustomerClass::High, CustomerClass::Low}) {
                const double smax = e.waiting_admissible_max(cls);
                for (double f : {0.1, 0.4, 0.8}) {
                    CHECK(e.waiting_time(cls, f * smax) ==
                          doctest::Approx(e.waiting_time_alt(cls, f * smax)).epsilon(1e-10));
                }
            }
        }
    }
    SUBCASE("vanishing low-priority stream") {
        auto reduced = cfg;
        reduced.lambda_l = 1e-9;
        auto gone = cfg;
        gone.lambda_l = 0.0;
        const TransformEngine a(reduced), b(gone);
        // with lambda_L = 0 the admissible range shrinks to [0, lambda_H]
        for (double s : {0.05, 0.1, 0.15}) {
            CHECK(a.waiting_time(CustomerClass::High, s) ==
                  doctest::Approx(b.waiting_time(CustomerClass::High, s)).epsilon(1e-6));
        }
        // the second summand of the H form carries the factor lambda_L
        const double den = 0.1 - gone.lambda_h * (1.0 - gone.service_h.lst(0.1));
        CHECK(gone.lambda_l * (1.0 - gone.service_l.lst(0.1)) / den == 0.0);
    }
    SUBCASE("mean waiting time is positive and finite") {
        for (auto cls : {CustomerClass::High, CustomerClass::Low, CustomerClass::Two}) {
            const double w = eng.mean_waiting_time(cls);
            CHECK(std::isfinite(w));
            CHECK(w > 0.0);
        }
        // non-preemptive priority: H waits less than L
        CHECK(eng.mean_waiting_time(CustomerClass::High) <
              eng.mean_waiting_time(CustomerClass::Low));
    }
}

TEST_CASE("joint queue-length PGF at an arbitrary time") {
    const auto cfg = reference_heavy_traffic_config(0.5);
    const TransformEngine eng(cfg);
    CHECK(eng.arbitrary_time_pgf(1.0, 1.0, 1.0) == 1.0);
    CHECK(eng.arbitrary_time_pgf(1.0 - 1e-6, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-4));

    SUBCASE("distributional Little's law per class") {
        const double lam[3] = {cfg.lambda_h, cfg.lambda_l, cfg.lambda_2};
        const CustomerClass cls[3] = {CustomerClass::High, CustomerClass::Low, CustomerClass::Two};
        for (int c = 0; c < 3; ++c) {
            const double nw = eng.mean_number_waiting(cls[c]);
            const double ew = eng.mean_waiting_time(cls[c]);
            CHECK(nw == doctest::Approx(lam[c] * ew).epsilon(1e-6));
        }
    }
    SUBCASE("Little's law for an asymmetric scenario with unequal means") {
        const SystemConfig asym{0.25, 0.15, 0.2,
                                ServiceDistribution::exponential(1.0 / 0.6),
                                ServiceDistribution::erlang(3, 3.0 / 1.1),
                                ServiceDistribution::deterministic(0.9),
                                0.2, 0.55,
                                ServiceDistribution::erlang(2, 2.0 / 1.5),
                                ServiceDistribution::exponential(0.5),
                                ServiceDistribution::deterministic(1.2),
                                ServiceDistribution::exponential(1.0 / 0.7)};
        const TransformEngine e(asym);
        const double lam[3] = {asym.lambda_h, asym.lambda_l, asym.lambda_2};
        const CustomerClass cls[3] = {CustomerClass::High, CustomerClass::Low, CustomerClass::Two};
        for (int c = 0; c < 3; ++c) {
            CHECK(e.mean_number_waiting(cls[c]) ==
                  doctest::Approx(lam[c] * e.mean_waiting_time(cls[c])).epsilon(1e-6));
        }
    }
    SUBCASE("values in [0, 1] on the unit cube") {
        for (double zh : {0.2, 0.7, 1.0}) {
            for (double zl : {0.3, 0.9}) {
                for (double z2 : {0.4, 1.0}) {
                    const double v = eng.arbitrary_time_pgf(zh, zl, z2);
                    CHECK(v >= 0.0);
                    CHECK(v <= 1.0 + 1e-12);
                }
            }
        }
    }
    SUBCASE("degenerate switch-over times are rejected") {
        auto zero = cfg;
        zero.s11 = zero.s12 = zero.s21 = zero.s22 = ServiceDistribution::deterministic(0.0);
        const TransformEngine z(zero);
        CHECK_THROWS_AS(z.arbitrary_time_pgf(0.5, 0.5, 0.5), ValidationError);
        CHECK_THROWS_AS(z.waiting_time(CustomerClass::Two, 0.05), ValidationError);
    }
}

TEST_CASE("monotonicity of transforms on their domains") {
    testing::ConfigGen gen(101);
    for (int i = 0; i < 4; ++i) {
        const TransformEngine eng(gen.stable_config());
        const auto w2 = eng.waiting_time_handle(CustomerClass::Two);
        const auto c1 = eng.cycle_time_handle(QueueId::Q1);
        for (const auto* h : {&w2, &c1}) {
            double prev = 1.0 + 1e-12;
            for (int k = 0; k <= 20; ++k) {
                const double v = (*h)(h->arg_max() * k / 20.0);
                CHECK(v <= prev + 1e-10);
                prev = v;
            }
        }
        const auto g1 = eng.dsa_g1_handle();
        double prev = -1e-12;
        for (int k = 0; k <= 20; ++k) {
            const double v = g1(k / 20.0);
            CHECK(v >= prev - 1e-10);
            prev = v;
        }
    }
}

TEST_CASE("halving the product tolerance moves values by less than the prior tolerance") {
    testing::ConfigGen gen(313);
    for (int i = 0; i < 5; ++i) {
        const auto cfg = gen.stable_config(0.35, 0.7);
        EvalOptions coarse;
        coarse.product_tol = 1e-8;
        EvalOptions fine = coarse;
        fine.product_tol = 5e-9;
        const TransformEngine a(cfg, coarse), b(cfg, fine);
        for (double z : {0.2, 0.5, 0.8}) {
            CHECK(std::abs(a.dsa_g1(z) - b.dsa_g1(z)) < coarse.product_tol);
            CHECK(std::abs(a.polling_epoch_pgf(QueueId::Q1, z, 0.6) -
                           b.polling_epoch_pgf(QueueId::Q1, z, 0.6)) < coarse.product_tol);
        }
    }
}

TEST_CASE("G~_1 approaches its heavy-traffic limit monotonically in rho") {
    const auto base = reference_heavy_traffic_config(0.5);
    const auto p = heavy_traffic_params(base);
    EvalOptions opts;
    opts.max_depth = 4000;
    for (double s : {0.5, 1.0, 2.0}) {
        const double limit = std::pow(p.nu1 / (p.nu1 + s), p.alpha);
        double prev_dev = 1.0;
        for (double rho : {0.9, 0.95, 0.99}) {
            const TransformEngine eng(with_total_load(base, rho), opts);
            const double lam1 = eng.model().lambda_1;
            const double dev = std::abs(eng.dsa_g1(1.0 - (1.0 - rho) * s / lam1) - limit);
            CHECK(dev < prev_dev);
            prev_dev = dev;
        }
    }
}

TEST_CASE("truncation failures are surfaced with the achieved deviation") {
    EvalOptions shallow;
    shallow.max_depth = 3;
    const TransformEngine eng(reference_heavy_traffic_config(0.9), shallow);
    try {
        eng.dsa_g1(0.3);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.achieved() > 0.0);
        CHECK(std::string(e.what()).find("max_depth") != std::string::npos);
    }
}

TEST_CASE("transform handles check their domain and normalize at the identity") {
    const auto cfg = reference_heavy_traffic_config(0.6);
    const TransformEngine eng(cfg);
    const std::vector<TransformHandle> handles = {
        eng.busy_period_handle(QueueId::Q1),    eng.busy_period_handle(QueueId::Q2),
        eng.busy_period_handle(CustomerClass::High), eng.busy_period_handle(CustomerClass::Low),
        eng.completion_time_handle(),           eng.cycle_time_handle(QueueId::Q1),
        eng.cycle_time_handle(QueueId::Q2),     eng.intervisit_handle(QueueId::Q1),
        eng.intervisit_handle(QueueId::Q2),     eng.waiting_time_handle(CustomerClass::High),
        eng.waiting_time_handle(CustomerClass::Low), eng.waiting_time_handle(CustomerClass::Two),
        eng.dsa_g1_handle(),                    eng.dsa_h1_handle(),
        eng.dsa_k_handle(),
    };
    for (const auto& h : handles) {
        CAPTURE(h.name());
        CHECK(h(h.identity_point()) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK_THROWS_AS(h(-1.0), DomainError);
    }
}

TEST_CASE("moment extraction diagnoses nonsense transforms") {
    EvalOptions opts;
    // an LST cannot increase away from the identity point; the extractor
    // reports the negative first moment instead of returning it
    const TransformHandle bogus(TransformHandle::Kind::Lst, "bogus",
                                [](double s) { return 1.0 + s; }, 0.0, 10.0, opts);
    CHECK_THROWS_AS(transform_moment(bogus, 1), NumericalError);
    const TransformHandle nan_h(TransformHandle::Kind::Lst, "nan",
                                [](double s) { return s == 0.0 ? 1.0 : std::nan(""); }, 0.0, 10.0,
                                opts);
    CHECK_THROWS_AS(transform_moment(nan_h, 1), NumericalError);
    CHECK_THROWS_AS(transform_moment(nan_h, 3), NumericalError);

    // exponential LST with mean m recovers m to high precision
    const double m = 2.31;
    const TransformHandle exp_h(TransformHandle::Kind::Lst, "exp",
                                [m](double s) { return 1.0 / (1.0 + m * s); }, 0.0, 1e9, opts);
    CHECK(transform_moment(exp_h, 1) == doctest::Approx(m).epsilon(1e-9));
    CHECK(transform_moment(exp_h, 2) == doctest::Approx(2.0 * m * m).epsilon(1e-7));
}

TEST_CASE("moment identities hold across random configs") {
    testing::ConfigGen gen(271);
    for (int i = 0; i < 6; ++i) {
        const auto cfg = gen.stable_config();
        const TransformEngine eng(cfg);
        const auto& m = eng.model();
        CHECK(transform_moment(eng.busy_period_handle(QueueId::Q2), 1) ==
              doctest::Approx(cfg.service_2.mean() / (1.0 - m.rho_2)).epsilon(1e-6));
        CHECK(transform_moment(eng.completion_time_handle(), 1) ==
              doctest::Approx(cfg.service_l.mean() / (1.0 - m.rho_h)).epsilon(1e-6));
        CHECK(transform_moment(eng.cycle_time_handle(QueueId::Q1), 1) ==
              doctest::Approx(m.sigma / (m.routing.pi1 * (1.0 - m.rho))).epsilon(1e-6));
    }
}

TEST_CASE("engine construction rejects unusable configurations") {
    auto cfg = reference_heavy_traffic_config(0.5);
    SUBCASE("unstable") {
        CHECK_THROWS_AS((TransformEngine(with_total_load(cfg, 1.05))), ValidationError);
    }
    SUBCASE("no queue-1 arrivals at all") {
        cfg.lambda_h = 0.0;
        cfg.lambda_l = 0.0;
        CHECK_THROWS_AS((TransformEngine(cfg)), ValidationError);
    }
}
