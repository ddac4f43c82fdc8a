#include "polling/study.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <memory>
#include <sstream>

#include "polling/errors.hpp"
#include "polling/rng.hpp"
#include "polling/simulator.hpp"

namespace polling {

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write output file: " + p.string());
    return out;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

constexpr std::array<CustomerClass, 3> kClasses = {CustomerClass::High, CustomerClass::Low,
                                                   CustomerClass::Two};

}  // namespace

std::vector<double> default_sweep(StudySpec::Kind kind) {
    if (kind == StudySpec::Kind::HeavyTraffic) return {0.5, 0.8, 0.9, 0.95, 0.99};
    return {1.0, 10.0, 50.0, 100.0, 500.0};
}

SystemConfig config_for_sweep_point(const StudySpec& spec, double value) {
    if (spec.kind == StudySpec::Kind::HeavyTraffic) {
        if (!(value > 0.0 && value < 1.0)) {
            throw ValidationError("heavy-traffic sweep values must satisfy 0 < rho < 1");
        }
        return with_total_load(spec.base, value);
    }
    if (!(value > 0.0)) throw ValidationError("switch-over sweep values must be > 0");
    SystemConfig cfg = spec.base;
    const double d = value * (1.0 - cfg.p1) * (1.0 - cfg.p2) / (2.0 - cfg.p1 - cfg.p2);
    cfg.s11 = cfg.s12 = cfg.s21 = cfg.s22 = ServiceDistribution::deterministic(d);
    return cfg;
}

namespace {

StudyPoint run_study_point(const StudySpec& spec, std::size_t index, double value) {
    const SystemConfig cfg = config_for_sweep_point(spec, value);
    const DerivedModel m = derive_model(cfg);
    SimOptions opt;
    opt.served_target = spec.served_target;
    opt.warmup_fraction = spec.warmup;
    opt.seed = splitmix64(spec.seed ^ splitmix64(index + 1));
    const SampleSet samples = run_simulation(cfg, opt);

    const bool heavy = spec.kind == StudySpec::Kind::HeavyTraffic;
    const double scale = heavy ? (1.0 - m.rho) : 1.0 / value;
    const LimitRegime regime = heavy ? LimitRegime::HeavyTraffic : LimitRegime::LargeSwitchover;
    const AsymptoticParams params = heavy_traffic_params(cfg);

    std::array<std::vector<double>, 3> scaled;
    std::vector<double> pooled;
    for (int c = 0; c < 3; ++c) {
        scaled[c].reserve(samples.waiting[c].size());
        for (double w : samples.waiting[c]) scaled[c].push_back(w * scale);
        pooled.insert(pooled.end(), scaled[c].begin(), scaled[c].end());
    }
    if (pooled.empty()) throw NumericalError("study produced no waiting-time samples");

    StudyPoint point;
    point.value = value;
    point.rho = m.rho;

    const EmpiricalCdf pooled_cdf(pooled);
    const double t_hi = pooled_cdf.quantile(0.995);
    std::array<std::unique_ptr<EmpiricalCdf>, 3> emp;
    for (int c = 0; c < 3; ++c) {
        point.samples[c] = scaled[c].size();
        if (!scaled[c].empty()) {
            point.ks[c] = ks_distance(scaled[c], [&](double t) {
                return limit_cdf(regime, kClasses[c], std::max(t, 0.0), params);
            });
            emp[c] = std::make_unique<EmpiricalCdf>(scaled[c]);
        } else {
            point.ks[c] = std::nan("");
        }
    }

    char name[64];
    std::snprintf(name, sizeof name, "cdf_%s_%g.csv", heavy ? "rho" : "r", value);
    point.cdf_path = spec.out_dir / name;
    auto out = open_out(point.cdf_path);
    const char* unit = heavy ? "t[(1-rho)*time]" : "t[time/r]";
    out << unit << ",empirical_H,limit_H,empirical_L,limit_L,empirical_2,limit_2\n";
    const int grid = 400;
    for (int g = 0; g < grid; ++g) {
        const double t = t_hi * static_cast<double>(g) / (grid - 1);
        out << num(t);
        for (int c = 0; c < 3; ++c) {
            out << ',' << (emp[c] ? num((*emp[c])(t)) : "");
            out << ',' << num(limit_cdf(regime, kClasses[c], t, params));
        }
        out << '\n';
    }
    return point;
}

}  // namespace

StudyResult study(const StudySpec& spec) {
    if (spec.sweep.empty()) throw ValidationError("study sweep must be nonempty");
    ensure_dir(spec.out_dir);

    StudyResult result;
    result.points.resize(spec.sweep.size());
    std::vector<std::future<StudyPoint>> futures;
    futures.reserve(spec.sweep.size());
    for (std::size_t i = 0; i < spec.sweep.size(); ++i) {
        futures.push_back(std::async(std::launch::async,
                                     [&spec, i] { return run_study_point(spec, i, spec.sweep[i]); }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) result.points[i] = futures[i].get();

    const bool heavy = spec.kind == StudySpec::Kind::HeavyTraffic;
    result.summary_path = spec.out_dir / "ks_summary.csv";
    auto out = open_out(result.summary_path);
    const bool trend = spec.sweep.size() > 1;
    out << (heavy ? "rho" : "r") << ",ks_H,ks_L,ks_2,n_H,n_L,n_2";
    if (trend) out << ",trend_H,trend_L,trend_2";
    out << '\n';
    for (std::size_t i = 0; i < result.points.size(); ++i) {
        const auto& p = result.points[i];
        out << num(p.value);
        for (int c = 0; c < 3; ++c) out << ',' << num(p.ks[c]);
        for (int c = 0; c < 3; ++c) out << ',' << p.samples[c];
        if (trend) {
            for (int c = 0; c < 3; ++c) {
                if (i == 0) out << ",-";
                else out << ',' << (p.ks[c] <= result.points[i - 1].ks[c] ? "yes" : "no");
            }
        }
        out << '\n';
    }
    return result;
}

// ---------------------------------------------------------------------------
// Single-scenario report
// ---------------------------------------------------------------------------

namespace {

struct ComparisonRow {
    std::string quantity;
    double analytic = 0.0;
    MeanCI simulated;
    bool has_ci = true;
    double simulated_value = 0.0;  // used when has_ci is false (time averages)
};

}  // namespace

ScenarioReport run_scenario(const SystemConfig& config, const std::filesystem::path& out_dir,
                            std::uint64_t seed, std::uint64_t served_target, double warmup,
                            const EvalOptions& options) {
    const ValidationReport report = validate(config);
    if (!report.ok()) throw ValidationError(report.to_string());
    ensure_dir(out_dir);

    const DerivedModel m = derive_model(config);
    ScenarioReport out;
    out.degenerate_sigma = !(m.sigma > 0.0);

    // Derived-model summary.
    out.derived_path = out_dir / "derived_model.txt";
    {
        auto f = open_out(out.derived_path);
        f << "# scenario: class split and switch-over allocation are inputs of this run\n";
        f << "lambda_H = " << num(config.lambda_h) << "\nlambda_L = " << num(config.lambda_l)
          << "\nlambda_2 = " << num(config.lambda_2) << "\n";
        f << "service_H = " << config.service_h.describe() << "\nservice_L = "
          << config.service_l.describe() << "\nservice_2 = " << config.service_2.describe() << "\n";
        f << "p1 = " << num(config.p1) << "\np2 = " << num(config.p2) << "\n";
        f << "pi_1 = " << num(m.routing.pi1) << "\npi_2 = " << num(m.routing.pi2) << "\n";
        f << "sigma = " << num(m.sigma) << "\nES_tot = " << num(m.es_tot) << "\n";
        f << "rho_H = " << num(m.rho_h) << "\nrho_L = " << num(m.rho_l) << "\nrho_1 = "
          << num(m.rho_1) << "\nrho_2 = " << num(m.rho_2) << "\nrho = " << num(m.rho) << "\n";
        f << "rho_L' = " << num(m.rho_lp) << "\nrho_H' = " << num(m.rho_hp) << "\n";
    }

    // Simulation.
    SimOptions sim_opt;
    sim_opt.served_target = served_target;
    sim_opt.warmup_fraction = warmup;
    sim_opt.seed = seed;
    const SampleSet samples = run_simulation(config, sim_opt);
    const SimulationSummary sim = summarize(samples);

    out.simulation_path = out_dir / "simulation.csv";
    {
        auto f = open_out(out.simulation_path);
        f << "quantity,unit,mean,ci_half_width,count\n";
        const char* names[3] = {"E_W_H", "E_W_L", "E_W_2"};
        for (int c = 0; c < 3; ++c) {
            f << names[c] << ",time," << num(sim.waiting[c].mean) << ','
              << (sim.waiting[c].available ? num(sim.waiting[c].half_width) : "")
              << ',' << sim.waiting[c].count << '\n';
        }
        f << "E_C_1,time," << num(sim.cycle_q1.mean) << ','
          << (sim.cycle_q1.available ? num(sim.cycle_q1.half_width) : "") << ','
          << sim.cycle_q1.count << '\n';
        f << "E_C_2,time," << num(sim.cycle_q2.mean) << ','
          << (sim.cycle_q2.available ? num(sim.cycle_q2.half_width) : "") << ','
          << sim.cycle_q2.count << '\n';
        const char* lname[3] = {"E_N_wait_H", "E_N_wait_L", "E_N_wait_2"};
        for (int c = 0; c < 3; ++c) {
            f << lname[c] << ",customers," << num(sim.time_avg_waiting[c]) << ",,\n";
        }
    }

    // Analytic means and the comparison table.
    std::vector<ComparisonRow> rows;
    out.analytic_path = out_dir / "analytic.csv";
    {
        auto f = open_out(out.analytic_path);
        f << "quantity,unit,value,note\n";
        if (out.degenerate_sigma) {
            f << "E_C_1,time,0,degenerate: sigma = 0 makes every cycle-time mean 0\n";
            f << "E_C_2,time,0,degenerate: sigma = 0 makes every cycle-time mean 0\n";
        } else {
            const TransformEngine engine(config, options);
            const double ec1 = engine.mean_cycle_time(QueueId::Q1);
            const double ec2 = engine.mean_cycle_time(QueueId::Q2);
            const double ei1 = engine.mean_intervisit_time(QueueId::Q1);
            const double ei2 = engine.mean_intervisit_time(QueueId::Q2);
            f << "E_C_1,time," << num(ec1) << ",\n";
            f << "E_C_2,time," << num(ec2) << ",\n";
            f << "E_I_1,time," << num(ei1) << ",\n";
            f << "E_I_2,time," << num(ei2) << ",\n";
            rows.push_back({"E_C_1", ec1, sim.cycle_q1, true, 0.0});
            rows.push_back({"E_C_2", ec2, sim.cycle_q2, true, 0.0});
            const char* wname[3] = {"E_W_H", "E_W_L", "E_W_2"};
            const char* lname[3] = {"E_N_wait_H", "E_N_wait_L", "E_N_wait_2"};
            for (int c = 0; c < 3; ++c) {
                const double w = engine.mean_waiting_time(kClasses[c]);
                f << wname[c] << ",time," << num(w) << ",\n";
                rows.push_back({wname[c], w, sim.waiting[c], true, 0.0});
                const double nq = engine.mean_number_waiting(kClasses[c]);
                f << lname[c] << ",customers," << num(nq) << ",\n";
                ComparisonRow row{lname[c], nq, MeanCI{}, false, sim.time_avg_waiting[c]};
                rows.push_back(row);
            }
        }
    }

    out.comparison_path = out_dir / "comparison.csv";
    bool covered = true;
    {
        auto f = open_out(out.comparison_path);
        f << "quantity,analytic,simulated,rel_error,ci_covers\n";
        for (const auto& row : rows) {
            const double simulated = row.has_ci ? row.simulated.mean : row.simulated_value;
            const double rel = row.analytic != 0.0
                                   ? std::abs(simulated - row.analytic) / std::abs(row.analytic)
                                   : std::abs(simulated - row.analytic);
            f << row.quantity << ',' << num(row.analytic) << ',' << num(simulated) << ','
              << num(rel) << ',';
            if (row.has_ci && row.simulated.available) {
                const bool c = row.simulated.covers(row.analytic);
                covered = covered && c;
                f << (c ? "yes" : "no");
            } else {
                f << '-';
            }
            f << '\n';
        }
    }
    out.all_means_covered = covered && !rows.empty();

    std::ostringstream text;
    text << "scenario report written to " << out_dir.string() << "\n";
    if (out.degenerate_sigma) {
        text << "note: sigma = 0; analytic cycle/waiting means are degenerate\n";
    } else {
        text << "analytic means inside simulation CIs: " << (out.all_means_covered ? "yes" : "no")
             << "\n";
    }
    out.summary_text = text.str();
    return out;
}

// ---------------------------------------------------------------------------
// Double-limit consistency (analytic)
// ---------------------------------------------------------------------------

DoubleLimitResult double_limit_consistency(const SystemConfig& base,
                                           const std::filesystem::path& out_dir,
                                           std::vector<double> r_values) {
    ensure_dir(out_dir);
    const AsymptoticParams params = heavy_traffic_params(base);
    const double t_hi = 1.25 * std::max({params.u_h1, params.u_l1, params.u_21});
    const int grid = 400;

    DoubleLimitResult result;
    result.r_values = r_values;
    for (double r : r_values) {
        std::array<double, 3> sup{};
        char name[64];
        std::snprintf(name, sizeof name, "double_limit_r_%g.csv", r);
        auto out = open_out(out_dir / name);
        out << "t[(1-rho)*time/r],rescaled_H,uniform_H,rescaled_L,uniform_L,rescaled_2,uniform_2\n";
        for (int g = 0; g <= grid; ++g) {
            const double t = t_hi * static_cast<double>(g) / grid;
            out << num(t);
            for (int c = 0; c < 3; ++c) {
                const double a = rescaled_heavy_traffic_cdf(kClasses[c], t, r, params);
                const double b = limit_cdf(LimitRegime::DoubleLimit, kClasses[c], t, params);
                sup[c] = std::max(sup[c], std::abs(a - b));
                out << ',' << num(a) << ',' << num(b);
            }
            out << '\n';
        }
        result.sup_diff.push_back(sup);
    }

    result.summary_path = out_dir / "double_limit_summary.csv";
    auto out = open_out(result.summary_path);
    out << "r,supdiff_H,supdiff_L,supdiff_2\n";
    for (std::size_t i = 0; i < r_values.size(); ++i) {
        out << num(r_values[i]);
        for (int c = 0; c < 3; ++c) out << ',' << num(result.sup_diff[i][c]);
        out << '\n';
    }
    return result;
}

// ---------------------------------------------------------------------------
// Reference scenarios
// ---------------------------------------------------------------------------

SystemConfig reference_heavy_traffic_config(double rho) {
    const double mean_service = 0.85;
    const double lambda = rho / (3.0 * mean_service);
    const auto service = ServiceDistribution::exponential(1.0 / mean_service);
    const auto sw = ServiceDistribution::exponential(1.0 / 2.4);
    return SystemConfig{lambda, lambda, lambda, service, service, service, 0.4, 0.3, sw, sw, sw, sw};
}

SystemConfig reference_large_switchover_config(double r) {
    const double mean_service = 0.85;
    const double lambda = 0.8 / (3.0 * mean_service);
    const auto service = ServiceDistribution::exponential(1.0 / mean_service);
    const double d = r * (1.0 - 0.4) * (1.0 - 0.3) / (2.0 - 0.4 - 0.3);
    const auto sw = ServiceDistribution::deterministic(d);
    return SystemConfig{lambda, lambda, lambda, service, service, service, 0.4, 0.3, sw, sw, sw, sw};
}

}  // namespace polling
