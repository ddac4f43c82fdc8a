// Command-line front end for the two-queue priority polling toolkit:
//   validate  -- check a scenario file and report every violated invariant
//   analyze   -- derived model + analytic means for a scenario
//   simulate  -- one event-driven replication, samples and summary to CSV
//   study     -- heavy-traffic / large-switch-over sweep with CDF datasets
//
// Exit codes: 0 success, 1 validation failure, 2 numerical failure, 3 I/O failure.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "polling/config.hpp"
#include "polling/errors.hpp"
#include "polling/simulator.hpp"
#include "polling/stats.hpp"
#include "polling/study.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kNumericalFailure = 2;
constexpr int kIoFailure = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
    std::uint64_t customers = 2000;
    double warmup = 0.1;
};

int run_validate(const CommonArgs& args) {
    const polling::SystemConfig config = polling::load_config(args.config_path);
    const polling::ValidationReport report = polling::validate(config);
    std::cout << report.to_string();
    return report.ok() ? kOk : kValidationFailure;
}

int run_analyze(const CommonArgs& args, int max_depth) {
    const polling::SystemConfig config = polling::load_config(args.config_path);
    polling::EvalOptions options;
    if (max_depth > 0) options.max_depth = max_depth;
    const polling::ScenarioReport report =
        polling::run_scenario(config, args.out_dir, args.seed, args.customers, args.warmup, options);
    std::cout << report.summary_text;
    return kOk;
}

int run_simulate(const CommonArgs& args, const std::string& event_log_path) {
    const polling::SystemConfig config = polling::load_config(args.config_path);
    const polling::ValidationReport report = polling::validate(config);
    if (!report.ok()) {
        std::cerr << report.to_string();
        return kValidationFailure;
    }
    std::filesystem::create_directories(args.out_dir);

    polling::SimOptions options;
    options.served_target = args.customers;
    options.warmup_fraction = args.warmup;
    options.seed = args.seed;
    std::ofstream event_log;
    if (!event_log_path.empty()) {
        event_log.open(event_log_path);
        if (!event_log) throw polling::IoError("cannot write event log: " + event_log_path);
        options.event_log = &event_log;
    }
    const polling::SampleSet samples = polling::run_simulation(config, options);

    const auto sample_path = std::filesystem::path(args.out_dir) / "waiting_samples.csv";
    std::ofstream out(sample_path);
    if (!out) throw polling::IoError("cannot write " + sample_path.string());
    polling::export_waiting_csv(samples, out);

    const polling::SimulationSummary summary = polling::summarize(samples);
    const auto summary_path = std::filesystem::path(args.out_dir) / "summary.txt";
    std::ofstream sum(summary_path);
    if (!sum) throw polling::IoError("cannot write " + summary_path.string());
    const char* names[3] = {"H", "L", "2"};
    sum << "served " << samples.served << ", warmup discarded " << samples.warmup_discarded
        << ", seed " << samples.seed << "\n";
    for (int c = 0; c < 3; ++c) {
        sum << "E_W_" << names[c] << " [time] = " << summary.waiting[c].mean;
        if (summary.waiting[c].available) sum << " +- " << summary.waiting[c].half_width;
        sum << " (n=" << summary.waiting[c].count << ")\n";
    }
    sum << "E_C_1 [time] = " << summary.cycle_q1.mean << " (n=" << summary.cycle_q1.count << ")\n";
    sum << "E_C_2 [time] = " << summary.cycle_q2.mean << " (n=" << summary.cycle_q2.count << ")\n";
    for (int c = 0; c < 3; ++c) {
        sum << "E_N_wait_" << names[c] << " [customers] = " << summary.time_avg_waiting[c] << "\n";
    }
    std::cout << "simulation written to " << args.out_dir << "\n";
    return kOk;
}

int run_study(const CommonArgs& args, const std::string& kind, std::vector<double> sweep) {
    const polling::SystemConfig config = polling::load_config(args.config_path);

    if (kind == "double-limit") {
        // Experimental: the double limit is validated analytically (rescaled
        // heavy-traffic law vs its uniform limit); simulating it converges
        // far too slowly to be meaningful.
        polling::double_limit_consistency(config, args.out_dir);
        std::cout << "double-limit consistency data written to " << args.out_dir << "\n";
        return kOk;
    }

    polling::StudySpec spec;
    spec.kind = kind == "heavy-traffic" ? polling::StudySpec::Kind::HeavyTraffic
                                        : polling::StudySpec::Kind::LargeSwitchover;
    spec.base = config;
    spec.sweep = sweep.empty() ? polling::default_sweep(spec.kind) : std::move(sweep);
    spec.served_target = args.customers;
    spec.warmup = args.warmup;
    spec.seed = args.seed;
    spec.out_dir = args.out_dir;

    const polling::StudyResult result = polling::study(spec);
    std::cout << "study datasets written to " << args.out_dir << "\n";
    for (const auto& p : result.points) {
        std::cout << "  value " << p.value << ": KS(H)=" << p.ks[0] << " KS(L)=" << p.ks[1]
                  << " KS(2)=" << p.ks[2] << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"two-queue Markovian priority polling: analytic transforms, limit laws, simulation"};
    app.require_subcommand(1);

    CommonArgs args;
    int max_depth = 0;
    std::string event_log_path;
    std::string study_kind;
    std::vector<double> sweep;

    auto* validate_cmd = app.add_subcommand("validate", "validate a scenario file");
    validate_cmd->add_option("--config", args.config_path, "scenario JSON file")->required();

    auto* analyze_cmd = app.add_subcommand("analyze", "derived model, analytic means, comparison report");
    analyze_cmd->add_option("--config", args.config_path, "scenario JSON file")->required();
    analyze_cmd->add_option("--out", args.out_dir, "output directory")->required();
    analyze_cmd->add_option("--seed", args.seed, "simulation seed");
    analyze_cmd->add_option("--customers", args.customers, "served-customer target");
    analyze_cmd->add_option("--warmup", args.warmup, "warm-up fraction in [0, 0.9]");
    analyze_cmd->add_option("--max-depth", max_depth, "cap on infinite-product depth");

    auto* simulate_cmd = app.add_subcommand("simulate", "run one simulation replication");
    simulate_cmd->add_option("--config", args.config_path, "scenario JSON file")->required();
    simulate_cmd->add_option("--out", args.out_dir, "output directory")->required();
    simulate_cmd->add_option("--seed", args.seed, "root RNG seed");
    simulate_cmd->add_option("--customers", args.customers, "served-customer target");
    simulate_cmd->add_option("--warmup", args.warmup, "warm-up fraction in [0, 0.9]");
    simulate_cmd->add_option("--event-log", event_log_path, "line-delimited event trace file");

    auto* study_cmd = app.add_subcommand("study", "sweep study with scaled-delay CDF datasets");
    study_cmd->add_option("--kind", study_kind, "heavy-traffic | large-switchover | double-limit")
        ->required()
        ->check(CLI::IsMember({"heavy-traffic", "large-switchover", "double-limit"}));
    study_cmd->add_option("--config", args.config_path, "base scenario JSON file")->required();
    study_cmd->add_option("--out", args.out_dir, "output directory")->required();
    study_cmd->add_option("--seed", args.seed, "root RNG seed");
    study_cmd->add_option("--customers", args.customers, "served-customer target per sweep point");
    study_cmd->add_option("--warmup", args.warmup, "warm-up fraction in [0, 0.9]");
    study_cmd->add_option("--sweep", sweep, "sweep values (default: the study's standard grid)");

    try {
        app.parse(argc, argv);
        if (validate_cmd->parsed()) return run_validate(args);
        if (analyze_cmd->parsed()) return run_analyze(args, max_depth);
        if (simulate_cmd->parsed()) return run_simulate(args, event_log_path);
        if (study_cmd->parsed()) return run_study(args, study_kind, std::move(sweep));
        return kOk;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kValidationFailure;
    } catch (const polling::ValidationError& e) {
        std::cerr << "validation failure: " << e.what() << "\n";
        return kValidationFailure;
    } catch (const polling::IoError& e) {
        std::cerr << "I/O failure: " << e.what() << "\n";
        return kIoFailure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O failure: " << e.what() << "\n";
        return kIoFailure;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    }
}
