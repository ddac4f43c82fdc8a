#include "polling/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "polling/errors.hpp"

namespace polling {

using nlohmann::json;

std::string ValidationReport::to_string() const {
    if (ok()) return "configuration valid\n";
    std::ostringstream out;
    for (const auto& v : violations) out << "violation: " << v << "\n";
    return out.str();
}

ValidationReport validate(const SystemConfig& c) {
    ValidationReport report;
    auto require = [&](bool cond, const std::string& msg) {
        if (!cond) report.violations.push_back(msg);
    };
    require(c.lambda_h > 0.0, "arrival rate lambda_H must be > 0");
    require(c.lambda_l > 0.0, "arrival rate lambda_L must be > 0");
    require(c.lambda_2 > 0.0, "arrival rate lambda_2 must be > 0");
    require(c.p1 >= 0.0 && c.p1 < 1.0, "repeat probability p1 must be in [0, 1)");
    require(c.p2 >= 0.0 && c.p2 < 1.0, "repeat probability p2 must be in [0, 1)");
    for (const auto* d : {&c.service_h, &c.service_l, &c.service_2}) {
        require(d->mean() > 0.0, "service time mean must be > 0");
    }
    for (const auto* d : {&c.s11, &c.s12, &c.s21, &c.s22}) {
        require(d->mean() >= 0.0, "switch-over time mean must be >= 0");
    }
    if (c.total_load() >= 1.0) {
        report.violations.push_back("stability requires total load < 1");
    }
    return report;
}

SystemConfig with_total_load(const SystemConfig& config, double rho) {
    if (!(rho > 0.0)) throw ValidationError("target load must be > 0");
    const double current = config.total_load();
    if (!(current > 0.0)) throw ValidationError("cannot rescale a zero-load configuration");
    const double factor = rho / current;
    SystemConfig scaled = config;
    scaled.lambda_h *= factor;
    scaled.lambda_l *= factor;
    scaled.lambda_2 *= factor;
    return scaled;
}

namespace {

json dist_to_json(const ServiceDistribution& d) {
    switch (d.kind()) {
        case ServiceDistribution::Kind::Exponential:
            return {{"kind", "exponential"}, {"rate", d.rate()}};
        case ServiceDistribution::Kind::Deterministic:
            return {{"kind", "deterministic"}, {"value", d.value()}};
        case ServiceDistribution::Kind::Erlang:
            return {{"kind", "erlang"}, {"shape", d.shape()}, {"rate", d.rate()}};
    }
    throw ValidationError("unknown distribution kind");
}

ServiceDistribution dist_from_json(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("kind")) {
        throw ValidationError("distribution at " + where + " must be an object with a \"kind\"");
    }
    const std::string kind = j.at("kind").get<std::string>();
    try {
        if (kind == "exponential") return ServiceDistribution::exponential(j.at("rate").get<double>());
        if (kind == "deterministic") return ServiceDistribution::deterministic(j.at("value").get<double>());
        if (kind == "erlang") {
            return ServiceDistribution::erlang(j.at("shape").get<int>(), j.at("rate").get<double>());
        }
    } catch (const json::exception& e) {
        throw ValidationError("distribution at " + where + ": " + e.what());
    }
    throw ValidationError("distribution at " + where + ": unknown kind \"" + kind +
                          "\" (expected exponential|deterministic|erlang)");
}

}  // namespace

SystemConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    try {
        const auto& lambda = j.at("lambda");
        const auto& service = j.at("service");
        const auto& routing = j.at("routing");
        const auto& sw = j.at("switchover");
        return SystemConfig{
            lambda.at("H").get<double>(),
            lambda.at("L").get<double>(),
            lambda.at("2").get<double>(),
            dist_from_json(service.at("H"), "service.H"),
            dist_from_json(service.at("L"), "service.L"),
            dist_from_json(service.at("2"), "service.2"),
            routing.at("p1").get<double>(),
            routing.at("p2").get<double>(),
            dist_from_json(sw.at("s11"), "switchover.s11"),
            dist_from_json(sw.at("s12"), "switchover.s12"),
            dist_from_json(sw.at("s21"), "switchover.s21"),
            dist_from_json(sw.at("s22"), "switchover.s22"),
        };
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is missing required keys: ") + e.what());
    }
}

std::string config_to_json(const SystemConfig& c) {
    json j = {
        {"lambda", {{"H", c.lambda_h}, {"L", c.lambda_l}, {"2", c.lambda_2}}},
        {"service",
         {{"H", dist_to_json(c.service_h)},
          {"L", dist_to_json(c.service_l)},
          {"2", dist_to_json(c.service_2)}}},
        {"routing", {{"p1", c.p1}, {"p2", c.p2}}},
        {"switchover",
         {{"s11", dist_to_json(c.s11)},
          {"s12", dist_to_json(c.s12)},
          {"s21", dist_to_json(c.s21)},
          {"s22", dist_to_json(c.s22)}}},
    };
    return j.dump(2) + "\n";
}

SystemConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json(buf.str());
}

void save_config(const SystemConfig& config, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config file: " + path.string());
    out << config_to_json(config);
}

}  // namespace polling
