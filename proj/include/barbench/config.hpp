#pragma once

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "barbench/bar.hpp"
#include "barbench/heavy_traffic.hpp"
#include "barbench/simulation.hpp"
#include "barbench/srbm.hpp"

namespace barbench {

using nlohmann::json;

inline DistributionSpec parse_distribution(const json& spec) {
    if (!spec.is_object() || !spec.contains("family"))
        throw ConfigError("distribution needs a \"family\" field");
    const std::string family = spec.at("family").get<std::string>();
    auto num = [&](const char* key) -> double {
        if (!spec.contains(key))
            throw ConfigError("distribution \"" + family + "\" needs field \"" + key + "\"");
        return spec.at(key).get<double>();
    };
    if (family == "exponential") {
        const double rate = spec.contains("rate") ? num("rate") : 1.0 / num("mean");
        return DistributionSpec::exponential(rate);
    }
    if (family == "deterministic") {
        const double v = spec.contains("value") ? num("value") : num("mean");
        return DistributionSpec::deterministic(v);
    }
    if (family == "erlang") {
        const int k = spec.contains("shape") ? spec.at("shape").get<int>() : 2;
        const double rate = spec.contains("rate") ? num("rate") : k / num("mean");
        return DistributionSpec::erlang(k, rate);
    }
    if (family == "hyperexp2") {
        if (spec.contains("scv")) return DistributionSpec::hyperexp2_fit(num("mean"), num("scv"));
        return DistributionSpec::hyperexp2(num("p"), num("rate1"), num("rate2"));
    }
    if (family == "uniform") return DistributionSpec::uniform(num("lo"), num("hi"));
    throw ConfigError("unknown distribution family \"" + family + "\"");
}

inline json distribution_to_json(const DistributionSpec& d) {
    json out;
    out["family"] = family_name(d.family());
    switch (d.family()) {
        case DistFamily::exponential: out["rate"] = d.rate1(); break;
        case DistFamily::deterministic: out["value"] = d.value(); break;
        case DistFamily::erlang:
            out["shape"] = d.shape();
            out["rate"] = d.rate1();
            break;
        case DistFamily::hyperexp2:
            out["p"] = d.p();
            out["rate1"] = d.rate1();
            out["rate2"] = d.rate2();
            break;
        case DistFamily::uniform:
            out["lo"] = d.lo();
            out["hi"] = d.hi();
            break;
    }
    return out;
}

struct ExperimentConfig {
    NetworkSpec network;
    std::optional<Vec> b;  // presence makes this a heavy-traffic sequence
    RateRule rate_rule = RateRule::inv_sqrt_n;
    SimOptions sim;
    ThetaGridSpec grid;
    std::vector<int> n_list;
    SrbmOptions srbm;
    std::string out_dir = "out";

    HeavyTrafficSequence sequence() const {
        if (!b) throw ConfigError("this command needs a \"sequence\" section (b vector)");
        return {network, *b, rate_rule};
    }
};

inline ExperimentConfig parse_config_impl(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config root must be a JSON object");
    ExperimentConfig cfg;

    if (!doc.contains("network")) throw ConfigError("config needs a \"network\" section");
    const json& net = doc.at("network");
    const std::size_t d = net.at("stations").get<std::size_t>();
    cfg.network.station_count = d;
    cfg.network.arrival.assign(d, std::nullopt);
    if (!net.contains("arrivals") || !net.at("arrivals").is_object())
        throw ConfigError("network needs an \"arrivals\" object keyed by station number");
    for (const auto& [key, value] : net.at("arrivals").items()) {
        const std::size_t station = std::stoul(key);
        if (station < 1 || station > d) throw ConfigError("arrival station out of range: " + key);
        cfg.network.arrival[station - 1] = parse_distribution(value);
    }
    if (!net.contains("services") || net.at("services").size() != d)
        throw ConfigError("network needs \"services\" with one entry per station");
    for (const auto& s : net.at("services")) cfg.network.service.push_back(parse_distribution(s));
    const json& routing = net.at("routing");
    if (routing.size() != d) throw ConfigError("routing must be a d x d array of arrays");
    cfg.network.routing = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        if (routing[i].size() != d) throw ConfigError("routing must be a d x d array of arrays");
        for (std::size_t j = 0; j < d; ++j) cfg.network.routing(i, j) = routing[i][j].get<double>();
    }

    if (doc.contains("sequence")) {
        const json& seq = doc.at("sequence");
        Vec b;
        for (const auto& v : seq.at("b")) b.push_back(v.get<double>());
        if (b.size() != d) throw ConfigError("sequence.b must have one entry per station");
        cfg.b = b;
        if (seq.contains("r_rule")) {
            const std::string rule = seq.at("r_rule").get<std::string>();
            if (rule == "inv_sqrt_n")
                cfg.rate_rule = RateRule::inv_sqrt_n;
            else if (rule == "inv_n")
                cfg.rate_rule = RateRule::inv_n;
            else
                throw ConfigError("r_rule must be \"inv_sqrt_n\" or \"inv_n\"");
        }
    }

    if (doc.contains("sim")) {
        const json& sim = doc.at("sim");
        cfg.sim.horizon = sim.at("horizon").get<double>();
        if (sim.contains("warmup")) cfg.sim.warmup = sim.at("warmup").get<double>();
        if (sim.contains("seed")) cfg.sim.seed = sim.at("seed").get<std::uint64_t>();
        if (sim.contains("batches")) cfg.sim.batches = sim.at("batches").get<int>();
    }

    if (doc.contains("grid")) {
        const json& grid = doc.at("grid");
        if (grid.contains("M")) cfg.grid.M = grid.at("M").get<double>();
        if (grid.contains("axis")) cfg.grid.axis = grid.at("axis").get<int>();
        if (grid.contains("diagonal")) cfg.grid.diagonal = grid.at("diagonal").get<int>();
        if (grid.contains("random")) cfg.grid.random = grid.at("random").get<int>();
        if (grid.contains("seed")) cfg.grid.seed = grid.at("seed").get<std::uint64_t>();
    }

    if (doc.contains("n_list"))
        for (const auto& v : doc.at("n_list")) cfg.n_list.push_back(v.get<int>());

    if (doc.contains("srbm")) {
        const json& srbm = doc.at("srbm");
        if (srbm.contains("step")) cfg.srbm.step = srbm.at("step").get<double>();
        if (srbm.contains("horizon")) cfg.srbm.horizon = srbm.at("horizon").get<double>();
        if (srbm.contains("burn_in")) cfg.srbm.burn_in = srbm.at("burn_in").get<double>();
        if (srbm.contains("seed")) cfg.srbm.seed = srbm.at("seed").get<std::uint64_t>();
        if (srbm.contains("batches")) cfg.srbm.batches = srbm.at("batches").get<int>();
        if (srbm.contains("hist_bin")) cfg.srbm.hist_bin = srbm.at("hist_bin").get<double>();
    }

    if (doc.contains("out")) cfg.out_dir = doc.at("out").get<std::string>();
    return cfg;
}

inline ExperimentConfig parse_config(const json& doc) {
    try {
        return parse_config_impl(doc);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

// All defaults made explicit, so a run is reproducible from this file alone.
inline json resolved_config(const ExperimentConfig& cfg) {
    json doc;
    json net;
    net["stations"] = cfg.network.station_count;
    json arrivals = json::object();
    for (std::size_t i = 0; i < cfg.network.station_count; ++i)
        if (cfg.network.is_external(i))
            arrivals[std::to_string(i + 1)] = distribution_to_json(*cfg.network.arrival[i]);
    net["arrivals"] = arrivals;
    json services = json::array();
    for (const auto& s : cfg.network.service) services.push_back(distribution_to_json(s));
    net["services"] = services;
    json routing = json::array();
    for (std::size_t i = 0; i < cfg.network.station_count; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < cfg.network.station_count; ++j)
            row.push_back(cfg.network.routing(i, j));
        routing.push_back(row);
    }
    net["routing"] = routing;
    doc["network"] = net;

    if (cfg.b) {
        json seq;
        seq["b"] = *cfg.b;
        seq["r_rule"] = rate_rule_name(cfg.rate_rule);
        doc["sequence"] = seq;
    }
    doc["sim"] = {{"horizon", cfg.sim.horizon},
                  {"warmup", cfg.sim.resolved_warmup()},
                  {"seed", cfg.sim.seed},
                  {"batches", cfg.sim.batches}};
    doc["grid"] = {{"M", cfg.grid.M},
                   {"axis", cfg.grid.axis},
                   {"diagonal", cfg.grid.diagonal},
                   {"random", cfg.grid.random},
                   {"seed", cfg.grid.seed}};
    doc["n_list"] = cfg.n_list;
    doc["srbm"] = {{"step", cfg.srbm.step},
                   {"horizon", cfg.srbm.horizon},
                   {"burn_in", cfg.srbm.resolved_burn_in()},
                   {"seed", cfg.srbm.seed},
                   {"batches", cfg.srbm.batches},
                   {"hist_bin", cfg.srbm.hist_bin}};
    // the output directory is deliberately left out: it does not define the
    // experiment, and reruns into different directories must stay identical
    return doc;
}

inline std::string config_hash(const json& resolved) {
    const std::string dump = resolved.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace barbench
