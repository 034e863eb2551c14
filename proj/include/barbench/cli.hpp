#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "barbench/bar.hpp"
#include "barbench/config.hpp"
#include "barbench/csv.hpp"

namespace barbench::cli {

namespace fs = std::filesystem;

struct CommonArgs {
    std::string config_path;
    std::string out_override;
    std::uint64_t seed_override = 0;
    bool has_seed = false;
};

struct RunContext {
    ExperimentConfig cfg;
    fs::path out_dir;
    std::string provenance;  // "config=<hash> seed=<seed>"
};

inline RunContext make_context(const CommonArgs& args) {
    RunContext ctx;
    ctx.cfg = load_config(args.config_path);
    if (args.has_seed) {
        ctx.cfg.sim.seed = args.seed_override;
        ctx.cfg.srbm.seed = args.seed_override;
    }
    if (!args.out_override.empty()) ctx.cfg.out_dir = args.out_override;
    ctx.out_dir = ctx.cfg.out_dir;

    const json resolved = resolved_config(ctx.cfg);
    char buf[96];
    std::snprintf(buf, sizeof buf, "config=%s seed=%llu", config_hash(resolved).c_str(),
                  static_cast<unsigned long long>(ctx.cfg.sim.seed));
    ctx.provenance = buf;

    fs::create_directories(ctx.out_dir);
    std::ofstream rc(ctx.out_dir / "resolved_config.json", std::ios::binary);
    rc << resolved.dump(2) << "\n";
    return ctx;
}

inline std::vector<std::string> theta_columns(std::size_t d) {
    std::vector<std::string> cols;
    for (std::size_t k = 0; k < d; ++k) cols.push_back("theta_" + std::to_string(k + 1));
    return cols;
}

inline std::vector<std::string> theta_cells(const Vec& theta) {
    std::vector<std::string> cells;
    for (double t : theta) cells.push_back(format_number(t));
    return cells;
}

inline int cmd_validate(const CommonArgs& args, bool assert_pass) {
    const RunContext ctx = make_context(args);
    const ValidationReport report = validate_network(ctx.cfg.network);
    for (const auto& check : report.checks)
        std::printf("[%s] %s%s%s\n", check.passed ? "ok" : "FAIL", check.name.c_str(),
                    check.detail.empty() ? "" : ": ", check.detail.c_str());

    if (report.all_passed()) {
        const Vec lambda_a =
            solve_traffic_equation(ctx.cfg.network.external_rates(), ctx.cfg.network.routing);
        const Vec rho = utilizations(ctx.cfg.network);
        for (std::size_t j = 0; j < lambda_a.size(); ++j)
            std::printf("station %zu: lambda_a=%s rho=%s\n", j + 1,
                        format_number(lambda_a[j]).c_str(), format_number(rho[j]).c_str());
        const ReflectionResult refl = reflection_and_mmatrix(ctx.cfg.network.routing);
        std::printf("[%s] reflection matrix is an M-matrix (min inverse entry %s)\n",
                    refl.is_m_matrix ? "ok" : "FAIL", format_number(refl.min_inverse_entry).c_str());
        std::size_t cert_fail = 0;
        for (const auto& cert : refl.submatrices)
            if (!cert.inverse_nonnegative) ++cert_fail;
        std::printf("[%s] %zu principal submatrix certificates\n", cert_fail == 0 ? "ok" : "FAIL",
                    refl.submatrices.size());
        if (ctx.cfg.b) {
            try {
                const SrbmParams p = srbm_params(ctx.cfg.sequence());
                std::printf("[ok] SRBM data: Sigma positive definite, mu = -Rb\n");
                for (std::size_t i = 0; i < p.dimension(); ++i) {
                    std::printf("  mu_%zu=%s Sigma_%zu*=(", i + 1, format_number(p.mu[i]).c_str(),
                                i + 1);
                    for (std::size_t j = 0; j < p.dimension(); ++j)
                        std::printf("%s%s", j ? "," : "", format_number(p.Sigma(i, j)).c_str());
                    std::printf(")\n");
                }
            } catch (const NumericError& e) {
                std::printf("[FAIL] SRBM data: %s\n", e.what());
                if (assert_pass) return 4;
            }
        }
    }
    if (assert_pass && !report.all_passed()) return 4;
    return 0;
}

inline int cmd_simulate(const CommonArgs& args, int n, bool dump_samples) {
    const RunContext ctx = make_context(args);
    NetworkSpec net = ctx.cfg.network;
    double r_n = 0.0;
    if (n > 0) {
        const NthNetwork nth = nth_network(ctx.cfg.sequence(), n);
        net = nth.network;
        r_n = nth.r_n;
    }
    const SimulationResult sim = simulate(net, ctx.cfg.sim);
    if (sim.estimate.stability_warning)
        std::fprintf(stderr, "warning: some station has rho >= 1; stationarity is doubtful\n");

    const FlowReport flow = flow_checks(sim.estimate, sim.counters, net);
    {
        CsvWriter csv(ctx.out_dir / "flow_checks.csv", ctx.provenance,
                      {"check", "station", "estimate", "se", "target", "z"});
        for (const auto& row : flow.rows)
            csv.row(row.name, row.station + 1, row.estimate, row.se, row.target, row.z);
    }
    {
        CsvWriter csv(ctx.out_dir / "summary.csv", ctx.provenance,
                      {"station", "rho", "mean_queue", "idle_fraction", "replay_residual"});
        for (std::size_t j = 0; j < net.station_count; ++j) {
            const IntHistogram h = sim.estimate.marginal(j);
            double mean = 0.0;
            for (std::size_t k = 0; k < h.weight.size(); ++k) mean += k * h.weight[k];
            mean /= h.total;
            csv.row(j + 1, sim.estimate.rho[j], mean, sim.estimate.time_fraction_zero(j),
                    flow.replay_residual[j]);
        }
    }
    {
        CsvWriter csv(ctx.out_dir / "counters.csv", ctx.provenance,
                      {"station", "arrivals", "departures", "busy_time", "idle_time"});
        for (std::size_t j = 0; j < net.station_count; ++j)
            csv.row(j + 1, sim.counters.arrivals[j], sim.counters.departures[j],
                    sim.counters.busy_time[j], sim.counters.idle_time[j]);
    }
    if (dump_samples) {
        std::vector<std::string> cols = {"clock", "dwell"};
        for (std::size_t k = 0; k < net.station_count; ++k)
            cols.push_back("l_" + std::to_string(k + 1));
        for (std::size_t k = 0; k < net.station_count; ++k)
            cols.push_back("u_" + std::to_string(k + 1));
        for (std::size_t k = 0; k < net.station_count; ++k)
            cols.push_back("v_" + std::to_string(k + 1));
        CsvWriter csv(ctx.out_dir / "samples.csv", ctx.provenance, cols);
        double clock = sim.estimate.warmup;
        for (std::size_t m = 0; m < sim.estimate.size(); ++m) {
            const auto row = sim.estimate.row(m);
            std::vector<std::string> cells = {format_number(clock), format_number(row.weight)};
            for (std::size_t k = 0; k < net.station_count; ++k)
                cells.push_back(std::to_string(row.queue[k]));
            for (std::size_t k = 0; k < net.station_count; ++k)
                cells.push_back(format_number(row.u[k]));
            for (std::size_t k = 0; k < net.station_count; ++k)
                cells.push_back(format_number(row.v[k]));
            csv.raw_row(cells);
            clock += row.weight;
        }
    }
    const std::string r_note = r_n > 0.0 ? " (r_n=" + format_number(r_n) + ")" : "";
    std::printf("simulated %s time units, %zu intervals, max flow-check z = %s%s\n",
                format_number(ctx.cfg.sim.horizon).c_str(), sim.estimate.size(),
                format_number(flow.max_z()).c_str(), r_note.c_str());
    return 0;
}

inline int cmd_exponents(const CommonArgs& args) {
    const RunContext ctx = make_context(args);
    const HeavyTrafficSequence seq = ctx.cfg.sequence();
    if (ctx.cfg.n_list.empty()) throw ConfigError("exponents needs a nonempty n_list");
    const std::size_t d = seq.base.station_count;
    const std::vector<Vec> grid = make_theta_grid(d, ctx.cfg.grid);

    std::vector<std::string> cols = {"n", "r_n"};
    for (const auto& c : theta_columns(d)) cols.push_back(c);
    cols.insert(cols.end(), {"kind", "station", "exact", "quadratic", "normalized_error"});
    CsvWriter csv(ctx.out_dir / "exponents.csv", ctx.provenance, cols);

    for (int n : ctx.cfg.n_list) {
        const NthNetwork nth = nth_network(seq, n);
        const double r = nth.r_n;
        const double c = 1.0 / r;
        for (const Vec& theta : grid) {
            Vec scaled(d);
            double norm = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                scaled[k] = r * theta[k];
                norm = std::max(norm, std::abs(theta[k]));
            }
            for (std::size_t i = 0; i < d; ++i) {
                std::vector<std::string> base = {format_number(n), format_number(r)};
                for (const auto& cell : theta_cells(theta)) base.push_back(cell);
                if (nth.network.is_external(i) && theta[i] != 0.0) {
                    const double exact = solve_eta(*nth.network.arrival[i], scaled[i], r).value;
                    const double quad =
                        quad_eta_value(truncated_moments(*nth.network.arrival[i], c), scaled[i]);
                    auto cells = base;
                    cells.insert(cells.end(),
                                 {"eta", std::to_string(i + 1), format_number(exact),
                                  format_number(quad),
                                  format_number(std::abs(exact - quad) / (r * r * theta[i] * theta[i]))});
                    csv.raw_row(cells);
                }
                const double exact =
                    solve_zeta(nth.network.service[i], nth.network.routing, i, scaled, r).value;
                const double quad = quad_zeta_value(truncated_moments(nth.network.service[i], c),
                                                    nth.network.routing, i, scaled);
                auto cells = base;
                cells.insert(cells.end(),
                             {"zeta", std::to_string(i + 1), format_number(exact),
                              format_number(quad),
                              format_number(std::abs(exact - quad) / (r * r * norm * norm))});
                csv.raw_row(cells);
            }
        }
        const ExpansionError err = expansion_error(seq, n, grid);
        std::printf("n=%d r_n=%s sup_eta_error=%s sup_zeta_error=%s\n", n,
                    format_number(r).c_str(), format_number(err.sup_eta).c_str(),
                    format_number(err.sup_zeta).c_str());
    }
    return 0;
}

inline int cmd_bar_check(const CommonArgs& args, int n_arg, bool assert_pass) {
    const RunContext ctx = make_context(args);
    const HeavyTrafficSequence seq = ctx.cfg.sequence();
    const int n = n_arg > 0 ? n_arg : (ctx.cfg.n_list.empty() ? 16 : ctx.cfg.n_list.front());
    const NthNetwork nth = nth_network(seq, n);
    const SrbmParams params = srbm_params(seq);
    const std::vector<Vec> grid = make_theta_grid(seq.base.station_count, ctx.cfg.grid);

    const SimulationResult sim = simulate(nth.network, ctx.cfg.sim);
    const std::size_t d = seq.base.station_count;

    std::vector<std::string> pre_cols = {"n"};
    for (const auto& c : theta_columns(d)) pre_cols.push_back(c);
    pre_cols.insert(pre_cols.end(), {"residual", "se", "abs_z"});
    CsvWriter pre_csv(ctx.out_dir / "prelimit.csv", ctx.provenance, pre_cols);

    std::vector<std::string> eps_cols = {"n"};
    for (const auto& c : theta_columns(d)) eps_cols.push_back(c);
    eps_cols.insert(eps_cols.end(), {"epsilon", "se", "normalized"});
    CsvWriter eps_csv(ctx.out_dir / "residuals.csv", ctx.provenance, eps_cols);

    std::size_t consistent = 0;
    std::vector<PrelimitResidual> pres(grid.size());
    std::vector<AsymptoticResidual> asys(grid.size());
    parallel_for(grid.size(), [&](std::size_t g) {
        pres[g] = prelimit_bar_residual(sim.estimate, nth, grid[g]);
        asys[g] = asymptotic_residual(sim.estimate, params, nth.r_n, grid[g]);
    });
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double z = pres[g].se > 0.0 ? std::abs(pres[g].residual) / pres[g].se : 0.0;
        if (z <= 3.0) ++consistent;
        auto cells = std::vector<std::string>{format_number(n)};
        for (const auto& cell : theta_cells(grid[g])) cells.push_back(cell);
        cells.insert(cells.end(), {format_number(pres[g].residual), format_number(pres[g].se),
                                   format_number(z)});
        pre_csv.raw_row(cells);

        cells = {format_number(n)};
        for (const auto& cell : theta_cells(grid[g])) cells.push_back(cell);
        cells.insert(cells.end(), {format_number(asys[g].epsilon), format_number(asys[g].se),
                                   format_number(asys[g].normalized)});
        eps_csv.raw_row(cells);
    }
    std::printf("n=%d: prelimit residual within 3 SE of 0 at %zu/%zu grid points\n", n, consistent,
                grid.size());
    if (assert_pass) {
        // mirror of the acceptance rule: at most 5% of points may exceed 3 SE
        const std::size_t required = grid.size() - grid.size() / 20;
        if (consistent < required) return 4;
    }
    return 0;
}

inline int cmd_srbm(const CommonArgs& args, bool dump_path) {
    const RunContext ctx = make_context(args);
    const SrbmParams params = srbm_params(ctx.cfg.sequence());
    const std::size_t d = params.dimension();
    SrbmOptions opts = ctx.cfg.srbm;
    opts.theta_grid = make_theta_grid(d, ctx.cfg.grid);
    if (dump_path) opts.max_path_rows = 100000;
    const SrbmSample sample = simulate_srbm(params, opts);

    {
        CsvWriter csv(ctx.out_dir / "srbm_summary.csv", ctx.provenance,
                      {"station", "mean", "mean_se", "regulator_rate", "rate_se", "b"});
        for (std::size_t j = 0; j < d; ++j) {
            const MeanSe mean = sample.state_mean(j);
            const MeanSe rate = sample.regulator_rate(j);
            csv.row(j + 1, mean.mean, mean.se, rate.mean, rate.se, params.b[j]);
        }
    }
    {
        std::vector<std::string> cols = theta_columns(d);
        cols.insert(cols.end(), {"residual", "se", "normalized", "phi"});
        for (std::size_t j = 0; j < d; ++j) cols.push_back("phi_" + std::to_string(j + 1));
        CsvWriter csv(ctx.out_dir / "srbm_residuals.csv", ctx.provenance, cols);
        for (const Vec& theta : opts.theta_grid) {
            const SrbmBarResidual res = srbm_bar_residual(sample, params, theta);
            auto cells = theta_cells(theta);
            cells.insert(cells.end(),
                         {format_number(res.residual), format_number(res.se),
                          format_number(std::abs(res.residual) / inf_norm(theta)),
                          format_number(res.phi)});
            for (std::size_t j = 0; j < d; ++j) cells.push_back(format_number(res.phi_boundary[j]));
            csv.raw_row(cells);
        }
    }
    if (dump_path) {
        std::vector<std::string> cols = {"time"};
        for (std::size_t j = 0; j < d; ++j) cols.push_back("z_" + std::to_string(j + 1));
        for (std::size_t j = 0; j < d; ++j) cols.push_back("dy_" + std::to_string(j + 1));
        CsvWriter csv(ctx.out_dir / "srbm_path.csv", ctx.provenance, cols);
        for (std::size_t m = 0; m < sample.path_time.size(); ++m) {
            std::vector<std::string> cells = {format_number(sample.path_time[m])};
            for (std::size_t j = 0; j < d; ++j)
                cells.push_back(format_number(sample.path_z[m * d + j]));
            for (std::size_t j = 0; j < d; ++j)
                cells.push_back(format_number(sample.path_dy[m * d + j]));
            csv.raw_row(cells);
        }
    }
    if (d == 1) {
        const Analytic1d law = analytic_1d(params);
        std::printf("d=1 stationary law: Exp(%s)\n", format_number(law.alpha).c_str());
    }
    std::printf("srbm: %lld retained steps over %s time units\n", sample.retained_steps,
                format_number(sample.retained_time).c_str());
    return 0;
}

inline int cmd_converge(const CommonArgs& args) {
    const RunContext ctx = make_context(args);
    const HeavyTrafficSequence seq = ctx.cfg.sequence();
    if (ctx.cfg.n_list.empty()) throw ConfigError("converge needs a nonempty n_list");
    const std::size_t d = seq.base.station_count;
    const std::vector<Vec> grid = make_theta_grid(d, ctx.cfg.grid);
    const BarReport report = residual_sweep(seq, ctx.cfg.n_list, grid, ctx.cfg.sim, ctx.cfg.srbm);

    {
        std::vector<std::string> cols = {"n"};
        for (const auto& c : theta_columns(d)) cols.push_back(c);
        cols.insert(cols.end(), {"epsilon", "se", "normalized"});
        CsvWriter csv(ctx.out_dir / "residuals.csv", ctx.provenance, cols);
        for (const auto& row : report.epsilon_rows) {
            auto cells = std::vector<std::string>{format_number(row.n)};
            for (const auto& cell : theta_cells(row.theta)) cells.push_back(cell);
            cells.insert(cells.end(), {format_number(row.epsilon), format_number(row.se),
                                       format_number(row.normalized)});
            csv.raw_row(cells);
        }
    }
    {
        std::vector<std::string> cols = {"n"};
        for (const auto& c : theta_columns(d)) cols.push_back(c);
        cols.insert(cols.end(), {"residual", "se"});
        CsvWriter csv(ctx.out_dir / "prelimit.csv", ctx.provenance, cols);
        for (const auto& row : report.prelimit_rows) {
            auto cells = std::vector<std::string>{format_number(row.n)};
            for (const auto& cell : theta_cells(row.theta)) cells.push_back(cell);
            cells.insert(cells.end(), {format_number(row.residual), format_number(row.se)});
            csv.raw_row(cells);
        }
    }
    {
        CsvWriter csv(ctx.out_dir / "distances.csv", ctx.provenance, {"n", "station", "ks", "w1"});
        for (const auto& row : report.distance_rows)
            csv.row(row.n, row.station + 1, row.ks, row.w1);
    }
    {
        std::vector<std::string> cols = theta_columns(d);
        cols.insert(cols.end(), {"residual", "se", "normalized"});
        CsvWriter csv(ctx.out_dir / "srbm_residuals.csv", ctx.provenance, cols);
        for (const auto& row : report.srbm_rows) {
            auto cells = theta_cells(row.theta);
            cells.insert(cells.end(), {format_number(row.residual), format_number(row.se),
                                       format_number(row.normalized)});
            csv.raw_row(cells);
        }
    }
    {
        CsvWriter csv(ctx.out_dir / "rays.csv", ctx.provenance,
                      {"n", "subset", "alpha", "station", "phi", "phi_j", "diff", "se"});
        for (const auto& row : report.ray_rows)
            csv.row(row.n, row.subset, row.alpha, row.j + 1, row.phi, row.phi_j, row.diff, row.se);
    }
    for (const auto& [n, sup] : report.sup_normalized)
        std::printf("n=%d sup |epsilon|/||theta|| = %s\n", n, format_number(sup).c_str());
    return 0;
}

inline int run_command(const std::vector<std::string>& argv) {
    CLI::App app{"generalized Jackson networks under heavy traffic: simulation and BAR checks"};
    app.require_subcommand(1);

    CommonArgs common;
    int n_arg = 0;
    bool assert_pass = false;
    bool dump_samples = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "experiment config (JSON)")->required();
        sub->add_option("--out", common.out_override, "output directory override");
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t& s) {
                common.seed_override = s;
                common.has_seed = true;
            },
            "root seed override");
    };

    CLI::App* validate = app.add_subcommand("validate", "check network and SRBM data");
    add_common(validate);
    validate->add_flag("--assert", assert_pass, "exit 4 if any check fails");

    CLI::App* simulate = app.add_subcommand("simulate", "simulate one network, write flow checks");
    add_common(simulate);
    simulate->add_option("--n", n_arg, "simulate the n-th network of the sequence");
    simulate->add_flag("--dump-samples", dump_samples, "write the dwell-weighted sample path");

    CLI::App* exponents = app.add_subcommand("exponents", "expansion-error table over n_list");
    add_common(exponents);

    CLI::App* bar_check = app.add_subcommand("bar-check", "prelimit + asymptotic residuals at one n");
    add_common(bar_check);
    bar_check->add_option("--n", n_arg, "sequence index (default: first of n_list)");
    bar_check->add_flag("--assert", assert_pass, "exit 4 if residuals violate the 3-SE rule");

    CLI::App* srbm = app.add_subcommand("srbm", "simulate the approximating SRBM");
    add_common(srbm);
    bool dump_path = false;
    srbm->add_flag("--dump-path", dump_path, "write a thinned path table");

    CLI::App* converge = app.add_subcommand("converge", "full n-sweep with distances and rays");
    add_common(converge);

    std::vector<char*> raw;
    std::vector<std::string> storage = argv;
    std::string name = "barbench";
    raw.push_back(name.data());
    for (auto& s : storage) raw.push_back(s.data());

    try {
        app.parse(static_cast<int>(raw.size()), raw.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (validate->parsed()) return cmd_validate(common, assert_pass);
        if (simulate->parsed()) return cmd_simulate(common, n_arg, dump_samples);
        if (exponents->parsed()) return cmd_exponents(common);
        if (bar_check->parsed()) return cmd_bar_check(common, n_arg, assert_pass);
        if (srbm->parsed()) return cmd_srbm(common, dump_path);
        if (converge->parsed()) return cmd_converge(common);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 2;
}

}  // namespace barbench::cli
