#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "barbench/exponents.hpp"
#include "barbench/heavy_traffic.hpp"
#include "barbench/parallel.hpp"
#include "barbench/simulation.hpp"
#include "barbench/srbm.hpp"
#include "barbench/statistics.hpp"

namespace barbench {

struct ThetaGridSpec {
    double M = 1.0;
    int axis = 8;      // points per coordinate axis
    int diagonal = 8;  // points along -(1,...,1)
    int random = 32;   // interior points
    std::uint64_t seed = 99;
};

// Grid of theta <= 0 with 0 < ||theta||_inf <= M; exact duplicates merged.
inline std::vector<Vec> make_theta_grid(std::size_t d, const ThetaGridSpec& spec) {
    std::vector<Vec> grid;
    for (std::size_t i = 0; i < d; ++i)
        for (int k = 1; k <= spec.axis; ++k) {
            Vec theta(d, 0.0);
            theta[i] = -spec.M * k / spec.axis;
            grid.push_back(theta);
        }
    for (int k = 1; k <= spec.diagonal; ++k)
        grid.push_back(Vec(d, -spec.M * k / spec.diagonal));
    RngStream rng(spec.seed, StreamKind::grid, 0);
    for (int k = 0; k < spec.random; ++k) {
        Vec theta(d);
        for (std::size_t i = 0; i < d; ++i) theta[i] = -spec.M * rng.uniform01();
        grid.push_back(theta);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

// Per-batch sums of the exponential functional and its boundary-conditioned
// versions, collected in one pass over the snapshots:
//   f      = e^{<theta, r_n L>} (dwell-weighted)
//   cond_j = f restricted to {L_j = 0}
//   zero_j = indicator of {L_j = 0}
struct MgfBatchSums {
    std::vector<double> weights;                 // [batch]
    std::vector<double> f;                       // [batch]
    std::vector<std::vector<double>> cond;       // [station][batch]
    std::vector<std::vector<double>> zero;       // [station][batch]
    double total_weight = 0.0;
    double total_f = 0.0;
    Vec total_cond;
    Vec total_zero;
};

inline MgfBatchSums mgf_batch_sums(const StationaryEstimate& est, double r_n, const Vec& theta) {
    const std::size_t d = est.stations;
    if (theta.size() != d) throw ConfigError("theta dimension mismatch");
    for (double t : theta)
        if (t > 0.0) throw ConfigError("empirical MGFs require theta <= 0");
    if (est.size() == 0) throw ConfigError("empty stationary estimate");

    const int B = est.batches;
    MgfBatchSums out;
    out.weights.assign(B, 0.0);
    out.f.assign(B, 0.0);
    out.cond.assign(d, std::vector<double>(B, 0.0));
    out.zero.assign(d, std::vector<double>(B, 0.0));
    out.total_cond.assign(d, 0.0);
    out.total_zero.assign(d, 0.0);

    for (int b = 0; b < B; ++b) {
        for (std::size_t m = est.batch_first[b]; m < est.batch_first[b + 1]; ++m) {
            const std::int32_t* q = est.queue_flat.data() + m * d;
            const double w = est.dwell[m];
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += theta[k] * q[k];
            const double f = std::exp(r_n * s) * w;
            out.weights[b] += w;
            out.f[b] += f;
            for (std::size_t j = 0; j < d; ++j) {
                if (q[j] == 0) {
                    out.cond[j][b] += f;
                    out.zero[j][b] += w;
                }
            }
        }
        out.total_weight += out.weights[b];
        out.total_f += out.f[b];
        for (std::size_t j = 0; j < d; ++j) {
            out.total_cond[j] += out.cond[j][b];
            out.total_zero[j] += out.zero[j][b];
        }
    }
    for (std::size_t j = 0; j < d; ++j)
        if (out.total_zero[j] <= 0.0)
            throw NumericError("no dwell time with an empty station " + std::to_string(j + 1) +
                               " (horizon too short or utilization too close to 1)");
    return out;
}

struct EmpiricalMgfs {
    double phi = 0.0;
    double phi_se = 0.0;
    Vec phi_boundary;     // conditional on queue_j = 0, per station
    Vec phi_boundary_se;
    Vec zero_fraction;    // dwell fraction of {queue_j = 0}
};

// phi^(n)(theta) = time-weighted mean of e^{<theta, r_n L>}; the boundary
// version conditions on {L_j = 0} by restricting the dwell measure.
inline EmpiricalMgfs empirical_mgfs(const StationaryEstimate& est, double r_n, const Vec& theta) {
    const MgfBatchSums sums = mgf_batch_sums(est, r_n, theta);
    const std::size_t d = est.stations;
    EmpiricalMgfs out;
    std::vector<double> means(est.batches);
    for (int b = 0; b < est.batches; ++b) means[b] = sums.f[b] / sums.weights[b];
    out.phi = sums.total_f / sums.total_weight;
    out.phi_se = batch_stats(means).se;
    out.phi_boundary.assign(d, 0.0);
    out.phi_boundary_se.assign(d, 0.0);
    out.zero_fraction.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        const MeanSe ratio = ratio_batch_stats(sums.cond[j], sums.zero[j]);
        out.phi_boundary[j] = ratio.mean;
        out.phi_boundary_se[j] = ratio.se;
        out.zero_fraction[j] = sums.total_zero[j] / sums.total_weight;
    }
    return out;
}

struct PrelimitResidual {
    double residual = 0.0;
    double se = 0.0;
    Vec eta;   // solved exponents at r_n theta, per station
    Vec zeta;
};

// Exact finite-n identity: with f the exponential test function built from
// eta(r_n theta), zeta(r_n theta), the time integral of the indicator-weighted
// derivative over an inter-event interval telescopes to f(start) - f(end),
// because the integrand is exactly -(d/ds) f along the deterministic flow.
// In stationarity the expectation is zero; the estimator reports its
// batch-means standard error.
inline PrelimitResidual prelimit_bar_residual(const StationaryEstimate& est,
                                              const NthNetwork& nth, const Vec& theta) {
    const std::size_t d = est.stations;
    const double r = nth.r_n;
    const double c = 1.0 / r;
    if (theta.size() != d) throw ConfigError("theta dimension mismatch");

    PrelimitResidual out;
    out.eta.assign(d, 0.0);
    out.zeta.assign(d, 0.0);
    Vec scaled(d);
    for (std::size_t k = 0; k < d; ++k) scaled[k] = r * theta[k];
    for (std::size_t i = 0; i < d; ++i) {
        if (nth.network.is_external(i))
            out.eta[i] = solve_eta(*nth.network.arrival[i], scaled[i], r).value;
        out.zeta[i] = solve_zeta(nth.network.service[i], nth.network.routing, i, scaled, r).value;
    }

    auto test_fn = [&](const std::int32_t* q, const double* u, const double* v,
                       double shift) {
        double s = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            s += scaled[k] * q[k];
            if (nth.network.is_external(k)) s += out.eta[k] * std::min(u[k] - shift, c);
            const double vv = q[k] > 0 ? v[k] - shift : v[k];
            s += out.zeta[k] * std::min(vv, c);
        }
        return std::exp(s);
    };

    std::vector<double> sums, weights;
    est.batch_sums(
        [&](std::size_t m) {
            const auto row = est.row(m);
            // batch_sums multiplies by the dwell; the telescoped integral is
            // already a per-interval total, so divide it back out
            return (test_fn(row.queue, row.u, row.v, 0.0) -
                    test_fn(row.queue, row.u, row.v, row.weight)) /
                   row.weight;
        },
        sums, weights);
    std::vector<double> means(est.batches);
    double total = 0.0, total_w = 0.0;
    for (int b = 0; b < est.batches; ++b) {
        means[b] = sums[b] / weights[b];
        total += sums[b];
        total_w += weights[b];
    }
    out.residual = total / total_w;
    out.se = batch_stats(means).se;
    return out;
}

struct AsymptoticResidual {
    double epsilon = 0.0;
    double se = 0.0;
    double normalized = 0.0;  // |epsilon| / ||theta||_inf
};

// epsilon^(n)(theta) = gamma(theta) phi^(n)(theta)
//                      + sum_j b_j gamma_j(theta) phi_j^(n)(theta).
// The standard error linearizes the conditional ratios over batch means.
inline AsymptoticResidual asymptotic_residual_from_sums(const MgfBatchSums& sums,
                                                        const SrbmParams& params,
                                                        const Vec& theta) {
    const std::size_t d = params.dimension();
    const int B = static_cast<int>(sums.weights.size());
    const double g0 = gamma_form(params, theta);
    Vec gj(d), phi_j(d), p_hat(d);
    for (std::size_t j = 0; j < d; ++j) {
        gj[j] = gamma_boundary_form(params, j, theta);
        phi_j[j] = sums.total_cond[j] / sums.total_zero[j];
        p_hat[j] = sums.total_zero[j] / sums.total_weight;
    }
    const double phi = sums.total_f / sums.total_weight;

    AsymptoticResidual out;
    out.epsilon = g0 * phi;
    for (std::size_t j = 0; j < d; ++j) out.epsilon += params.b[j] * gj[j] * phi_j[j];

    std::vector<double> influence(B);
    for (int b = 0; b < B; ++b) {
        double xi = g0 * sums.f[b] / sums.weights[b];
        for (std::size_t j = 0; j < d; ++j) {
            const double a_jb = sums.cond[j][b] / sums.weights[b];
            const double p_jb = sums.zero[j][b] / sums.weights[b];
            xi += params.b[j] * gj[j] * (phi_j[j] + (a_jb - phi_j[j] * p_jb) / p_hat[j]);
        }
        influence[b] = xi;
    }
    out.se = batch_stats(influence).se;
    out.normalized = std::abs(out.epsilon) / inf_norm(theta);
    return out;
}

inline AsymptoticResidual asymptotic_residual(const StationaryEstimate& est,
                                              const SrbmParams& params, double r_n,
                                              const Vec& theta) {
    return asymptotic_residual_from_sums(mgf_batch_sums(est, r_n, theta), params, theta);
}

struct BarReport {
    struct EpsilonRow {
        int n;
        Vec theta;
        double epsilon, se, normalized;
    };
    struct PrelimitRow {
        int n;
        Vec theta;
        double residual, se;
    };
    struct DistanceRow {
        int n;
        std::size_t station;
        double ks, w1;
    };
    struct SrbmRow {
        Vec theta;
        double residual, se, normalized;
    };
    struct RayRow {
        int n;
        std::string subset;  // e.g. "{1,3}"
        double alpha;
        std::size_t j;
        double phi, phi_j, diff, se;
    };

    std::vector<Vec> grid;
    std::vector<EpsilonRow> epsilon_rows;
    std::vector<PrelimitRow> prelimit_rows;
    std::vector<DistanceRow> distance_rows;
    std::vector<SrbmRow> srbm_rows;
    std::vector<RayRow> ray_rows;
    std::vector<std::pair<int, double>> sup_normalized;  // per n

    double sup_normalized_for(int n) const {
        for (const auto& [nn, v] : sup_normalized)
            if (nn == n) return v;
        throw ConfigError("no sweep entry for requested n");
    }
};

struct RayOptions {
    std::vector<double> alphas = {-1.0, -0.5, -0.25, -0.1, -0.05, -0.02};
};

namespace detail {

inline std::string subset_label(const std::vector<std::size_t>& subset) {
    std::string s = "{";
    for (std::size_t i = 0; i < subset.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(subset[i] + 1);
    }
    return s + "}";
}

}  // namespace detail

// Finite-n shadow of the ray-limit comparison: along each ray direction c_A
// the table reports phi(alpha c_A) - phi_j(alpha c_A) with standard errors.
// This is a diagnostic; the limit statement concerns subsequential MGF limits
// and is not testable at finite n.
inline std::vector<BarReport::RayRow> ray_diagnostic(const StationaryEstimate& est, double r_n,
                                                     int n, const RayOptions& opts = {}) {
    const std::size_t d = est.stations;
    std::vector<BarReport::RayRow> rows;
    for (std::uint64_t mask = 1; mask < (1ULL << d); ++mask) {
        std::vector<std::size_t> subset;
        for (std::size_t i = 0; i < d; ++i)
            if (mask & (1ULL << i)) subset.push_back(i);
        const std::string label = detail::subset_label(subset);
        for (double alpha : opts.alphas) {
            Vec theta(d, 0.0);
            for (std::size_t i : subset) theta[i] = alpha;
            const MgfBatchSums sums = mgf_batch_sums(est, r_n, theta);
            const double phi = sums.total_f / sums.total_weight;
            for (std::size_t j = 0; j < d; ++j) {
                const double phi_j = sums.total_cond[j] / sums.total_zero[j];
                const double p_hat = sums.total_zero[j] / sums.total_weight;
                // difference of correlated estimators: per-batch influence
                std::vector<double> influence(est.batches);
                for (int b = 0; b < est.batches; ++b) {
                    const double m_b = sums.f[b] / sums.weights[b];
                    const double a_b = sums.cond[j][b] / sums.weights[b];
                    const double p_b = sums.zero[j][b] / sums.weights[b];
                    influence[b] = m_b - (phi_j + (a_b - phi_j * p_b) / p_hat);
                }
                BarReport::RayRow row;
                row.n = n;
                row.subset = label;
                row.alpha = alpha;
                row.j = j;
                row.phi = phi;
                row.phi_j = phi_j;
                row.diff = phi - phi_j;
                row.se = batch_stats(influence).se;
                rows.push_back(row);
            }
        }
    }
    return rows;
}

// Full n-sweep: one simulation per n with common random numbers (same root
// seed), prelimit and asymptotic residuals on the grid, marginal KS and
// 1-Wasserstein distances of r_n L against SRBM samples, and the ray table
// at the largest n.
inline BarReport residual_sweep(const HeavyTrafficSequence& seq, const std::vector<int>& n_list,
                                const std::vector<Vec>& grid, const SimOptions& sim_opts,
                                SrbmOptions srbm_opts) {
    if (n_list.empty()) throw ConfigError("n list must not be empty");
    if (grid.empty()) throw ConfigError("theta grid must not be empty");
    require_valid(seq);

    const SrbmParams params = srbm_params(seq);
    srbm_opts.theta_grid = grid;
    const SrbmSample srbm = simulate_srbm(params, srbm_opts);

    BarReport report;
    report.grid = grid;
    for (const Vec& theta : grid) {
        const SrbmBarResidual res = srbm_bar_residual(srbm, params, theta);
        report.srbm_rows.push_back(
            {theta, res.residual, res.se, std::abs(res.residual) / inf_norm(theta)});
    }
    const int n_max = *std::max_element(n_list.begin(), n_list.end());

    for (int n : n_list) {
        const NthNetwork nth = nth_network(seq, n);
        const SimulationResult sim = simulate(nth.network, sim_opts);
        const StationaryEstimate& est = sim.estimate;

        std::vector<BarReport::EpsilonRow> eps(grid.size());
        std::vector<BarReport::PrelimitRow> pre(grid.size());
        parallel_for(grid.size(), [&](std::size_t g) {
            const AsymptoticResidual ar = asymptotic_residual(est, params, nth.r_n, grid[g]);
            eps[g] = {n, grid[g], ar.epsilon, ar.se, ar.normalized};
            const PrelimitResidual pr = prelimit_bar_residual(est, nth, grid[g]);
            pre[g] = {n, grid[g], pr.residual, pr.se};
        });
        double sup = 0.0;
        for (const auto& row : eps) sup = std::max(sup, row.normalized);
        report.sup_normalized.emplace_back(n, sup);
        report.epsilon_rows.insert(report.epsilon_rows.end(), eps.begin(), eps.end());
        report.prelimit_rows.insert(report.prelimit_rows.end(), pre.begin(), pre.end());

        for (std::size_t j = 0; j < est.stations; ++j) {
            const WeightedAtoms gjn = est.marginal(j).atoms(nth.r_n);
            const WeightedAtoms diffusion = srbm.marginals[j].atoms();
            report.distance_rows.push_back(
                {n, j, ks_two_sample(gjn, diffusion), w1_two_sample(gjn, diffusion)});
        }
        if (n == n_max) {
            auto rays = ray_diagnostic(est, nth.r_n, n);
            report.ray_rows.insert(report.ray_rows.end(), rays.begin(), rays.end());
        }
    }
    return report;
}

}  // namespace barbench
