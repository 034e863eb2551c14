#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "barbench/heavy_traffic.hpp"
#include "barbench/linalg.hpp"
#include "barbench/rng.hpp"
#include "barbench/statistics.hpp"

namespace barbench {

struct LcpSolution {
    Vec z;
    Vec y;
    int sweeps = 0;
};

// One-step Skorokhod problem: find y >= 0 with z = W + R y >= 0 and <z,y> = 0.
// Projected Gauss-Seidel (convergent when R is an M-matrix) finds the active
// set; a direct solve on that set then restores complementarity to rounding.
inline LcpSolution lcp_reflect(const Vec& w, const Matrix& r, int max_sweeps = 10000,
                               double tol = 1e-12) {
    const std::size_t d = w.size();
    if (r.rows() != d || r.cols() != d) throw ConfigError("lcp_reflect: dimension mismatch");
    for (std::size_t j = 0; j < d; ++j)
        if (!(r(j, j) > 0.0))
            throw NonConvergenceError("reflection matrix has a nonpositive diagonal entry");

    LcpSolution sol;
    sol.y.assign(d, 0.0);
    const double scale = 1.0 + inf_norm(w);
    bool converged = false;
    for (int sweep = 1; sweep <= max_sweeps && !converged; ++sweep) {
        double change = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double resid = w[j];
            for (std::size_t k = 0; k < d; ++k)
                if (k != j) resid += r(j, k) * sol.y[k];
            const double next = std::max(0.0, -resid / r(j, j));
            change = std::max(change, std::abs(next - sol.y[j]));
            sol.y[j] = next;
        }
        sol.sweeps = sweep;
        converged = change <= tol * scale;
    }
    if (!converged)
        throw NonConvergenceError("projected Gauss-Seidel did not converge (is R an M-matrix?)");

    // polish: solve z_A = 0 exactly on the active set
    std::vector<std::size_t> active;
    for (std::size_t j = 0; j < d; ++j)
        if (sol.y[j] > 0.0) active.push_back(j);
    if (!active.empty()) {
        Matrix sub(active.size(), active.size());
        Vec rhs(active.size());
        for (std::size_t a = 0; a < active.size(); ++a) {
            rhs[a] = -w[active[a]];
            for (std::size_t b = 0; b < active.size(); ++b) sub(a, b) = r(active[a], active[b]);
        }
        try {
            const Vec polished = solve(sub, rhs);
            bool feasible = true;
            for (double v : polished)
                if (!(v >= 0.0)) feasible = false;
            if (feasible)
                for (std::size_t a = 0; a < active.size(); ++a) sol.y[active[a]] = polished[a];
        } catch (const SingularSystemError&) {
            // keep the iterative solution
        }
    }
    sol.z = w;
    const Vec ry = r * sol.y;
    for (std::size_t j = 0; j < d; ++j) {
        sol.z[j] += ry[j];
        if (sol.y[j] > 0.0 && std::abs(sol.z[j]) < tol * scale) sol.z[j] = 0.0;
    }
    for (std::size_t j = 0; j < d; ++j)
        if (sol.z[j] < -1e-9 * scale)
            throw NonConvergenceError("LCP solution infeasible (is R an M-matrix?)");
    return sol;
}

struct SrbmOptions {
    double step = 1e-3;
    double horizon = 1e4;
    double burn_in = -1.0;  // < 0 means 10% of horizon
    std::uint64_t seed = 1;
    int batches = 32;
    double hist_bin = 1e-3;
    std::vector<Vec> theta_grid;     // MGF accumulators kept for these points
    std::size_t max_path_rows = 0;   // thinned path retained for dumps

    double resolved_burn_in() const { return burn_in < 0.0 ? 0.1 * horizon : burn_in; }
};

// Streaming summary of one SRBM path. Raw steps are not retained (10^7 steps
// at the default resolution); instead the sample carries per-batch sums for
// each requested theta, marginal histograms, regulator totals, and an
// optional thinned path.
struct SrbmSample {
    std::size_t dimension = 0;
    double step = 0.0;
    double horizon = 0.0;
    double burn_in = 0.0;
    std::uint64_t seed = 0;
    int batches = 0;
    long long retained_steps = 0;
    double retained_time = 0.0;

    std::vector<BinnedHistogram> marginals;
    Vec regulator_total;                       // sum of dy_j
    std::vector<Vec> batch_regulator;          // [batch][j]
    std::vector<Vec> batch_state_sum;          // [batch][j] sum of Z_j
    std::vector<long long> batch_steps;

    std::vector<Vec> theta_grid;
    std::vector<std::vector<double>> batch_f;       // [theta][batch] sum e^{<theta,Z>}
    std::vector<std::vector<Vec>> batch_f_dy;       // [theta][batch][j] sum e^{<theta,Z>} dy_j

    std::vector<double> path_time;  // thinned path, row-major z then dy
    std::vector<double> path_z;
    std::vector<double> path_dy;

    MeanSe state_mean(std::size_t j) const {
        std::vector<double> means(batches);
        for (int b = 0; b < batches; ++b)
            means[b] = batch_state_sum[b][j] / static_cast<double>(batch_steps[b]);
        return batch_stats(means);
    }

    // Estimate of E_pi[Y_j(1)], which equals b_j for SRBM data from a
    // heavy-traffic sequence.
    MeanSe regulator_rate(std::size_t j) const {
        std::vector<double> rates(batches);
        const double batch_time = retained_time / batches;
        for (int b = 0; b < batches; ++b) rates[b] = batch_regulator[b][j] / batch_time;
        return batch_stats(rates);
    }
};

inline SrbmSample simulate_srbm(const SrbmParams& params, const SrbmOptions& opts) {
    const std::size_t d = params.dimension();
    if (!(opts.step > 0.0)) throw ConfigError("srbm step must be positive");
    if (!(opts.horizon > 0.0)) throw ConfigError("srbm horizon must be positive");
    const double burn_in = opts.resolved_burn_in();
    if (burn_in >= opts.horizon) throw ConfigError("srbm burn-in must be below the horizon");
    if (opts.batches < 2) throw ConfigError("need at least 2 batches");

    const CholeskyResult chol = cholesky(params.Sigma);
    if (!chol.factor) throw NotPositiveDefiniteError("Sigma is not positive definite", chol.failed_minor);
    const Matrix& a = *chol.factor;

    const long long total_steps = static_cast<long long>(std::llround(opts.horizon / opts.step));
    const long long burn_steps = static_cast<long long>(std::llround(burn_in / opts.step));
    const long long retained = total_steps - burn_steps;
    if (retained < opts.batches) throw ConfigError("srbm horizon too short for the batch count");

    SrbmSample sample;
    sample.dimension = d;
    sample.step = opts.step;
    sample.horizon = opts.horizon;
    sample.burn_in = burn_in;
    sample.seed = opts.seed;
    sample.batches = opts.batches;
    sample.retained_steps = retained;
    sample.retained_time = retained * opts.step;
    sample.marginals.assign(d, BinnedHistogram{opts.hist_bin, {}, 0.0});
    sample.regulator_total.assign(d, 0.0);
    sample.batch_regulator.assign(opts.batches, Vec(d, 0.0));
    sample.batch_state_sum.assign(opts.batches, Vec(d, 0.0));
    sample.batch_steps.assign(opts.batches, 0);
    sample.theta_grid = opts.theta_grid;
    sample.batch_f.assign(opts.theta_grid.size(), std::vector<double>(opts.batches, 0.0));
    sample.batch_f_dy.assign(opts.theta_grid.size(),
                             std::vector<Vec>(opts.batches, Vec(d, 0.0)));

    const long long steps_per_batch = (retained + opts.batches - 1) / opts.batches;
    const long long path_stride =
        opts.max_path_rows > 0 ? std::max<long long>(1, retained / opts.max_path_rows) : 0;

    RngStream noise(opts.seed, StreamKind::gaussian, 0);
    const double sqrt_h = std::sqrt(opts.step);
    Vec z(d, 0.0), w(d), xi(d);

    for (long long k = 0; k < total_steps; ++k) {
        for (std::size_t i = 0; i < d; ++i) xi[i] = noise.normal();
        for (std::size_t i = 0; i < d; ++i) {
            double diff = 0.0;
            for (std::size_t l = 0; l <= i; ++l) diff += a(i, l) * xi[l];
            w[i] = z[i] + params.mu[i] * opts.step + sqrt_h * diff;
        }
        const LcpSolution sol = lcp_reflect(w, params.R);
        z = sol.z;

        if (k < burn_steps) continue;
        const long long kk = k - burn_steps;
        const int b = static_cast<int>(std::min<long long>(kk / steps_per_batch, opts.batches - 1));
        sample.batch_steps[b] += 1;
        for (std::size_t j = 0; j < d; ++j) {
            sample.marginals[j].add(z[j], opts.step);
            sample.regulator_total[j] += sol.y[j];
            sample.batch_regulator[b][j] += sol.y[j];
            sample.batch_state_sum[b][j] += z[j];
        }
        for (std::size_t t = 0; t < sample.theta_grid.size(); ++t) {
            const double e = std::exp(dot(sample.theta_grid[t], z));
            sample.batch_f[t][b] += e;
            for (std::size_t j = 0; j < d; ++j)
                if (sol.y[j] > 0.0) sample.batch_f_dy[t][b][j] += e * sol.y[j];
        }
        if (path_stride > 0 && kk % path_stride == 0) {
            sample.path_time.push_back(burn_in + (kk + 1) * opts.step);
            for (std::size_t j = 0; j < d; ++j) sample.path_z.push_back(z[j]);
            for (std::size_t j = 0; j < d; ++j) sample.path_dy.push_back(sol.y[j]);
        }
    }
    return sample;
}

// The d = 1 stationary law is exponential; plugging its MGF pair into the
// stationary identity gamma(theta) phi + b gamma_1(theta) phi_1 = 0 makes it
// vanish identically.
struct Analytic1d {
    double alpha = 0.0;  // exponential rate 2 b R11 / Sigma11

    double phi(double theta) const { return alpha / (alpha - theta); }
    double phi_boundary(double) const { return 1.0; }
    double cdf(double x) const { return x <= 0.0 ? 0.0 : 1.0 - std::exp(-alpha * x); }
};

inline Analytic1d analytic_1d(const SrbmParams& params) {
    if (params.dimension() != 1) throw ConfigError("analytic stationary law requires d = 1");
    return {2.0 * params.b[0] * params.R(0, 0) / params.Sigma(0, 0)};
}

struct SrbmBarResidual {
    double residual = 0.0;
    double se = 0.0;
    double phi = 0.0;
    Vec phi_boundary;
};

// Evaluates gamma(theta) phi(theta) + sum_j b_j gamma_j(theta) phi_j(theta)
// from the per-batch accumulators of a simulated path. phi_j weights states
// by the regulator increments dy_j. theta must be one of the grid points the
// sample was built with.
inline SrbmBarResidual srbm_bar_residual(const SrbmSample& sample, const SrbmParams& params,
                                         const Vec& theta) {
    std::size_t t = sample.theta_grid.size();
    for (std::size_t i = 0; i < sample.theta_grid.size(); ++i)
        if (sample.theta_grid[i] == theta) {
            t = i;
            break;
        }
    if (t == sample.theta_grid.size())
        throw ConfigError("theta was not in the grid the SRBM sample was built with");

    const std::size_t d = sample.dimension;
    const int B = sample.batches;
    SrbmBarResidual out;
    out.phi_boundary.assign(d, 0.0);

    double f_total = 0.0;
    for (int b = 0; b < B; ++b) f_total += sample.batch_f[t][b];
    out.phi = f_total / static_cast<double>(sample.retained_steps);

    const double g0 = gamma_form(params, theta);
    Vec gj(d), dy_mean(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        gj[j] = gamma_boundary_form(params, j, theta);
        double num = 0.0;
        for (int b = 0; b < B; ++b) num += sample.batch_f_dy[t][b][j];
        if (sample.regulator_total[j] <= 0.0)
            throw NumericError("regulator never increased at some face (horizon too short)");
        out.phi_boundary[j] = num / sample.regulator_total[j];
        dy_mean[j] = sample.regulator_total[j] / static_cast<double>(sample.retained_steps);
    }

    out.residual = g0 * out.phi;
    for (std::size_t j = 0; j < d; ++j) out.residual += params.b[j] * gj[j] * out.phi_boundary[j];

    // delta-method influence per batch
    std::vector<double> influence(B);
    for (int b = 0; b < B; ++b) {
        const double nb = static_cast<double>(sample.batch_steps[b]);
        double xi = g0 * sample.batch_f[t][b] / nb;
        for (std::size_t j = 0; j < d; ++j) {
            const double a_jb = sample.batch_f_dy[t][b][j] / nb;
            const double p_jb = sample.batch_regulator[b][j] / nb;
            xi += params.b[j] * gj[j] *
                  (out.phi_boundary[j] + (a_jb - out.phi_boundary[j] * p_jb) / dy_mean[j]);
        }
        influence[b] = xi;
    }
    out.se = batch_stats(influence).se;
    return out;
}

}  // namespace barbench
