#include <doctest.h>

#include <cmath>

#include "barbench/bar.hpp"

using namespace barbench;

namespace {

HeavyTrafficSequence mm1_seq() {
    NetworkSpec net;
    net.station_count = 1;
    net.arrival = {DistributionSpec::exponential(1.0)};
    net.service = {DistributionSpec::exponential(1.0)};
    net.routing = Matrix(1, 1);
    return {net, {1.0}, RateRule::inv_sqrt_n};
}

HeavyTrafficSequence tandem_seq() {
    NetworkSpec net;
    net.station_count = 2;
    net.arrival = {DistributionSpec::exponential(1.0), std::nullopt};
    net.service = {DistributionSpec::exponential(1.0), DistributionSpec::exponential(1.0)};
    net.routing = Matrix(2, 2);
    net.routing(0, 1) = 1.0;
    return {net, {1.0, 1.0}, RateRule::inv_sqrt_n};
}

// hand-built two-row estimate: queue lengths 0 and 1 with equal dwell
StationaryEstimate two_row_estimate() {
    StationaryEstimate est;
    est.stations = 1;
    est.horizon = 2.0;
    est.warmup = 0.0;
    est.batches = 2;
    MarkovState st;
    st.queue = {0};
    st.residual_arrival = {1.0};
    st.residual_service = {1.0};
    est.push_row(st, 0.0, 1.0);
    st.queue = {1};
    est.push_row(st, 0.0, 1.0);
    est.finalize_batches();
    return est;
}

}  // namespace

TEST_CASE("theta grid respects its constraints") {
    for (std::size_t d : {1u, 2u, 3u}) {
        const std::vector<Vec> grid = make_theta_grid(d, {});
        CHECK(grid.size() >= 32);
        for (const Vec& theta : grid) {
            double norm = 0.0;
            for (double t : theta) {
                CHECK(t <= 0.0);
                norm = std::max(norm, std::abs(t));
            }
            CHECK(norm > 0.0);
            CHECK(norm <= 1.0 + 1e-12);
        }
    }
    // deduplication: d=1 axis and diagonal coincide
    const std::vector<Vec> grid1 = make_theta_grid(1, {1.0, 8, 8, 0, 99});
    CHECK(grid1.size() == 8);
}

TEST_CASE("gamma forms on the spec cases") {
    {
        SrbmParams p;
        p.b = {1.0};
        p.R = Matrix::identity(1);
        p.Sigma = Matrix(1, 1);
        p.Sigma(0, 0) = 2.0;
        p.mu = {-1.0};
        CHECK(gamma_form(p, {0.0}) == 0.0);
        CHECK(gamma_boundary_form(p, 0, {0.0}) == 0.0);
        CHECK(gamma_form(p, {-1.0}) == doctest::Approx(2.0));
        CHECK(gamma_boundary_form(p, 0, {-1.0}) == doctest::Approx(-1.0));
    }
    {
        const SrbmParams p = srbm_params(tandem_seq());
        const Vec theta = {-1.0, -1.0};
        CHECK(gamma_boundary_form(p, 0, theta) == doctest::Approx(0.0));
        CHECK(gamma_boundary_form(p, 1, theta) == doctest::Approx(-1.0));
    }
}

TEST_CASE("empirical MGFs on forced arithmetic") {
    const StationaryEstimate est = two_row_estimate();
    {
        const EmpiricalMgfs mgfs = empirical_mgfs(est, 1.0, {0.0});
        CHECK(mgfs.phi == 1.0);
        CHECK(mgfs.phi_boundary[0] == 1.0);
    }
    {
        const EmpiricalMgfs mgfs = empirical_mgfs(est, 1.0, {std::log(0.5)});
        CHECK(mgfs.phi == doctest::Approx(0.75).epsilon(1e-15));
        CHECK(mgfs.phi_boundary[0] == doctest::Approx(1.0));
        CHECK(mgfs.zero_fraction[0] == doctest::Approx(0.5));
    }
    CHECK_THROWS_AS(empirical_mgfs(est, 1.0, {0.5}), ConfigError);

    // no dwell time with an empty station: conditioning is impossible
    StationaryEstimate busy;
    busy.stations = 1;
    busy.horizon = 2.0;
    busy.batches = 2;
    MarkovState st;
    st.queue = {1};
    st.residual_arrival = {1.0};
    st.residual_service = {1.0};
    busy.push_row(st, 0.0, 1.0);
    st.queue = {2};
    busy.push_row(st, 0.0, 1.0);
    busy.finalize_batches();
    CHECK_THROWS_AS(empirical_mgfs(busy, 1.0, {-0.5}), NumericError);
}

TEST_CASE("empirical MGFs are monotone in theta and exact at zero") {
    const NthNetwork nth = nth_network(mm1_seq(), 4);
    const SimulationResult sim = simulate(nth.network, {.horizon = 2e4, .seed = 5});
    double prev = -1.0;
    for (double t : {-2.0, -1.0, -0.5, -0.25, -0.1}) {
        const EmpiricalMgfs mgfs = empirical_mgfs(sim.estimate, nth.r_n, {t});
        CHECK(mgfs.phi > prev);
        prev = mgfs.phi;
        CHECK(mgfs.phi <= 1.0);
        CHECK(mgfs.phi_boundary[0] <= 1.0 + 1e-12);
    }
    CHECK(empirical_mgfs(sim.estimate, nth.r_n, {0.0}).phi == 1.0);
}

TEST_CASE("boundary MGFs are coordinate-wise monotone too") {
    const NthNetwork nth = nth_network(tandem_seq(), 4);
    const SimulationResult sim = simulate(nth.network, {.horizon = 5e4, .seed = 17});
    // decrease one coordinate at a time; phi and every phi_j must not grow
    const std::vector<Vec> chain = {
        {-0.1, -0.1}, {-0.5, -0.1}, {-0.5, -0.6}, {-1.0, -0.6}, {-1.0, -1.0}};
    EmpiricalMgfs prev = empirical_mgfs(sim.estimate, nth.r_n, chain.front());
    CHECK(empirical_mgfs(sim.estimate, nth.r_n, {0.0, 0.0}).phi_boundary[0] == 1.0);
    for (std::size_t i = 1; i < chain.size(); ++i) {
        const EmpiricalMgfs cur = empirical_mgfs(sim.estimate, nth.r_n, chain[i]);
        CHECK(cur.phi <= prev.phi + 1e-12);
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(cur.phi_boundary[j] <= prev.phi_boundary[j] + 1e-12);
        prev = cur;
    }
}

TEST_CASE("analytic d=1 SRBM pair satisfies the stationary identity exactly") {
    SrbmParams p;
    p.b = {1.0};
    p.R = Matrix::identity(1);
    p.Sigma = Matrix(1, 1);
    p.Sigma(0, 0) = 2.0;
    p.mu = {-1.0};
    const Analytic1d law = analytic_1d(p);
    CHECK(law.alpha == doctest::Approx(1.0));
    for (int k = 1; k <= 40; ++k) {
        const double theta = -2.0 * k / 40.0;
        const double residual = gamma_form(p, {theta}) * law.phi(theta) +
                                p.b[0] * gamma_boundary_form(p, 0, {theta}) * law.phi_boundary(theta);
        CHECK(std::abs(residual) <= 1e-12);
    }

    SrbmParams q = p;
    q.b = {2.0};
    q.Sigma(0, 0) = 1.0;
    q.mu = {-2.0};
    CHECK(analytic_1d(q).alpha == doctest::Approx(4.0));
}

TEST_CASE("epsilon computed two ways agrees to rounding") {
    const HeavyTrafficSequence seq = mm1_seq();
    const SrbmParams params = srbm_params(seq);
    const NthNetwork nth = nth_network(seq, 16);
    const SimulationResult sim = simulate(nth.network, {.horizon = 2e4, .seed = 21});
    const StationaryEstimate& est = sim.estimate;

    for (double t : {-1.0, -0.5, -0.1}) {
        const Vec theta = {t};
        const AsymptoticResidual via_op = asymptotic_residual(est, params, nth.r_n, theta);

        // independent re-derivation from the raw samples (same batch order)
        double phi = 0.0, w_total = 0.0, cond = 0.0, zero_w = 0.0;
        for (int b = 0; b < est.batches; ++b) {
            double phi_b = 0.0, w_b = 0.0, cond_b = 0.0, zero_b = 0.0;
            for (std::size_t m = est.batch_first[b]; m < est.batch_first[b + 1]; ++m) {
                const double e = std::exp(nth.r_n * t * est.queue_flat[m]);
                phi_b += e * est.dwell[m];
                w_b += est.dwell[m];
                if (est.queue_flat[m] == 0) {
                    cond_b += e * est.dwell[m];
                    zero_b += est.dwell[m];
                }
            }
            phi += phi_b;
            w_total += w_b;
            cond += cond_b;
            zero_w += zero_b;
        }
        const double gamma0 = 0.5 * params.Sigma(0, 0) * t * t + params.mu[0] * t;
        const double direct = gamma0 * phi / w_total + params.b[0] * (params.R(0, 0) * t) * (cond / zero_w);
        CHECK(std::abs(via_op.epsilon - direct) <= 1e-12);
    }
}

TEST_CASE("prelimit residual vanishes identically at theta = 0") {
    const HeavyTrafficSequence seq = mm1_seq();
    const NthNetwork nth = nth_network(seq, 4);
    const SimulationResult sim = simulate(nth.network, {.horizon = 5e3, .seed = 2});
    const PrelimitResidual res = prelimit_bar_residual(sim.estimate, nth, {0.0});
    CHECK(res.residual == 0.0);
    CHECK(res.se == 0.0);
}

TEST_CASE("prelimit residual is consistent with zero on M/M/1") {
    const HeavyTrafficSequence seq = mm1_seq();
    const NthNetwork nth = nth_network(seq, 16);
    const SimulationResult sim = simulate(nth.network, {.horizon = 1e5, .seed = 8});
    const PrelimitResidual res = prelimit_bar_residual(sim.estimate, nth, {-0.5});
    CHECK(res.se > 0.0);
    CHECK(std::abs(res.residual) <= 3.0 * res.se);
}

TEST_CASE("ray diagnostic on the analytic law and on simulation") {
    // analytic full-set ray: phi(alpha) - phi_1(alpha) -> 0 as alpha rises to 0
    SrbmParams p;
    p.b = {1.0};
    p.R = Matrix::identity(1);
    p.Sigma = Matrix(1, 1);
    p.Sigma(0, 0) = 2.0;
    p.mu = {-1.0};
    const Analytic1d law = analytic_1d(p);
    CHECK(std::abs(law.phi(-1e-3) - law.phi_boundary(-1e-3)) < 2e-3);
    CHECK(std::abs(law.phi(-1e-6) - law.phi_boundary(-1e-6)) < 2e-6);

    const HeavyTrafficSequence seq = mm1_seq();
    const NthNetwork nth = nth_network(seq, 16);
    const SimulationResult sim = simulate(nth.network, {.horizon = 1e5, .seed = 13});
    const auto rows = ray_diagnostic(sim.estimate, nth.r_n, 16);
    CHECK(!rows.empty());
    // the finite-n shadow: the tabulated gap closes as alpha rises to 0
    double at_far = 0.0, at_near = 0.0;
    for (const auto& row : rows) {
        CHECK(row.se >= 0.0);
        if (row.alpha == -1.0) at_far = row.diff;
        if (row.alpha == -0.02) at_near = row.diff;
    }
    CHECK(at_near > at_far);
    CHECK(std::abs(at_near) < 0.05);
}

TEST_CASE("residual sweep populates the report and rejects empty n lists") {
    const HeavyTrafficSequence seq = mm1_seq();
    std::vector<Vec> grid = {{-1.0}, {-0.5}, {-0.25}};
    CHECK_THROWS_AS(residual_sweep(seq, {}, grid, {.horizon = 1e3}, {}), ConfigError);

    SimOptions sim_opts{.horizon = 1e4, .seed = 3};
    SrbmOptions srbm_opts;
    srbm_opts.horizon = 200.0;
    srbm_opts.step = 1e-3;
    const BarReport report = residual_sweep(seq, {4, 16}, grid, sim_opts, srbm_opts);
    CHECK(report.epsilon_rows.size() == 6);
    CHECK(report.prelimit_rows.size() == 6);
    CHECK(report.distance_rows.size() == 2);
    CHECK(report.srbm_rows.size() == 3);
    CHECK(!report.ray_rows.empty());
    CHECK(report.sup_normalized.size() == 2);
    CHECK(report.sup_normalized_for(4) > 0.0);
}
