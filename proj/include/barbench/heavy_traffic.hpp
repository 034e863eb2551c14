#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "barbench/network.hpp"

namespace barbench {

enum class RateRule { inv_sqrt_n, inv_n };

inline std::string rate_rule_name(RateRule r) {
    return r == RateRule::inv_sqrt_n ? "inv_sqrt_n" : "inv_n";
}

// A heavy-traffic sequence of networks: external rates and routing are fixed,
// service means are tightened so that lambda_s^(n) - lambda_a = b r_n holds
// exactly at every n, with each service distribution's family and scv fixed.
struct HeavyTrafficSequence {
    NetworkSpec base;
    Vec b;  // positive, rate units
    RateRule rate_rule = RateRule::inv_sqrt_n;

    double r(int n) const {
        if (n < 1) throw ConfigError("sequence index n must be >= 1");
        return rate_rule == RateRule::inv_sqrt_n ? 1.0 / std::sqrt(static_cast<double>(n))
                                                 : 1.0 / static_cast<double>(n);
    }
};

inline void require_valid(const HeavyTrafficSequence& seq) {
    require_well_formed(seq.base);
    if (seq.b.size() != seq.base.station_count)
        throw ConfigError("b must have one entry per station");
    for (double bj : seq.b)
        if (!(bj > 0.0)) throw ConfigError("b must be strictly positive");
    if (!validate_network(seq.base).all_passed())
        throw ConfigError("base network fails validation");
}

struct NthNetwork {
    NetworkSpec network;
    double r_n = 0.0;
    Vec rho;       // utilizations, all in (0,1)
    Vec lambda_a;  // total arrival rates (independent of n)
    Vec lambda_s;  // service rates of this network
};

inline NthNetwork nth_network(const HeavyTrafficSequence& seq, int n) {
    require_valid(seq);
    NthNetwork out;
    out.r_n = seq.r(n);
    out.lambda_a = solve_traffic_equation(seq.base.external_rates(), seq.base.routing);
    out.network = seq.base;
    const std::size_t d = seq.base.station_count;
    out.lambda_s.resize(d);
    out.rho.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const double rate = out.lambda_a[j] + seq.b[j] * out.r_n;
        if (!(rate > 0.0)) throw ConfigError("nonpositive service rate in nth network");
        out.network.service[j] = seq.base.service[j].with_mean(1.0 / rate);
        out.lambda_s[j] = rate;
        out.rho[j] = out.lambda_a[j] / rate;
    }
    return out;
}

// Data of the approximating SRBM: drift mu = -Rb, reflection R = I - P^T, and
// the covariance assembled termwise from the limiting rates and variances,
//   Sigma_ij = sum_k lambda_sk [ p_ki (delta_ij - p_kj)
//                                + lambda_sk^2 sigma_sk^2 (p_ki - delta_ki)(p_kj - delta_kj) ]
//              + lambda_ei^3 sigma_ei^2 delta_ij .
struct SrbmParams {
    Vec mu;
    Matrix Sigma;
    Matrix R;
    Vec b;

    std::size_t dimension() const { return b.size(); }
};

// gamma(theta) = (1/2) <theta, Sigma theta> + <mu, theta>  (mu = -Rb)
inline double gamma_form(const SrbmParams& params, const Vec& theta) {
    const Vec st = params.Sigma * theta;
    return 0.5 * dot(theta, st) + dot(params.mu, theta);
}

// gamma_j(theta) = <R^{(j)}, theta> with R^{(j)} the j-th column of R
inline double gamma_boundary_form(const SrbmParams& params, std::size_t j, const Vec& theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < params.dimension(); ++i) s += params.R(i, j) * theta[i];
    return s;
}

inline SrbmParams srbm_params(const HeavyTrafficSequence& seq) {
    require_valid(seq);
    const std::size_t d = seq.base.station_count;
    const Matrix& P = seq.base.routing;
    const Vec lambda_e = seq.base.external_rates();
    const Vec lambda_s = solve_traffic_equation(lambda_e, P);  // limit: lambda_s = lambda_a

    // scv held fixed along the sequence, so sigma_sj^2 = scv_j / lambda_aj^2
    Vec sig2_s(d), sig2_e(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
        sig2_s[j] = seq.base.service[j].scv() / (lambda_s[j] * lambda_s[j]);
    for (std::size_t i = 0; i < d; ++i)
        if (seq.base.is_external(i)) sig2_e[i] = seq.base.arrival[i]->variance();

    SrbmParams params;
    params.b = seq.b;
    params.R = reflection_and_mmatrix(P, 0).R;

    params.Sigma = Matrix(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double dij = i == j ? 1.0 : 0.0;
                const double dki = k == i ? 1.0 : 0.0;
                const double dkj = k == j ? 1.0 : 0.0;
                s += lambda_s[k] *
                     (P(k, i) * (dij - P(k, j)) +
                      lambda_s[k] * lambda_s[k] * sig2_s[k] * (P(k, i) - dki) * (P(k, j) - dkj));
            }
            if (i == j) s += lambda_e[i] * lambda_e[i] * lambda_e[i] * sig2_e[i];
            params.Sigma(i, j) = s;
        }
    }

    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j)
            if (std::abs(params.Sigma(i, j) - params.Sigma(j, i)) > 1e-12)
                throw NumericError("Sigma asymmetry beyond tolerance");

    const CholeskyResult chol = cholesky(params.Sigma);
    if (!chol.factor) {
        char buf[96];
        std::snprintf(buf, sizeof buf,
                      "Sigma is not positive definite (leading minor %d fails)", chol.failed_minor);
        throw NotPositiveDefiniteError(buf, chol.failed_minor);
    }

    params.mu.assign(d, 0.0);
    const Vec rb = params.R * seq.b;
    for (std::size_t i = 0; i < d; ++i) params.mu[i] = -rb[i];

    // R^{-1} mu = -b must hold by construction; treat violation as numeric failure
    const Vec check = solve(params.R, params.mu);
    for (std::size_t i = 0; i < d; ++i)
        if (std::abs(check[i] + seq.b[i]) > 1e-10 * (1.0 + std::abs(seq.b[i])))
            throw NumericError("drift condition R^{-1} mu = -b violated");
    return params;
}

}  // namespace barbench
