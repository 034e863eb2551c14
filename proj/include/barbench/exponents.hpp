#pragma once

#include <cmath>
#include <vector>

#include "barbench/distribution.hpp"
#include "barbench/heavy_traffic.hpp"
#include "barbench/numerics.hpp"

namespace barbench {

// Moments of the truncated variable g(T) = min(T, c) with c = 1/r_n.
// Truncation shrinks the mean, so lambda_t >= 1/E[T].
struct TruncatedMoments {
    double lambda_t = 0.0;  // 1 / E[g(T)]
    double sigma2_t = 0.0;  // Var(g(T))
    double truncation = 0.0;
};

inline TruncatedMoments truncated_moments(const DistributionSpec& dist, double c) {
    const double m1 = dist.truncated_moment(1, c);
    const double m2 = dist.truncated_moment(2, c);
    return {1.0 / m1, m2 - m1 * m1, c};
}

inline double truncated_mgf(const DistributionSpec& dist, double y, double c) {
    return dist.mgf_truncated(y, c);
}

struct ExponentSolution {
    double value = 0.0;
    double residual = 0.0;  // defining equation residual, |t G(value) - 1|
    int iterations = 0;
    double bracket_lo = 0.0;
    double bracket_hi = 0.0;
};

namespace detail {

// Root of E[e^{x g(T)}] = target; the truncated MGF is strictly increasing,
// finite everywhere, and equals 1 at x = 0.
inline ExponentSolution solve_mgf_inverse(const DistributionSpec& dist, double target, double c) {
    if (target == 1.0) return {0.0, 0.0, 0, 0.0, 0.0};
    const RootResult r = solve_increasing(
        [&](double y) { return dist.mgf_truncated(y, c); }, target,
        [&](double y) { return dist.mgf_truncated_deriv(y, c); }, 0.0, 1e-13);
    ExponentSolution sol;
    sol.value = r.x;
    sol.residual = std::abs(dist.mgf_truncated(r.x, c) / target - 1.0);
    sol.iterations = r.iterations;
    sol.bracket_lo = r.bracket_lo;
    sol.bracket_hi = r.bracket_hi;
    return sol;
}

}  // namespace detail

// eta_i(theta_i): the unique root of e^{theta_i} E[e^{eta g(T_e)}] = 1.
inline ExponentSolution solve_eta(const DistributionSpec& arrival_dist, double theta_i, double r_n) {
    return detail::solve_mgf_inverse(arrival_dist, std::exp(-theta_i), 1.0 / r_n);
}

// log t_j(theta) = -theta_j + log( sum_k p_jk e^{theta_k} + p_j0 ).
inline double log_t(const Matrix& routing, std::size_t j, const Vec& theta) {
    const std::size_t d = routing.rows();
    double exit_mass = 1.0;
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        s += routing(j, k) * std::exp(theta[k]);
        exit_mass -= routing(j, k);
    }
    return -theta[j] + std::log(s + exit_mass);
}

// zeta_j(theta) = chi_j(log t_j(theta)), i.e. the root of
// t_j(theta) E[e^{zeta g(T_s)}] = 1.
inline ExponentSolution solve_zeta(const DistributionSpec& service_dist, const Matrix& routing,
                                   std::size_t j, const Vec& theta, double r_n) {
    const double x = log_t(routing, j, theta);
    return detail::solve_mgf_inverse(service_dist, std::exp(-x), 1.0 / r_n);
}

// Quadratic Taylor approximations around theta = 0, with coefficients built
// from the truncated moments:
//   quad_eta_i  = -lt_e theta_i - (1/2) lt_e^3 st_e^2 theta_i^2
//   quad_zeta_j = -lt_s x1 - (1/2) lt_s (sum_k theta_k^2 p_jk - (sum_k theta_k p_jk)^2)
//                 - (1/2) lt_s^3 st_s^2 x1^2,   x1 = -theta_j + sum_k p_jk theta_k.
struct QuadraticExponents {
    Vec eta;   // per station, 0 where there is no external arrival
    Vec zeta;  // per station
};

inline double quad_eta_value(const TruncatedMoments& tm, double theta_i) {
    return -tm.lambda_t * theta_i -
           0.5 * tm.lambda_t * tm.lambda_t * tm.lambda_t * tm.sigma2_t * theta_i * theta_i;
}

inline double quad_zeta_value(const TruncatedMoments& tm, const Matrix& routing, std::size_t j,
                              const Vec& theta) {
    const std::size_t d = routing.rows();
    double p_theta = 0.0, p_theta2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        p_theta += routing(j, k) * theta[k];
        p_theta2 += routing(j, k) * theta[k] * theta[k];
    }
    const double x1 = -theta[j] + p_theta;
    return -tm.lambda_t * x1 - 0.5 * tm.lambda_t * (p_theta2 - p_theta * p_theta) -
           0.5 * tm.lambda_t * tm.lambda_t * tm.lambda_t * tm.sigma2_t * x1 * x1;
}

inline QuadraticExponents quadratic_exponents(const HeavyTrafficSequence& seq, int n,
                                              const Vec& theta) {
    const NthNetwork nth = nth_network(seq, n);
    const double c = 1.0 / nth.r_n;
    const std::size_t d = seq.base.station_count;
    QuadraticExponents out;
    out.eta.assign(d, 0.0);
    out.zeta.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        if (nth.network.is_external(i))
            out.eta[i] = quad_eta_value(truncated_moments(*nth.network.arrival[i], c), theta[i]);
        out.zeta[i] = quad_zeta_value(truncated_moments(nth.network.service[i], c),
                                      nth.network.routing, i, theta);
    }
    return out;
}

// Normalized sup errors of the quadratic expansions over a theta grid, at the
// scaled arguments r_n * theta. These must decay along the sequence.
struct ExpansionError {
    int n = 0;
    double r_n = 0.0;
    double sup_eta = 0.0;   // max_i |eta_i(r theta_i) - quad(r theta_i)| / (r theta_i)^2
    double sup_zeta = 0.0;  // max_j |...| / (r ||theta||_inf)^2
};

inline ExpansionError expansion_error(const HeavyTrafficSequence& seq, int n,
                                      const std::vector<Vec>& theta_grid) {
    const NthNetwork nth = nth_network(seq, n);
    const double r = nth.r_n;
    const double c = 1.0 / r;
    const std::size_t d = seq.base.station_count;
    ExpansionError out;
    out.n = n;
    out.r_n = r;

    std::vector<TruncatedMoments> tm_e(d), tm_s(d);
    for (std::size_t i = 0; i < d; ++i) {
        if (nth.network.is_external(i)) tm_e[i] = truncated_moments(*nth.network.arrival[i], c);
        tm_s[i] = truncated_moments(nth.network.service[i], c);
    }

    for (const Vec& theta : theta_grid) {
        Vec scaled(d);
        double norm = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            scaled[k] = r * theta[k];
            norm = std::max(norm, std::abs(theta[k]));
        }
        if (norm == 0.0) throw ConfigError("expansion grid must exclude the origin");
        for (std::size_t i = 0; i < d; ++i) {
            if (nth.network.is_external(i) && theta[i] != 0.0) {
                const double exact = solve_eta(*nth.network.arrival[i], scaled[i], r).value;
                const double quad = quad_eta_value(tm_e[i], scaled[i]);
                out.sup_eta = std::max(out.sup_eta,
                                       std::abs(exact - quad) / (r * r * theta[i] * theta[i]));
            }
            const double exact = solve_zeta(nth.network.service[i], nth.network.routing, i, scaled, r).value;
            const double quad = quad_zeta_value(tm_s[i], nth.network.routing, i, scaled);
            out.sup_zeta = std::max(out.sup_zeta, std::abs(exact - quad) / (r * r * norm * norm));
        }
    }
    return out;
}

}  // namespace barbench
