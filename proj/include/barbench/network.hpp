#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "barbench/distribution.hpp"
#include "barbench/linalg.hpp"
#include "barbench/rng.hpp"

namespace barbench {

// An open generalized Jackson network: d FIFO single-server stations,
// renewal external arrivals on a subset of stations, i.i.d. services,
// Markovian routing with row-substochastic matrix P (exit mass 1 - sum_k p_jk).
struct NetworkSpec {
    std::size_t station_count = 0;
    // arrival[i] is set exactly for stations with external arrivals
    std::vector<std::optional<DistributionSpec>> arrival;
    std::vector<DistributionSpec> service;
    Matrix routing;  // d x d, row-substochastic

    bool is_external(std::size_t i) const { return arrival[i].has_value(); }

    std::vector<std::size_t> external_stations() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < station_count; ++i)
            if (is_external(i)) out.push_back(i);
        return out;
    }

    Vec external_rates() const {
        Vec lambda_e(station_count, 0.0);
        for (std::size_t i = 0; i < station_count; ++i)
            if (is_external(i)) lambda_e[i] = 1.0 / arrival[i]->mean();
        return lambda_e;
    }

    Vec service_rates() const {
        Vec lambda_s(station_count);
        for (std::size_t j = 0; j < station_count; ++j) lambda_s[j] = 1.0 / service[j].mean();
        return lambda_s;
    }

    double exit_probability(std::size_t j) const {
        double s = 0.0;
        for (std::size_t k = 0; k < station_count; ++k) s += routing(j, k);
        return 1.0 - s;
    }
};

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool all_passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
};

// Structural sanity only; shape/NaN problems are errors rather than report
// entries because nothing downstream can run on them.
inline void require_well_formed(const NetworkSpec& net) {
    const std::size_t d = net.station_count;
    if (d == 0) throw ConfigError("network needs at least one station");
    if (net.arrival.size() != d || net.service.size() != d)
        throw ConfigError("arrival/service lists must have one entry per station");
    if (net.routing.rows() != d || net.routing.cols() != d)
        throw ConfigError("routing matrix must be d x d");
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j)
            if (!std::isfinite(net.routing(i, j)))
                throw ConfigError("routing matrix contains a non-finite entry");
}

inline ValidationReport validate_network(const NetworkSpec& net) {
    require_well_formed(net);
    const std::size_t d = net.station_count;
    ValidationReport report;
    char buf[160];

    bool rows_ok = true;
    std::string row_detail;
    for (std::size_t j = 0; j < d; ++j) {
        double row = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
            if (net.routing(j, k) < 0.0) rows_ok = false;
            row += net.routing(j, k);
        }
        if (row > 1.0 + 1e-12) rows_ok = false;
        if (!rows_ok && row_detail.empty()) {
            std::snprintf(buf, sizeof buf, "row %zu has sum %.17g or a negative entry", j + 1, row);
            row_detail = buf;
        }
    }
    report.checks.push_back({"row-substochastic", rows_ok, row_detail});

    const NeumannCertificate cert = neumann_convergence(net.routing);
    if (cert.converges)
        std::snprintf(buf, sizeof buf, "||P^%llu||_inf = %.3g < 1e-12", cert.power, cert.norm);
    else
        std::snprintf(buf, sizeof buf, "Neumann series does not decay (norm %.3g)", cert.norm);
    report.checks.push_back({"open (Neumann series converges)", cert.converges, buf});

    const bool has_external = !net.external_stations().empty();
    report.checks.push_back(
        {"nonempty external arrival set", has_external, has_external ? "" : "no station has external arrivals"});

    bool dists_ok = true;
    std::string dist_detail;
    for (std::size_t i = 0; i < d; ++i) {
        std::vector<std::string> issues;
        if (net.is_external(i)) {
            auto v = net.arrival[i]->invariant_violations();
            issues.insert(issues.end(), v.begin(), v.end());
        }
        auto v = net.service[i].invariant_violations();
        issues.insert(issues.end(), v.begin(), v.end());
        if (!issues.empty()) {
            dists_ok = false;
            if (dist_detail.empty()) {
                std::snprintf(buf, sizeof buf, "station %zu: %s", i + 1, issues.front().c_str());
                dist_detail = buf;
            }
        }
    }
    report.checks.push_back({"distribution invariants", dists_ok, dist_detail});
    return report;
}

// Unique solution of lambda_a = lambda_e + P^T lambda_a.
inline Vec solve_traffic_equation(const Vec& lambda_e, const Matrix& routing) {
    const std::size_t d = routing.rows();
    if (routing.cols() != d || lambda_e.size() != d)
        throw ConfigError("traffic equation: dimension mismatch");
    Matrix system = Matrix::identity(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) system(i, j) -= routing(j, i);
    Vec lambda_a = solve(system, lambda_e);

    Vec residual = lambda_a;
    const Vec pt_la = transpose(routing) * lambda_a;
    for (std::size_t i = 0; i < d; ++i) residual[i] -= lambda_e[i] + pt_la[i];
    if (inf_norm(residual) > 1e-10 * std::max(1.0, inf_norm(lambda_a)))
        throw NumericError("traffic equation residual too large");
    return lambda_a;
}

inline Vec utilizations(const NetworkSpec& net) {
    const Vec lambda_a = solve_traffic_equation(net.external_rates(), net.routing);
    const Vec lambda_s = net.service_rates();
    Vec rho(net.station_count);
    for (std::size_t j = 0; j < net.station_count; ++j) rho[j] = lambda_a[j] / lambda_s[j];
    return rho;
}

struct SubmatrixCertificate {
    std::vector<std::size_t> subset;  // station indices (0-based)
    bool inverse_nonnegative = false;
    double min_inverse_entry = 0.0;
};

struct ReflectionResult {
    Matrix R;
    bool is_m_matrix = false;
    double min_inverse_entry = 0.0;
    std::vector<SubmatrixCertificate> submatrices;
};

namespace detail {

inline SubmatrixCertificate certify_submatrix(const Matrix& r, const std::vector<std::size_t>& subset) {
    SubmatrixCertificate cert;
    cert.subset = subset;
    Matrix sub(subset.size(), subset.size());
    for (std::size_t a = 0; a < subset.size(); ++a)
        for (std::size_t b = 0; b < subset.size(); ++b) sub(a, b) = r(subset[a], subset[b]);
    try {
        const Matrix inv = inverse(sub);
        double lo = inv(0, 0);
        for (double x : inv.data()) lo = std::min(lo, x);
        cert.min_inverse_entry = lo;
        cert.inverse_nonnegative = lo >= -1e-12;
    } catch (const SingularSystemError&) {
        cert.inverse_nonnegative = false;
        cert.min_inverse_entry = -std::numeric_limits<double>::infinity();
    }
    return cert;
}

}  // namespace detail

// R = I - P^T, plus the M-matrix certificate and (for each nonempty subset of
// stations when d <= 10, sampled subsets otherwise) the principal-submatrix
// certificates r~^A >= 0.
inline ReflectionResult reflection_and_mmatrix(const Matrix& routing,
                                               std::size_t sampled_subsets = 512,
                                               std::uint64_t sample_seed = 7) {
    const std::size_t d = routing.rows();
    if (routing.cols() != d) throw ConfigError("routing matrix must be square");
    ReflectionResult out;
    out.R = Matrix::identity(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) out.R(i, j) -= routing(j, i);

    bool sign_pattern = true;
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            if (i == j && out.R(i, j) < 0.0) sign_pattern = false;
            if (i != j && out.R(i, j) > 0.0) sign_pattern = false;
        }

    try {
        const Matrix inv = inverse(out.R);
        double lo = inv(0, 0);
        for (double x : inv.data()) lo = std::min(lo, x);
        out.min_inverse_entry = lo;
        out.is_m_matrix = sign_pattern && lo >= -1e-12;
    } catch (const SingularSystemError&) {
        out.is_m_matrix = false;
        out.min_inverse_entry = -std::numeric_limits<double>::infinity();
    }

    if (d <= 10) {
        for (std::uint64_t mask = 1; mask < (1ULL << d); ++mask) {
            std::vector<std::size_t> subset;
            for (std::size_t i = 0; i < d; ++i)
                if (mask & (1ULL << i)) subset.push_back(i);
            out.submatrices.push_back(detail::certify_submatrix(out.R, subset));
        }
    } else {
        RngStream rng(sample_seed, StreamKind::generic, 0);
        for (std::size_t s = 0; s < sampled_subsets; ++s) {
            std::vector<std::size_t> subset;
            while (subset.empty())
                for (std::size_t i = 0; i < d; ++i)
                    if (rng.uniform01() < 0.5) subset.push_back(i);
            out.submatrices.push_back(detail::certify_submatrix(out.R, subset));
        }
    }
    return out;
}

}  // namespace barbench
