#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "barbench/errors.hpp"

namespace barbench {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

// Batch-means estimate: treat per-batch averages as roughly independent.
inline MeanSe batch_stats(const std::vector<double>& batch_values) {
    const std::size_t n = batch_values.size();
    if (n < 2) throw ConfigError("batch means need at least 2 batches");
    double m = 0.0;
    for (double v : batch_values) m += v;
    m /= static_cast<double>(n);
    double s2 = 0.0;
    for (double v : batch_values) s2 += (v - m) * (v - m);
    s2 /= static_cast<double>(n - 1);
    return {m, std::sqrt(s2 / static_cast<double>(n))};
}

// Ratio of means R = sum(num) / sum(den) with a delta-method standard error
// from per-batch means: influence xi_b = (num_b - R den_b) / mean(den).
inline MeanSe ratio_batch_stats(const std::vector<double>& batch_num,
                                const std::vector<double>& batch_den) {
    const std::size_t n = batch_num.size();
    if (n != batch_den.size() || n < 2) throw ConfigError("ratio batch stats: bad batch lists");
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        num += batch_num[b];
        den += batch_den[b];
    }
    if (den <= 0.0) throw NumericError("ratio estimator: denominator mass is zero");
    const double ratio = num / den;
    const double dbar = den / static_cast<double>(n);
    std::vector<double> influence(n);
    for (std::size_t b = 0; b < n; ++b)
        influence[b] = (batch_num[b] - ratio * batch_den[b]) / dbar;
    const MeanSe infl = batch_stats(influence);
    return {ratio, infl.se};
}

// Weighted atoms sorted by value; the building block for the distances below.
struct WeightedAtoms {
    std::vector<std::pair<double, double>> atoms;  // (value, weight), sorted
    double total = 0.0;

    static WeightedAtoms from(std::vector<std::pair<double, double>> raw) {
        std::sort(raw.begin(), raw.end());
        WeightedAtoms out;
        out.atoms.reserve(raw.size());
        for (const auto& [v, w] : raw) {
            if (w <= 0.0) continue;
            if (!out.atoms.empty() && out.atoms.back().first == v)
                out.atoms.back().second += w;
            else
                out.atoms.emplace_back(v, w);
            out.total += w;
        }
        return out;
    }
};

// sup_x |F_emp(x) - F(x)| against a continuous reference cdf.
inline double ks_vs_continuous_cdf(const WeightedAtoms& sample,
                                   const std::function<double(double)>& cdf) {
    if (sample.atoms.empty()) throw ConfigError("ks: empty sample");
    double best = 0.0, cum = 0.0;
    for (const auto& [v, w] : sample.atoms) {
        const double f = cdf(v);
        best = std::max(best, std::abs(f - cum / sample.total));
        cum += w;
        best = std::max(best, std::abs(cum / sample.total - f));
    }
    return best;
}

// Same statistic, after spreading each atom uniformly over [x, x + cell).
// This is the natural comparison for a lattice-valued law (cell = lattice
// spacing) against a continuous reference: the plain statistic is dominated
// by the atom masses themselves.
inline double ks_cell_smoothed_vs_cdf(const WeightedAtoms& sample, double cell,
                                      const std::function<double(double)>& cdf) {
    if (sample.atoms.empty()) throw ConfigError("ks: empty sample");
    double best = 0.0, cum = 0.0;
    for (const auto& [v, w] : sample.atoms) {
        // smoothed cdf equals cum/total at v and (cum+w)/total at v+cell,
        // linear in between; compare at both knots and the midpoint
        const double lo = cum / sample.total;
        const double hi = (cum + w) / sample.total;
        best = std::max(best, std::abs(cdf(v) - lo));
        best = std::max(best, std::abs(cdf(v + cell) - hi));
        best = std::max(best, std::abs(cdf(v + 0.5 * cell) - 0.5 * (lo + hi)));
        cum += w;
    }
    return best;
}

// sup over the union of lattice points of |F_emp - F| (right values); both
// laws live on the same lattice {0, step, 2 step, ...}.
inline double ks_lattice_vs_cdf(const WeightedAtoms& sample, double step,
                                const std::function<double(double)>& cdf) {
    if (sample.atoms.empty()) throw ConfigError("ks: empty sample");
    const double vmax = sample.atoms.back().first;
    double best = 0.0, cum = 0.0;
    std::size_t idx = 0;
    for (double v = 0.0; v <= vmax + 0.5 * step; v += step) {
        while (idx < sample.atoms.size() && sample.atoms[idx].first <= v + 0.5 * step) {
            cum += sample.atoms[idx].second;
            ++idx;
        }
        best = std::max(best, std::abs(cum / sample.total - cdf(v)));
    }
    return best;
}

inline double ks_two_sample(const WeightedAtoms& a, const WeightedAtoms& b) {
    if (a.atoms.empty() || b.atoms.empty()) throw ConfigError("ks: empty sample");
    double best = 0.0, ca = 0.0, cb = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.atoms.size() || j < b.atoms.size()) {
        double v;
        if (j >= b.atoms.size() || (i < a.atoms.size() && a.atoms[i].first <= b.atoms[j].first))
            v = a.atoms[i].first;
        else
            v = b.atoms[j].first;
        while (i < a.atoms.size() && a.atoms[i].first <= v) ca += a.atoms[i++].second;
        while (j < b.atoms.size() && b.atoms[j].first <= v) cb += b.atoms[j++].second;
        best = std::max(best, std::abs(ca / a.total - cb / b.total));
    }
    return best;
}

// 1-Wasserstein distance between two weighted empirical laws: both cdfs are
// step functions, so the integral of |F_a - F_b| is an exact sum.
inline double w1_two_sample(const WeightedAtoms& a, const WeightedAtoms& b) {
    if (a.atoms.empty() || b.atoms.empty()) throw ConfigError("w1: empty sample");
    std::vector<double> values;
    values.reserve(a.atoms.size() + b.atoms.size());
    for (const auto& [v, w] : a.atoms) values.push_back(v);
    for (const auto& [v, w] : b.atoms) values.push_back(v);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    double ca = 0.0, cb = 0.0, total = 0.0;
    std::size_t i = 0, j = 0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        const double v = values[k];
        while (i < a.atoms.size() && a.atoms[i].first <= v) ca += a.atoms[i++].second;
        while (j < b.atoms.size() && b.atoms[j].first <= v) cb += b.atoms[j++].second;
        total += std::abs(ca / a.total - cb / b.total) * (values[k + 1] - v);
    }
    return total;
}

// Weighted histogram over nonnegative integers (queue length marginals).
struct IntHistogram {
    std::vector<double> weight;
    double total = 0.0;

    void add(long long k, double w) {
        if (k < 0) throw NumericError("negative count in histogram");
        if (static_cast<std::size_t>(k) >= weight.size()) weight.resize(k + 1, 0.0);
        weight[k] += w;
        total += w;
    }

    WeightedAtoms atoms(double scale = 1.0) const {
        std::vector<std::pair<double, double>> raw;
        for (std::size_t k = 0; k < weight.size(); ++k)
            if (weight[k] > 0.0) raw.emplace_back(scale * static_cast<double>(k), weight[k]);
        return WeightedAtoms::from(std::move(raw));
    }
};

// Weighted histogram with fixed-width bins (continuous marginals). Atoms are
// reported at bin left edges, so cell-smoothed comparisons line up exactly.
struct BinnedHistogram {
    double bin_width = 1e-3;
    std::vector<double> weight;
    double total = 0.0;

    void add(double x, double w) {
        const long long k = static_cast<long long>(std::floor(x / bin_width));
        const long long kk = std::max(0LL, k);
        if (static_cast<std::size_t>(kk) >= weight.size()) weight.resize(kk + 1, 0.0);
        weight[kk] += w;
        total += w;
    }

    WeightedAtoms atoms() const {
        std::vector<std::pair<double, double>> raw;
        for (std::size_t k = 0; k < weight.size(); ++k)
            if (weight[k] > 0.0) raw.emplace_back(bin_width * static_cast<double>(k), weight[k]);
        return WeightedAtoms::from(std::move(raw));
    }
};

}  // namespace barbench
