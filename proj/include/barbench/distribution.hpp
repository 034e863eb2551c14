#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "barbench/errors.hpp"
#include "barbench/numerics.hpp"
#include "barbench/rng.hpp"

namespace barbench {

enum class DistFamily { exponential, deterministic, erlang, hyperexp2, uniform };

inline std::string family_name(DistFamily f) {
    switch (f) {
        case DistFamily::exponential: return "exponential";
        case DistFamily::deterministic: return "deterministic";
        case DistFamily::erlang: return "erlang";
        case DistFamily::hyperexp2: return "hyperexp2";
        case DistFamily::uniform: return "uniform";
    }
    return "?";
}

// A nonnegative interarrival/service time distribution with strictly positive
// mean and no atom at zero. Rescaling the mean keeps the family and the
// squared coefficient of variation fixed, which is what the heavy-traffic
// sequence construction relies on.
class DistributionSpec {
public:
    static DistributionSpec exponential(double rate) {
        DistributionSpec d(DistFamily::exponential);
        d.rate1_ = rate;
        return d;
    }
    static DistributionSpec deterministic(double value) {
        DistributionSpec d(DistFamily::deterministic);
        d.value_ = value;
        return d;
    }
    static DistributionSpec erlang(int shape, double rate) {
        DistributionSpec d(DistFamily::erlang);
        d.shape_ = shape;
        d.rate1_ = rate;
        return d;
    }
    static DistributionSpec hyperexp2(double p, double rate1, double rate2) {
        DistributionSpec d(DistFamily::hyperexp2);
        d.p_ = p;
        d.rate1_ = rate1;
        d.rate2_ = rate2;
        return d;
    }
    static DistributionSpec uniform(double lo, double hi) {
        DistributionSpec d(DistFamily::uniform);
        d.lo_ = lo;
        d.hi_ = hi;
        return d;
    }

    // Balanced-means two-phase hyperexponential with the given mean and scv >= 1.
    static DistributionSpec hyperexp2_fit(double mean, double scv) {
        if (scv < 1.0) throw ConfigError("hyperexp2 fit requires scv >= 1");
        const double w = std::sqrt((scv - 1.0) / (scv + 1.0));
        const double p = 0.5 * (1.0 + w);
        return hyperexp2(p, 2.0 * p / mean, 2.0 * (1.0 - p) / mean);
    }

    DistFamily family() const { return family_; }
    int shape() const { return shape_; }
    double p() const { return p_; }
    double rate1() const { return rate1_; }
    double rate2() const { return rate2_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double value() const { return value_; }

    double mean() const {
        switch (family_) {
            case DistFamily::exponential: return 1.0 / rate1_;
            case DistFamily::deterministic: return value_;
            case DistFamily::erlang: return shape_ / rate1_;
            case DistFamily::hyperexp2: return p_ / rate1_ + (1.0 - p_) / rate2_;
            case DistFamily::uniform: return 0.5 * (lo_ + hi_);
        }
        return 0.0;
    }

    double variance() const {
        switch (family_) {
            case DistFamily::exponential: return 1.0 / (rate1_ * rate1_);
            case DistFamily::deterministic: return 0.0;
            case DistFamily::erlang: return shape_ / (rate1_ * rate1_);
            case DistFamily::hyperexp2: {
                const double m = mean();
                const double m2 = 2.0 * p_ / (rate1_ * rate1_) + 2.0 * (1.0 - p_) / (rate2_ * rate2_);
                return m2 - m * m;
            }
            case DistFamily::uniform: {
                const double w = hi_ - lo_;
                return w * w / 12.0;
            }
        }
        return 0.0;
    }

    double scv() const {
        const double m = mean();
        return variance() / (m * m);
    }

    // Same family and scv, new mean.
    DistributionSpec with_mean(double target_mean) const {
        if (!(target_mean > 0.0)) throw ConfigError("rescale target mean must be positive");
        DistributionSpec d = *this;
        const double s = target_mean / mean();
        switch (family_) {
            case DistFamily::exponential: d.rate1_ = rate1_ / s; break;
            case DistFamily::deterministic: d.value_ = target_mean; break;
            case DistFamily::erlang: d.rate1_ = rate1_ / s; break;
            case DistFamily::hyperexp2:
                d.rate1_ = rate1_ / s;
                d.rate2_ = rate2_ / s;
                break;
            case DistFamily::uniform:
                d.lo_ = lo_ * s;
                d.hi_ = hi_ * s;
                break;
        }
        return d;
    }

    // Each family consumes a fixed number of uniforms per draw, so paired
    // streams stay aligned across the networks of a sequence.
    double sample(RngStream& rng) const {
        switch (family_) {
            case DistFamily::exponential: return -std::log(rng.uniform01()) / rate1_;
            case DistFamily::deterministic: return value_;
            case DistFamily::erlang: {
                double s = 0.0;
                for (int i = 0; i < shape_; ++i) s -= std::log(rng.uniform01());
                return s / rate1_;
            }
            case DistFamily::hyperexp2: {
                const double branch = rng.uniform01();
                const double u = rng.uniform01();
                return -std::log(u) / (branch < p_ ? rate1_ : rate2_);
            }
            case DistFamily::uniform: return lo_ + (hi_ - lo_) * rng.uniform01();
        }
        return 0.0;
    }

    double survival(double c) const { return std::exp(log_survival(c)); }  // P(T > c)

    // log P(T > c); -inf when the support ends before c. Kept in log space
    // so the capped tail term e^{yc} P(T > c) of the truncated MGF stays
    // finite even when c is enormous (c = 1/r_n).
    double log_survival(double c) const {
        constexpr double kNegInf = -std::numeric_limits<double>::infinity();
        if (c < 0.0) return 0.0;
        switch (family_) {
            case DistFamily::exponential: return -rate1_ * c;
            case DistFamily::deterministic: return value_ > c ? 0.0 : kNegInf;
            case DistFamily::erlang: {
                // -bc + log sum_{i<k} (bc)^i / i!, summed around the peak term
                const double bc = rate1_ * c;
                if (bc == 0.0) return 0.0;
                double peak = 0.0;
                for (int i = 1; i < shape_; ++i)
                    peak = std::max(peak, i * std::log(bc) - std::lgamma(i + 1.0));
                double s = 0.0;
                for (int i = 0; i < shape_; ++i)
                    s += std::exp(i * std::log(bc) - std::lgamma(i + 1.0) - peak);
                return -bc + peak + std::log(s);
            }
            case DistFamily::hyperexp2: {
                const double la = std::log(p_) - rate1_ * c;
                const double lb = std::log(1.0 - p_) - rate2_ * c;
                const double hi = std::max(la, lb);
                if (hi == kNegInf) return kNegInf;
                return hi + std::log(std::exp(la - hi) + std::exp(lb - hi));
            }
            case DistFamily::uniform:
                if (c <= lo_) return 0.0;
                if (c >= hi_) return kNegInf;
                return std::log((hi_ - c) / (hi_ - lo_));
        }
        return kNegInf;
    }

    // e^{yc} P(T > c) without the overflow/underflow cancellation
    double capped_tail(double y, double c) const {
        const double ls = log_survival(c);
        if (ls == -std::numeric_limits<double>::infinity()) return 0.0;
        return std::exp(y * c + ls);
    }

    // E[ e^{y min(T,c)} ]. Finite for every real y since min(T,c) is bounded.
    double mgf_truncated(double y, double c) const {
        if (!(c > 0.0)) throw ConfigError("truncation level must be positive");
        switch (family_) {
            case DistFamily::exponential:
                return density_part(0, y, c) + capped_tail(y, c);
            case DistFamily::erlang:
                return density_part(0, y, c) + capped_tail(y, c);
            case DistFamily::hyperexp2:
                return density_part(0, y, c) + capped_tail(y, c);
            case DistFamily::deterministic: return std::exp(y * std::min(value_, c));
            case DistFamily::uniform: {
                const double top = std::min(hi_, c);
                double body = 0.0;
                if (top > lo_) {
                    body = integrate([&](double t) { return std::exp(y * t); }, lo_, top, 1e-12) /
                           (hi_ - lo_);
                }
                return body + capped_tail(y, c);
            }
        }
        return 0.0;
    }

    // E[ min(T,c) e^{y min(T,c)} ], the derivative of mgf_truncated in y.
    double mgf_truncated_deriv(double y, double c) const {
        switch (family_) {
            case DistFamily::exponential:
            case DistFamily::erlang:
            case DistFamily::hyperexp2:
                return density_part(1, y, c) + c * capped_tail(y, c);
            case DistFamily::deterministic: {
                const double g = std::min(value_, c);
                return g * std::exp(y * g);
            }
            case DistFamily::uniform: {
                const double top = std::min(hi_, c);
                double body = 0.0;
                if (top > lo_) {
                    body = integrate([&](double t) { return t * std::exp(y * t); }, lo_, top,
                                     1e-12) /
                           (hi_ - lo_);
                }
                return body + c * capped_tail(y, c);
            }
        }
        return 0.0;
    }

    // E[ min(T,c)^p ] for p in {1,2}.
    double truncated_moment(int p, double c) const {
        switch (family_) {
            case DistFamily::exponential:
            case DistFamily::erlang:
            case DistFamily::hyperexp2:
                return density_part(p, 0.0, c) + std::pow(c, p) * survival(c);
            case DistFamily::deterministic: return std::pow(std::min(value_, c), p);
            case DistFamily::uniform: {
                const double top = std::min(hi_, c);
                double body = 0.0;
                if (top > lo_)
                    body = (std::pow(top, p + 1) - std::pow(lo_, p + 1)) / ((p + 1) * (hi_ - lo_));
                return body + std::pow(c, p) * survival(c);
            }
        }
        return 0.0;
    }

    std::vector<std::string> invariant_violations() const {
        std::vector<std::string> out;
        auto bad = [&](bool cond, const char* msg) {
            if (cond) out.emplace_back(msg);
        };
        switch (family_) {
            case DistFamily::exponential:
                bad(!(rate1_ > 0.0) || !std::isfinite(rate1_), "exponential rate must be positive");
                break;
            case DistFamily::deterministic:
                bad(!(value_ > 0.0) || !std::isfinite(value_), "deterministic value must be positive");
                break;
            case DistFamily::erlang:
                bad(shape_ < 1, "erlang shape must be >= 1");
                bad(!(rate1_ > 0.0) || !std::isfinite(rate1_), "erlang rate must be positive");
                break;
            case DistFamily::hyperexp2:
                bad(!(p_ >= 0.0 && p_ <= 1.0), "hyperexp2 branch probability must be in [0,1]");
                bad(!(rate1_ > 0.0) || !(rate2_ > 0.0), "hyperexp2 rates must be positive");
                break;
            case DistFamily::uniform:
                bad(!(lo_ >= 0.0), "uniform lower endpoint must be nonnegative");
                bad(!(hi_ > lo_), "uniform needs lo < hi");
                break;
        }
        if (out.empty() && !(mean() > 0.0 && std::isfinite(mean())))
            out.emplace_back("mean must be finite and positive");
        return out;
    }

    std::string describe() const {
        char buf[128];
        switch (family_) {
            case DistFamily::exponential:
                std::snprintf(buf, sizeof buf, "exponential(rate=%g)", rate1_);
                break;
            case DistFamily::deterministic:
                std::snprintf(buf, sizeof buf, "deterministic(%g)", value_);
                break;
            case DistFamily::erlang:
                std::snprintf(buf, sizeof buf, "erlang(k=%d, rate=%g)", shape_, rate1_);
                break;
            case DistFamily::hyperexp2:
                std::snprintf(buf, sizeof buf, "hyperexp2(p=%g, rates=%g,%g)", p_, rate1_, rate2_);
                break;
            case DistFamily::uniform:
                std::snprintf(buf, sizeof buf, "uniform[%g, %g]", lo_, hi_);
                break;
        }
        return buf;
    }

private:
    explicit DistributionSpec(DistFamily f) : family_(f) {}

    // int_0^c t^p f(t) e^{yt} dt for the gamma-mixture families.
    double density_part(int p, double y, double c) const {
        switch (family_) {
            case DistFamily::exponential:
                return rate1_ * truncated_power_exp_integral(p, rate1_ - y, c);
            case DistFamily::erlang: {
                double coef = std::pow(rate1_, shape_);  // rate^k / (k-1)!
                for (int i = 2; i < shape_ + 1; ++i) coef /= (i - 1);
                return coef * truncated_power_exp_integral(shape_ - 1 + p, rate1_ - y, c);
            }
            case DistFamily::hyperexp2:
                return p_ * rate1_ * truncated_power_exp_integral(p, rate1_ - y, c) +
                       (1.0 - p_) * rate2_ * truncated_power_exp_integral(p, rate2_ - y, c);
            default: return 0.0;
        }
    }

    DistFamily family_;
    int shape_ = 1;
    double p_ = 0.0;
    double rate1_ = 0.0;
    double rate2_ = 0.0;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double value_ = 0.0;
};

}  // namespace barbench
