#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "barbench/network.hpp"
#include "barbench/statistics.hpp"

namespace barbench {

// State of the Markov process X = (L, R_e, R_s): queue lengths (including the
// customer in service), residual external interarrival times (identically 0
// for stations without external arrivals), and residual service times.
// residual_service[j] stays strictly positive; while a station is idle it
// holds the next customer's full service time, frozen.
struct MarkovState {
    std::vector<std::int32_t> queue;
    Vec residual_arrival;
    Vec residual_service;
    double clock = 0.0;
};

struct Event {
    enum class Kind { external_arrival, departure };
    Kind kind;
    std::size_t station;
    int routed_to = -1;  // departure target station, -1 for exit / arrivals
};

struct NetworkRngs {
    std::vector<RngStream> arrival;
    std::vector<RngStream> service;
    std::vector<RngStream> routing;

    NetworkRngs(std::uint64_t root_seed, std::size_t d) {
        for (std::size_t i = 0; i < d; ++i) {
            arrival.emplace_back(root_seed, StreamKind::arrival, i);
            service.emplace_back(root_seed, StreamKind::service, i);
            routing.emplace_back(root_seed, StreamKind::routing, i);
        }
    }
};

inline MarkovState initial_state(const NetworkSpec& net, NetworkRngs& rngs) {
    const std::size_t d = net.station_count;
    MarkovState st;
    st.queue.assign(d, 0);
    st.residual_arrival.assign(d, 0.0);
    st.residual_service.assign(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
        if (net.is_external(i)) st.residual_arrival[i] = net.arrival[i]->sample(rngs.arrival[i]);
        st.residual_service[i] = net.service[i].sample(rngs.service[i]);
    }
    return st;
}

// Time until the next event: external timers always run, service timers only
// at busy stations.
inline double next_event_in(const MarkovState& st, const NetworkSpec& net) {
    double dwell = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < net.station_count; ++i) {
        if (net.is_external(i)) dwell = std::min(dwell, st.residual_arrival[i]);
        if (st.queue[i] > 0) dwell = std::min(dwell, st.residual_service[i]);
    }
    return dwell;
}

// Advances to the next event epoch and applies every event due there.
// Simultaneous events are applied in a fixed feasible order: external
// arrivals by ascending station index, then departures by ascending station
// index (an arrival to an empty station precedes its departure).
inline double advance(MarkovState& st, const NetworkSpec& net, NetworkRngs& rngs,
                      std::vector<Event>& events_out) {
    const std::size_t d = net.station_count;
    events_out.clear();
    const double dwell = next_event_in(st, net);

    for (std::size_t i = 0; i < d; ++i) {
        if (net.is_external(i)) st.residual_arrival[i] -= dwell;
        if (st.queue[i] > 0) st.residual_service[i] -= dwell;
    }
    st.clock += dwell;

    for (std::size_t i = 0; i < d; ++i) {
        if (!net.is_external(i) || st.residual_arrival[i] > 0.0) continue;
        st.queue[i] += 1;
        st.residual_arrival[i] = net.arrival[i]->sample(rngs.arrival[i]);
        events_out.push_back({Event::Kind::external_arrival, i, -1});
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (st.residual_service[j] > 0.0) continue;
        assert(st.queue[j] >= 1 && "departure from an empty station");
        st.queue[j] -= 1;
        int target = -1;
        double u = rngs.routing[j].uniform01();
        for (std::size_t k = 0; k < d; ++k) {
            u -= net.routing(j, k);
            if (u < 0.0) {
                target = static_cast<int>(k);
                break;
            }
        }
        if (target >= 0) st.queue[target] += 1;
        st.residual_service[j] = net.service[j].sample(rngs.service[j]);
        events_out.push_back({Event::Kind::departure, j, target});
    }
    return dwell;
}

struct SimOptions {
    double horizon = 0.0;
    double warmup = -1.0;  // < 0 means the default, 10% of horizon
    std::uint64_t seed = 1;
    int batches = 32;

    double resolved_warmup() const { return warmup < 0.0 ? 0.1 * horizon : warmup; }
};

// Post-warmup path counters. routed[k][j] counts customers routed k -> j.
struct PathCounters {
    std::vector<long long> arrivals;
    std::vector<long long> departures;
    std::vector<std::vector<long long>> routed;
    std::vector<long long> service_draws;
    Vec busy_time;
    Vec idle_time;
    std::vector<std::int32_t> queue_at_start;  // L at the end of warmup
    std::vector<std::int32_t> queue_at_end;    // L at the horizon
    std::vector<std::vector<long long>> batch_arrivals;    // [batch][station]
    std::vector<std::vector<long long>> batch_departures;  // [batch][station]
};

// Dwell-weighted stationary sample. Snapshots are stored flat (one row per
// inter-event interval, clipped to [warmup, horizon]); the row holds the
// state at the start of the interval and the interval length as its weight.
class StationaryEstimate {
public:
    std::size_t stations = 0;
    double horizon = 0.0;
    double warmup = 0.0;
    std::uint64_t seed = 0;
    int batches = 0;
    bool stability_warning = false;
    Vec rho;

    std::vector<std::int32_t> queue_flat;  // stations * size()
    std::vector<double> residual_arrival_flat;
    std::vector<double> residual_service_flat;
    std::vector<double> dwell;
    std::vector<std::size_t> batch_first;  // batches+1 row indices

    std::size_t size() const { return dwell.size(); }
    double total_weight() const { return total_weight_; }

    struct Row {
        const std::int32_t* queue;
        const double* u;
        const double* v;
        double weight;
    };

    Row row(std::size_t m) const {
        return {queue_flat.data() + m * stations, residual_arrival_flat.data() + m * stations,
                residual_service_flat.data() + m * stations, dwell[m]};
    }

    void push_row(const MarkovState& st, double shift, double weight) {
        for (std::size_t i = 0; i < stations; ++i) {
            queue_flat.push_back(st.queue[i]);
            double u = st.residual_arrival[i];
            if (u > 0.0) u -= shift;  // external timers run during the skipped part
            residual_arrival_flat.push_back(u);
            double v = st.residual_service[i];
            if (st.queue[i] > 0) v -= shift;
            residual_service_flat.push_back(v);
        }
        dwell.push_back(weight);
        total_weight_ += weight;
    }

    void finalize_batches() {
        batch_first.assign(1, 0);
        const double span = total_weight_ / batches;
        double cum = 0.0;
        for (std::size_t m = 0; m < size(); ++m) {
            while (batch_first.size() < static_cast<std::size_t>(batches) &&
                   cum >= span * static_cast<double>(batch_first.size()))
                batch_first.push_back(m);
            cum += dwell[m];
        }
        while (batch_first.size() < static_cast<std::size_t>(batches) + 1)
            batch_first.push_back(size());
        batch_first.back() = size();
    }

    // Time-weighted marginal of station j's queue length.
    IntHistogram marginal(std::size_t j) const {
        IntHistogram h;
        for (std::size_t m = 0; m < size(); ++m) h.add(queue_flat[m * stations + j], dwell[m]);
        return h;
    }

    double time_fraction_zero(std::size_t j) const {
        double z = 0.0;
        for (std::size_t m = 0; m < size(); ++m)
            if (queue_flat[m * stations + j] == 0) z += dwell[m];
        return z / total_weight_;
    }

    // Per-batch (sum of f * weight, sum of weight) for a row functional.
    template <typename F>
    void batch_sums(F&& f, std::vector<double>& sums, std::vector<double>& weights) const {
        sums.assign(batches, 0.0);
        weights.assign(batches, 0.0);
        for (int b = 0; b < batches; ++b) {
            double s = 0.0, w = 0.0;
            for (std::size_t m = batch_first[b]; m < batch_first[b + 1]; ++m) {
                s += f(m) * dwell[m];
                w += dwell[m];
            }
            sums[b] = s;
            weights[b] = w;
        }
    }

private:
    double total_weight_ = 0.0;
};

struct SimulationResult {
    StationaryEstimate estimate;
    PathCounters counters;
};

inline SimulationResult simulate(const NetworkSpec& net, const SimOptions& opts) {
    require_well_formed(net);
    if (!(opts.horizon > 0.0)) throw ConfigError("horizon must be positive");
    const double warmup = opts.resolved_warmup();
    if (warmup < 0.0 || warmup >= opts.horizon)
        throw ConfigError("warmup must lie in [0, horizon)");
    if (opts.batches < 2) throw ConfigError("need at least 2 batches");

    const std::size_t d = net.station_count;
    SimulationResult out;
    StationaryEstimate& est = out.estimate;
    est.stations = d;
    est.horizon = opts.horizon;
    est.warmup = warmup;
    est.seed = opts.seed;
    est.batches = opts.batches;
    est.rho = utilizations(net);
    for (double r : est.rho)
        if (r >= 1.0) est.stability_warning = true;

    PathCounters& ctr = out.counters;
    ctr.arrivals.assign(d, 0);
    ctr.departures.assign(d, 0);
    ctr.service_draws.assign(d, 0);
    ctr.routed.assign(d, std::vector<long long>(d, 0));
    ctr.busy_time.assign(d, 0.0);
    ctr.idle_time.assign(d, 0.0);
    ctr.batch_arrivals.assign(opts.batches, std::vector<long long>(d, 0));
    ctr.batch_departures.assign(opts.batches, std::vector<long long>(d, 0));

    const double window = opts.horizon - warmup;
    const double batch_span = window / opts.batches;

    NetworkRngs rngs(opts.seed, d);
    MarkovState st = initial_state(net, rngs);
    std::vector<Event> events;
    bool captured_start = false;

    double event_rate = 0.0;
    for (double r : net.external_rates()) event_rate += r;
    for (double r : net.service_rates()) event_rate += r;
    const std::size_t approx_rows =
        static_cast<std::size_t>(std::min(5e8, opts.horizon * event_rate + 64));
    est.dwell.reserve(approx_rows);
    est.queue_flat.reserve(approx_rows * d);
    est.residual_arrival_flat.reserve(approx_rows * d);
    est.residual_service_flat.reserve(approx_rows * d);

    while (st.clock < opts.horizon) {
        const double dwell = next_event_in(st, net);
        const double start = std::max(st.clock, warmup);
        const double end = std::min(st.clock + dwell, opts.horizon);
        if (end > start) {
            if (!captured_start) {
                ctr.queue_at_start = st.queue;
                captured_start = true;
            }
            est.push_row(st, start - st.clock, end - start);
            for (std::size_t j = 0; j < d; ++j) {
                if (st.queue[j] > 0)
                    ctr.busy_time[j] += end - start;
                else
                    ctr.idle_time[j] += end - start;
            }
        }
        if (st.clock + dwell >= opts.horizon) break;

        advance(st, net, rngs, events);
        // events at exactly the warmup epoch are already folded into
        // queue_at_start, so only count once the first row is captured
        if (captured_start && st.clock >= warmup) {
            int b = static_cast<int>((st.clock - warmup) / batch_span);
            b = std::min(b, opts.batches - 1);
            for (const Event& ev : events) {
                if (ev.kind == Event::Kind::external_arrival) {
                    ctr.arrivals[ev.station] += 1;
                    ctr.batch_arrivals[b][ev.station] += 1;
                } else {
                    ctr.departures[ev.station] += 1;
                    ctr.batch_departures[b][ev.station] += 1;
                    ctr.service_draws[ev.station] += 1;
                    if (ev.routed_to >= 0) ctr.routed[ev.station][ev.routed_to] += 1;
                }
            }
        }
    }
    ctr.queue_at_end = st.queue;
    if (!captured_start) ctr.queue_at_start.assign(d, 0);
    est.finalize_batches();
    return out;
}

struct FlowCheckRow {
    std::string name;
    std::size_t station = 0;
    double estimate = 0.0;
    double se = 0.0;
    double target = 0.0;
    double z = 0.0;  // |estimate - target| in SE units
};

struct FlowReport {
    std::vector<FlowCheckRow> rows;
    std::vector<long long> replay_residual;  // per station; exact zero expected
    bool replay_exact = false;

    double max_z() const {
        double z = 0.0;
        for (const auto& r : rows) z = std::max(z, r.z);
        return z;
    }
};

// Checks empirical arrival/departure rates against the traffic equation,
// idle fractions against 1 - rho, and replays the queue-dynamics identity
// L(end) = L(start) + E - D + routed exactly.
inline FlowReport flow_checks(const StationaryEstimate& est, const PathCounters& ctr,
                              const NetworkSpec& net) {
    const std::size_t d = net.station_count;
    const Vec lambda_e = net.external_rates();
    const Vec lambda_a = solve_traffic_equation(lambda_e, net.routing);
    const Vec lambda_s = net.service_rates();
    const double window = est.horizon - est.warmup;
    const int B = est.batches;
    const double batch_span = window / B;

    FlowReport report;
    auto rate_row = [&](const char* name, std::size_t j, const std::vector<std::vector<long long>>& per_batch,
                        double target) {
        std::vector<double> rates(B);
        for (int b = 0; b < B; ++b) rates[b] = per_batch[b][j] / batch_span;
        const MeanSe ms = batch_stats(rates);
        FlowCheckRow row{name, j, ms.mean, ms.se, target, 0.0};
        row.z = ms.se > 0.0 ? std::abs(ms.mean - target) / ms.se
                            : (ms.mean == target ? 0.0 : std::numeric_limits<double>::infinity());
        report.rows.push_back(row);
    };

    for (std::size_t i = 0; i < d; ++i)
        if (net.is_external(i)) rate_row("arrival_rate", i, ctr.batch_arrivals, lambda_e[i]);
    for (std::size_t j = 0; j < d; ++j)
        rate_row("departure_rate", j, ctr.batch_departures, lambda_a[j]);

    // idle fraction per batch from the dwell-weighted snapshots
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> sums, weights, fractions(B);
        est.batch_sums([&](std::size_t m) { return est.queue_flat[m * est.stations + j] == 0 ? 1.0 : 0.0; },
                       sums, weights);
        for (int b = 0; b < B; ++b) fractions[b] = weights[b] > 0.0 ? sums[b] / weights[b] : 0.0;
        const MeanSe ms = batch_stats(fractions);
        FlowCheckRow row{"idle_fraction", j, ms.mean, ms.se, 1.0 - lambda_a[j] / lambda_s[j], 0.0};
        row.z = ms.se > 0.0 ? std::abs(ms.mean - row.target) / ms.se
                            : std::numeric_limits<double>::infinity();
        report.rows.push_back(row);
    }

    report.replay_residual.assign(d, 0);
    report.replay_exact = true;
    for (std::size_t j = 0; j < d; ++j) {
        long long routed_in = 0;
        for (std::size_t k = 0; k < d; ++k) routed_in += ctr.routed[k][j];
        const long long expected = ctr.queue_at_start[j] + ctr.arrivals[j] - ctr.departures[j] + routed_in;
        report.replay_residual[j] = ctr.queue_at_end[j] - expected;
        if (report.replay_residual[j] != 0) report.replay_exact = false;
        if (ctr.service_draws[j] != ctr.departures[j]) report.replay_exact = false;
    }
    return report;
}

}  // namespace barbench
