#include "curbflow/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <queue>
#include <random>

namespace curbflow::sim {

namespace {

constexpr int kHopHistogramSize = 64; // last bucket collects the tail

double student_t_975(int df) {
    static constexpr double table[] = {
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
        2.201,  2.179, 2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086,
        2.080,  2.074, 2.069, 2.064, 2.060, 2.056, 2.052, 2.048, 2.045, 2.042};
    if (df < 1) return 0.0;
    if (df <= 30) return table[df - 1];
    return 1.96;
}

struct Event {
    double time;
    std::uint64_t seq;
    enum Kind { exogenous_arrival, retry, departure } kind;
    int block;
    int driver; // retry only
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const {
        return a.time > b.time || (a.time == b.time && a.seq > b.seq);
    }
};

class Simulation {
public:
    Simulation(const net::StreetGraph& graph, const std::vector<net::BlockFace>& blocks,
               const net::ResolvedRouting& routing, const SimConfig& config)
        : blocks_(blocks), routing_(routing), config_(config), rng_(config.seed) {
        n_ = static_cast<int>(graph.nodes.size());
        for (const auto& b : blocks_) {
            if (!b.lambda) {
                throw ValidationError("simulation needs an exogenous rate for block '" + b.id +
                                      "'");
            }
            total_stalls_ += b.params.k;
        }
        out_edges_.resize(n_);
        for (int e = 0; e < static_cast<int>(routing_.edge_from.size()); ++e) {
            out_edges_[routing_.edge_from[e]].push_back(e);
        }
        busy_.assign(n_, 0);
        last_change_.assign(n_, 0.0);
        const int nb = std::max(1, config_.batches);
        occupancy_batches_.assign(n_, std::vector<double>(nb, 0.0));
        rejections_.assign(n_, 0);
        arrivals_seen_.assign(n_, 0);
        edge_counts_.assign(routing_.edge_from.size(), 0);
    }

    SimResult run() {
        const double warmup = config_.warmup_hours;
        const double horizon = config_.horizon_hours;
        for (int i = 0; i < n_; ++i) {
            if (*blocks_[i].lambda > 0.0) schedule_exogenous(i, 0.0);
        }

        double stop_time = horizon;
        bool overloaded = false;
        while (!events_.empty() && events_.top().time <= horizon) {
            const Event ev = events_.top();
            events_.pop();
            now_ = ev.time;
            switch (ev.kind) {
            case Event::exogenous_arrival: {
                schedule_exogenous(ev.block, now_);
                const int driver = static_cast<int>(driver_hops_.size());
                driver_hops_.push_back(0);
                ++total_arrivals_;
                handle_arrival(driver, ev.block);
                break;
            }
            case Event::retry:
                --pending_retries_;
                handle_arrival(ev.driver, ev.block);
                break;
            case Event::departure:
                advance_occupancy(ev.block, now_);
                --busy_[ev.block];
                break;
            }
            if (pending_retries_ > config_.overload_factor * total_stalls_) {
                overloaded = true;
                stop_time = now_;
                break;
            }
        }

        for (int i = 0; i < n_; ++i) advance_occupancy(i, stop_time);

        SimResult result;
        result.overloaded = overloaded;
        result.measured_hours = std::max(0.0, stop_time - warmup);
        result.total_arrivals = total_arrivals_;
        result.total_parked = total_parked_;
        result.circulating_at_end = pending_retries_;
        result.hop_capped = hop_capped_;
        result.exited_at_sink = exited_at_sink_;
        result.hop_histogram = hop_histogram_;

        const double window = result.measured_hours;
        result.blocks.resize(n_);
        const int nb = std::max(1, config_.batches);
        const double full_batch = (horizon - warmup) / nb;
        for (int i = 0; i < n_; ++i) {
            BlockStats& st = result.blocks[i];
            if (window <= 0.0) continue;
            double integral = 0.0;
            for (double v : occupancy_batches_[i]) integral += v;
            st.occupancy = integral / (window * blocks_[i].params.k);
            st.rejection_rate = rejections_[i] / window;
            st.arrival_rate = arrivals_seen_[i] / window;

            // Batch-means CI over the batches fully inside the measured window.
            std::vector<double> means;
            for (int b = 0; b < nb; ++b) {
                const double end = warmup + (b + 1) * full_batch;
                if (end > stop_time + 1e-9) break;
                means.push_back(occupancy_batches_[i][b] / (full_batch * blocks_[i].params.k));
            }
            if (means.size() >= 2) {
                const auto m = static_cast<double>(means.size());
                double mean = 0.0;
                for (double v : means) mean += v;
                mean /= m;
                double var = 0.0;
                for (double v : means) var += (v - mean) * (v - mean);
                var /= (m - 1.0);
                st.occupancy_half_width =
                    student_t_975(static_cast<int>(m) - 1) * std::sqrt(var / m);
            }
        }
        result.edge_flow.resize(edge_counts_.size());
        for (size_t e = 0; e < edge_counts_.size(); ++e) {
            result.edge_flow[e] = window > 0.0 ? edge_counts_[e] / window : 0.0;
        }
        return result;
    }

private:
    void schedule_exogenous(int block, double now) {
        std::exponential_distribution<double> gap(*blocks_[block].lambda);
        push({now + gap(rng_), next_seq_++, Event::exogenous_arrival, block, -1});
    }

    void push(Event ev) { events_.push(ev); }

    double draw_service(int block) {
        const double mean = 1.0 / blocks_[block].params.mu;
        switch (config_.service.kind) {
        case ServiceKind::exponential: {
            std::exponential_distribution<double> d(blocks_[block].params.mu);
            return d(rng_);
        }
        case ServiceKind::deterministic:
            return mean;
        case ServiceKind::lognormal: {
            const double cv = config_.service.cv;
            const double sigma2 = std::log1p(cv * cv);
            std::lognormal_distribution<double> d(std::log(mean) - 0.5 * sigma2,
                                                  std::sqrt(sigma2));
            return d(rng_);
        }
        }
        return mean;
    }

    void record_completion(int driver) {
        const int hops = std::min(driver_hops_[driver], kHopHistogramSize - 1);
        ++hop_histogram_[hops];
    }

    void handle_arrival(int driver, int block) {
        if (now_ > config_.warmup_hours) ++arrivals_seen_[block];
        if (busy_[block] < blocks_[block].params.k) {
            advance_occupancy(block, now_);
            ++busy_[block];
            ++total_parked_;
            record_completion(driver);
            push({now_ + draw_service(block), next_seq_++, Event::departure, block, -1});
            return;
        }
        // Rejected: hop to a neighbor, or leave at a sink.
        if (now_ > config_.warmup_hours) ++rejections_[block];
        ++driver_hops_[driver];
        if (config_.max_hops && driver_hops_[driver] >= *config_.max_hops) {
            ++hop_capped_;
            record_completion(driver);
            return;
        }
        const auto& out = out_edges_[block];
        if (out.empty()) {
            ++exited_at_sink_;
            record_completion(driver);
            return;
        }
        const int e = pick_edge(out);
        if (now_ > config_.warmup_hours) ++edge_counts_[e];
        ++pending_retries_;
        push({now_ + config_.edge_delay_hours, next_seq_++, Event::retry, routing_.edge_to[e],
              driver});
    }

    int pick_edge(const std::vector<int>& out) {
        if (out.size() == 1) return out[0];
        double total = 0.0;
        for (int e : out) total += routing_.edge_weight[e];
        std::uniform_real_distribution<double> uni(0.0, total);
        double draw = uni(rng_);
        for (int e : out) {
            draw -= routing_.edge_weight[e];
            if (draw <= 0.0) return e;
        }
        return out.back();
    }

    // Adds busy-time since the last state change into the per-batch integrals,
    // splitting the segment at batch boundaries.
    void advance_occupancy(int block, double now) {
        double t0 = last_change_[block];
        last_change_[block] = now;
        if (busy_[block] == 0) return;
        const double warmup = config_.warmup_hours;
        const double horizon = config_.horizon_hours;
        t0 = std::max(t0, warmup);
        const double t1 = std::min(now, horizon);
        if (t0 >= t1) return;
        const int nb = std::max(1, config_.batches);
        const double len = (horizon - warmup) / nb;
        int b = std::min(nb - 1, static_cast<int>((t0 - warmup) / len));
        double cursor = t0;
        while (cursor < t1) {
            const double batch_end = std::min(warmup + (b + 1) * len, horizon);
            const double seg_end = std::min(t1, batch_end);
            occupancy_batches_[block][b] += busy_[block] * (seg_end - cursor);
            cursor = seg_end;
            b = std::min(b + 1, nb - 1);
        }
    }

    const std::vector<net::BlockFace>& blocks_;
    const net::ResolvedRouting& routing_;
    const SimConfig& config_;
    std::mt19937_64 rng_;
    std::priority_queue<Event, std::vector<Event>, EventLater> events_;
    std::uint64_t next_seq_ = 0;
    double now_ = 0.0;
    int n_ = 0;
    int total_stalls_ = 0;

    std::vector<std::vector<int>> out_edges_;
    std::vector<int> busy_;
    std::vector<double> last_change_;
    std::vector<std::vector<double>> occupancy_batches_;
    std::vector<std::int64_t> rejections_, arrivals_seen_, edge_counts_;
    std::vector<int> driver_hops_;
    std::vector<std::int64_t> hop_histogram_ = std::vector<std::int64_t>(kHopHistogramSize, 0);

    std::int64_t total_arrivals_ = 0;
    std::int64_t total_parked_ = 0;
    std::int64_t pending_retries_ = 0;
    std::int64_t hop_capped_ = 0;
    std::int64_t exited_at_sink_ = 0;
};

} // namespace

void SimConfig::validate() const {
    if (!(horizon_hours > warmup_hours) || warmup_hours < 0.0) {
        throw ValidationError("simulation horizon must exceed the warmup and warmup must be >= 0");
    }
    if (!(edge_delay_hours > 0.0)) {
        throw ValidationError("edge delay must be positive (zero would allow infinitely many "
                              "hops at one instant)");
    }
    if (replications < 1) {
        throw ValidationError("replications must be >= 1");
    }
    if (max_hops && *max_hops < 1) {
        throw ValidationError("max_hops must be >= 1 when set");
    }
}

SimResult run(const net::StreetGraph& graph, const std::vector<net::BlockFace>& blocks,
              const SimConfig& config) {
    config.validate();
    const net::ResolvedRouting routing = net::resolve_routing(graph);
    if (blocks.size() != graph.nodes.size()) {
        throw ValidationError("simulation needs one block record per graph node");
    }
    Simulation simulation(graph, blocks, routing, config);
    SimResult result = simulation.run();
    result.replications = 1;
    return result;
}

SimResult replicate(const net::StreetGraph& graph, const std::vector<net::BlockFace>& blocks,
                    const SimConfig& config) {
    config.validate();
    if (config.replications == 1) return run(graph, blocks, config);

    std::vector<std::future<SimResult>> futures;
    futures.reserve(config.replications);
    for (int r = 0; r < config.replications; ++r) {
        SimConfig rep = config;
        rep.seed = config.seed + static_cast<std::uint64_t>(r);
        rep.replications = 1;
        futures.push_back(std::async(std::launch::async,
                                     [&graph, &blocks, rep] { return run(graph, blocks, rep); }));
    }
    std::vector<SimResult> runs;
    runs.reserve(config.replications);
    for (auto& f : futures) runs.push_back(f.get());

    SimResult agg = runs.front();
    const auto r = static_cast<double>(config.replications);
    const int n = static_cast<int>(agg.blocks.size());
    for (int i = 0; i < n; ++i) {
        double mean = 0.0, rej = 0.0, arr = 0.0;
        for (const auto& one : runs) {
            mean += one.blocks[i].occupancy;
            rej += one.blocks[i].rejection_rate;
            arr += one.blocks[i].arrival_rate;
        }
        mean /= r;
        rej /= r;
        arr /= r;
        double var = 0.0;
        for (const auto& one : runs) {
            var += (one.blocks[i].occupancy - mean) * (one.blocks[i].occupancy - mean);
        }
        var /= (r - 1.0);
        agg.blocks[i].occupancy = mean;
        agg.blocks[i].occupancy_half_width =
            student_t_975(config.replications - 1) * std::sqrt(var / r);
        agg.blocks[i].rejection_rate = rej;
        agg.blocks[i].arrival_rate = arr;
    }
    for (size_t e = 0; e < agg.edge_flow.size(); ++e) {
        double mean = 0.0;
        for (const auto& one : runs) mean += one.edge_flow[e];
        agg.edge_flow[e] = mean / r;
    }
    agg.total_arrivals = agg.total_parked = agg.circulating_at_end = 0;
    agg.hop_capped = agg.exited_at_sink = 0;
    agg.measured_hours = 0.0;
    agg.overloaded = false;
    std::fill(agg.hop_histogram.begin(), agg.hop_histogram.end(), 0);
    for (const auto& one : runs) {
        agg.total_arrivals += one.total_arrivals;
        agg.total_parked += one.total_parked;
        agg.circulating_at_end += one.circulating_at_end;
        agg.hop_capped += one.hop_capped;
        agg.exited_at_sink += one.exited_at_sink;
        agg.measured_hours += one.measured_hours;
        agg.overloaded = agg.overloaded || one.overloaded;
        for (size_t h = 0; h < agg.hop_histogram.size(); ++h) {
            agg.hop_histogram[h] += one.hop_histogram[h];
        }
    }
    agg.replications = config.replications;
    return agg;
}

} // namespace curbflow::sim
