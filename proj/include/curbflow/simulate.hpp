#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "curbflow/network.hpp"

namespace curbflow::sim {

enum class ServiceKind { exponential, deterministic, lognormal };

/// Parking-duration distribution. The mean is always 1/mu of the block being
/// parked at; cv applies to the lognormal shape only.
struct ServiceDistribution {
    ServiceKind kind = ServiceKind::exponential;
    double cv = 1.0;
};

struct SimConfig {
    double horizon_hours = 2000.0;
    double warmup_hours = 200.0;
    std::uint64_t seed = 1;
    ServiceDistribution service;
    double edge_delay_hours = 1.0 / 60.0; // travel time per hop
    std::optional<int> max_hops;          // absent => drivers circulate until parked
    int replications = 1;
    double overload_factor = 100.0; // circulating > factor * total stalls aborts the run
    int batches = 20;               // batch-means batches for the occupancy CI

    void validate() const;
};

struct BlockStats {
    double occupancy = 0.0;
    double occupancy_half_width = 0.0; // 95% CI half-width
    double rejection_rate = 0.0;       // events/hour after warmup
    double arrival_rate = 0.0;         // total arrivals seen, events/hour after warmup

    bool operator==(const BlockStats&) const = default;
};

struct SimResult {
    std::vector<BlockStats> blocks;          // aligned with scenario block order
    std::vector<double> edge_flow;           // rejections routed per edge, events/hour
    std::vector<std::int64_t> hop_histogram; // hops at completion, tail bucket last
    std::int64_t total_arrivals = 0;
    std::int64_t total_parked = 0;
    std::int64_t circulating_at_end = 0;
    std::int64_t hop_capped = 0;
    std::int64_t exited_at_sink = 0;
    bool overloaded = false;
    double measured_hours = 0.0;
    int replications = 1;

    bool operator==(const SimResult&) const = default;
};

/// Event-driven simulation of the rejection-circulation network. Poisson
/// exogenous arrivals per block; rejected drivers hop along routing edges
/// after edge_delay_hours and retry. Identical seed gives a bit-identical
/// result. Overload trips the watchdog and returns partial stats flagged.
SimResult run(const net::StreetGraph& graph, const std::vector<net::BlockFace>& blocks,
              const SimConfig& config);

/// Independent replications at seeds seed..seed+replications-1, executed
/// concurrently; per-block occupancy CI taken across replications.
SimResult replicate(const net::StreetGraph& graph, const std::vector<net::BlockFace>& blocks,
                    const SimConfig& config);

} // namespace curbflow::sim
