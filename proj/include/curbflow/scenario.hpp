#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curbflow/network.hpp"
#include "curbflow/pricing.hpp"
#include "curbflow/simulate.hpp"

namespace curbflow::io {

/// How per-block demand slopes are obtained. Either a direct slope (alpha,
/// occupancy per dollar) or a price-elasticity magnitude converted through a
/// reference point: alpha = elasticity * u0 / p0. The reference can be a
/// fixed (p0, u0) pair or each block's own posted price and observed
/// occupancy.
struct ElasticitySpec {
    std::optional<double> alpha;
    std::optional<double> elasticity;
    std::optional<double> p0;
    std::optional<double> u0;
    bool reference_observed = false;
};

struct PriceBounds {
    double min = 0.0;
    std::optional<double> max; // absent => 1/alpha per block
};

/// The unit of CLI work: graph + blocks + demand calibration + caps +
/// optional simulation settings.
struct Scenario {
    std::string name;
    std::string units = "per-hour";
    net::StreetGraph graph;
    std::vector<net::BlockFace> blocks;
    ElasticitySpec elasticity;
    PriceBounds price_bounds;
    pricing::ObjectiveWeights weights = pricing::ObjectiveWeights::stalls;
    std::optional<sim::SimConfig> sim_config;
    std::vector<std::string> warnings; // findings attached at load; not hashed

    /// Canonical self-contained echo: blocks and edges inlined, optional
    /// fields omitted when absent. Loading the echo reproduces the scenario.
    nlohmann::json canonical() const;

    /// fnv1a64 hex digest of the canonical echo.
    std::string content_hash() const;

    const net::BlockFace& block(const std::string& id) const;
};

/// Per-block demand calibration outcome.
struct CalibratedDemand {
    std::string id;
    std::optional<pricing::ElasticityModel> model; // absent => excluded from pricing
    std::string source;                            // "block", "global-alpha", "elasticity-reference", or the exclusion reason
};

/// Parses a scenario JSON file plus companion CSVs (paths resolved relative
/// to the scenario file). Attaches validation findings as warnings; throws
/// ValidationError on structural errors naming file and field.
Scenario load_scenario(const std::filesystem::path& path);

/// Same, from already-parsed JSON; base_dir anchors relative CSV paths.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Resolves every block's demand model from the scenario's elasticity spec
/// and price bounds. Blocks without a usable slope are excluded with the
/// reason recorded; exclusions also land in `warnings` when non-null.
std::vector<CalibratedDemand> calibrate_demand(const Scenario& scenario,
                                               std::vector<std::string>* warnings = nullptr);

/// Assembles the congestion-constrained pricing problem from a scenario.
/// Blocks without a demand model are skipped (recorded in `warnings`).
pricing::PricingProblem build_pricing_problem(const Scenario& scenario,
                                              std::vector<std::string>* warnings = nullptr);

/// fnv1a64 of arbitrary bytes, as 16 hex chars.
std::string fnv1a64_hex(std::string_view bytes);

/// Rounds to 12 significant digits; report serialization applies this to
/// derived numbers so machine output is byte-stable.
double round12(double v);

} // namespace curbflow::io
