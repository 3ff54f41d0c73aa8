#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "curbflow/scenario.hpp"

namespace curbflow::io {

enum class Format { json, csv };

/// Self-contained run record: the scenario echo plus whatever solves ran.
/// Serialization is deterministic (sorted keys, derived numbers rounded to
/// 12 significant digits, no timestamps), so identical inputs give
/// byte-identical machine output.
struct Report {
    Scenario scenario;
    std::optional<net::NetworkFlows> flows;
    std::optional<pricing::PricingSolution> pricing;
    std::optional<sim::SimResult> simulation;
    std::map<std::string, net::CruisingShare> cruising;
    std::vector<CalibratedDemand> demand;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

nlohmann::json flows_to_json(const net::NetworkFlows& flows, const Scenario& scenario);
nlohmann::json pricing_to_json(const pricing::PricingSolution& solution);
nlohmann::json sim_result_to_json(const sim::SimResult& result, const Scenario& scenario);

/// Writes report.json, or the report_*.csv table set under out_dir.
/// Returns the paths written.
std::vector<std::filesystem::path> write_report(const Report& report,
                                                const std::filesystem::path& out_dir,
                                                Format format);

} // namespace curbflow::io
