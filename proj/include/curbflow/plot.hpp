#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "curbflow/report.hpp"

namespace curbflow::io {

struct PlotOptions {
    std::vector<int> stall_counts = {1, 5, 10, 20}; // curve per k
    double mu = 1.0;
    double u_min = 0.02;
    double u_max = 0.98;
    int points = 49;
    bool svg = false; // also render a simple static chart per series
};

/// Arrival-rate-vs-occupancy sweep, one series per stall count. Writes
/// occupancy_curves.csv with columns k,u,y (long form).
std::vector<std::filesystem::path> emit_occupancy_curves(const PlotOptions& options,
                                                         const std::filesystem::path& out_dir);

/// Per-block share of observed through-traffic explained by cruising.
/// Needs report.flows and at least one cruising entry.
std::vector<std::filesystem::path> emit_cruising_shares(const Report& report,
                                                        const std::filesystem::path& out_dir,
                                                        bool svg = false);

/// Before/after occupancy, rejection, and price-change bars. Needs
/// report.flows (baseline) and report.pricing (controlled).
std::vector<std::filesystem::path> emit_price_control(const Report& report,
                                                      const std::filesystem::path& out_dir,
                                                      bool svg = false);

/// Dispatcher over kind in {"curves", "cruising", "prices", "all"}.
std::vector<std::filesystem::path> emit_plot_data(const Report& report, const std::string& kind,
                                                  const std::filesystem::path& out_dir,
                                                  const PlotOptions& options = {});

} // namespace curbflow::io
