#include "curbflow/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace curbflow::io {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << text;
}

// Minimal SVG helpers: enough for a line chart and a bar chart.

constexpr double kW = 640, kH = 400, kPad = 56;

double sx(double x, double x0, double x1) { return kPad + (x - x0) / (x1 - x0) * (kW - 2 * kPad); }
double sy(double y, double y0, double y1) {
    return kH - kPad - (y - y0) / (y1 - y0) * (kH - 2 * kPad);
}

std::string svg_header(const std::string& title, const std::string& x_label,
                       const std::string& y_label) {
    std::string s = "<svg xmlns='http://www.w3.org/2000/svg' width='" + num(kW) + "' height='" +
                    num(kH) + "' font-family='sans-serif' font-size='12'>\n";
    s += "<rect width='100%' height='100%' fill='white'/>\n";
    s += "<text x='" + num(kW / 2) + "' y='20' text-anchor='middle' font-size='14'>" + title +
         "</text>\n";
    s += "<text x='" + num(kW / 2) + "' y='" + num(kH - 12) + "' text-anchor='middle'>" + x_label +
         "</text>\n";
    s += "<text x='16' y='" + num(kH / 2) + "' text-anchor='middle' transform='rotate(-90 16 " +
         num(kH / 2) + ")'>" + y_label + "</text>\n";
    s += "<line x1='" + num(kPad) + "' y1='" + num(kH - kPad) + "' x2='" + num(kW - kPad) +
         "' y2='" + num(kH - kPad) + "' stroke='black'/>\n";
    s += "<line x1='" + num(kPad) + "' y1='" + num(kPad) + "' x2='" + num(kPad) + "' y2='" +
         num(kH - kPad) + "' stroke='black'/>\n";
    return s;
}

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

} // namespace

std::vector<std::filesystem::path> emit_occupancy_curves(const PlotOptions& options,
                                                         const std::filesystem::path& out_dir) {
    if (options.stall_counts.empty() || options.points < 2) {
        throw ValidationError("occupancy curve emission needs stall counts and >= 2 grid points");
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;

    struct Series {
        int k;
        std::vector<double> u, y;
    };
    std::vector<Series> series;
    std::string csv = "k,u,y\n";
    for (int k : options.stall_counts) {
        Series s;
        s.k = k;
        const QueueParams params(k, options.mu);
        for (int i = 0; i < options.points; ++i) {
            const double u = options.u_min +
                             (options.u_max - options.u_min) * i / (options.points - 1);
            const double y = invert_occupancy(params, OccupancyTarget(u));
            s.u.push_back(u);
            s.y.push_back(y);
            csv += std::to_string(k) + ',' + num(u) + ',' + num(round12(y)) + '\n';
        }
        series.push_back(std::move(s));
    }
    const auto csv_path = out_dir / "occupancy_curves.csv";
    write_text(csv_path, csv);
    written.push_back(csv_path);

    if (options.svg) {
        double y_max = 0.0;
        for (const auto& s : series) y_max = std::max(y_max, s.y.back());
        std::string svg = svg_header("Arrival rate needed per occupancy level", "occupancy",
                                     "total arrival rate (veh/hour)");
        for (size_t si = 0; si < series.size(); ++si) {
            const auto& s = series[si];
            std::string points;
            for (size_t i = 0; i < s.u.size(); ++i) {
                points += num(sx(s.u[i], options.u_min, options.u_max)) + ',' +
                          num(sy(s.y[i], 0.0, y_max)) + ' ';
            }
            const char* color = kColors[si % 8];
            svg += "<polyline fill='none' stroke='" + std::string(color) + "' stroke-width='1.5' points='" +
                   points + "'/>\n";
            svg += "<text x='" + num(kW - kPad + 4) + "' y='" +
                   num(sy(s.y.back(), 0.0, y_max)) + "' fill='" + color + "'>k=" +
                   std::to_string(s.k) + "</text>\n";
        }
        svg += "</svg>\n";
        const auto svg_path = out_dir / "occupancy_curves.svg";
        write_text(svg_path, svg);
        written.push_back(svg_path);
    }
    return written;
}

namespace {

std::vector<std::filesystem::path> emit_bars(const std::filesystem::path& out_dir,
                                             const std::string& stem, const std::string& title,
                                             const std::string& csv_header,
                                             const std::vector<std::string>& ids,
                                             const std::vector<std::vector<double>>& columns,
                                             size_t bar_column, bool svg) {
    std::vector<std::filesystem::path> written;
    std::string csv = csv_header + "\n";
    for (size_t i = 0; i < ids.size(); ++i) {
        csv += ids[i];
        for (const auto& col : columns) csv += ',' + num(round12(col[i]));
        csv += '\n';
    }
    const auto csv_path = out_dir / (stem + ".csv");
    write_text(csv_path, csv);
    written.push_back(csv_path);

    if (svg && !ids.empty()) {
        const auto& values = columns[bar_column];
        double v_min = 0.0, v_max = 0.0;
        for (double v : values) {
            v_min = std::min(v_min, v);
            v_max = std::max(v_max, v);
        }
        if (v_max == v_min) v_max = v_min + 1.0;
        std::string out = svg_header(title, "block", "");
        const double slot = (kW - 2 * kPad) / ids.size();
        const double zero = sy(0.0, v_min, v_max);
        for (size_t i = 0; i < ids.size(); ++i) {
            const double x = kPad + slot * (i + 0.15);
            const double yv = sy(values[i], v_min, v_max);
            out += "<rect x='" + num(x) + "' y='" + num(std::min(yv, zero)) + "' width='" +
                   num(slot * 0.7) + "' height='" + num(std::abs(zero - yv)) +
                   "' fill='#1f77b4'/>\n";
            out += "<text x='" + num(x + slot * 0.35) + "' y='" + num(kH - kPad + 14) +
                   "' text-anchor='middle' font-size='9'>" + ids[i] + "</text>\n";
        }
        out += "</svg>\n";
        const auto svg_path = out_dir / (stem + ".svg");
        write_text(svg_path, out);
        written.push_back(svg_path);
    }
    return written;
}

} // namespace

std::vector<std::filesystem::path> emit_cruising_shares(const Report& report,
                                                        const std::filesystem::path& out_dir,
                                                        bool svg) {
    if (!report.flows) {
        throw ValidationError("cruising-share emission needs solved network flows in the report");
    }
    if (report.cruising.empty()) {
        throw ValidationError("cruising-share emission needs blocks with observed through-traffic");
    }
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> ids;
    std::vector<double> share, inflow, through;
    for (const auto& [id, c] : report.cruising) {
        ids.push_back(id);
        share.push_back(c.share);
        inflow.push_back(c.rejection_inflow);
        through.push_back(c.through_traffic);
    }
    return emit_bars(out_dir, "cruising_shares", "Share of through-traffic searching for parking",
                     "id,share,rejection_inflow,through_traffic", ids, {share, inflow, through}, 0,
                     svg);
}

std::vector<std::filesystem::path> emit_price_control(const Report& report,
                                                      const std::filesystem::path& out_dir,
                                                      bool svg) {
    if (!report.flows) {
        throw ValidationError("price-control emission needs baseline network flows in the report");
    }
    if (!report.pricing) {
        throw ValidationError("price-control emission needs a pricing solution in the report");
    }
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> ids;
    std::vector<double> u_before, u_after, rej_before, rej_after, price_before, price_after,
        price_change;
    for (size_t p = 0; p < report.pricing->ids.size(); ++p) {
        const auto& id = report.pricing->ids[p];
        const int i = net::node_index(report.scenario.graph, id);
        const auto idx = static_cast<Eigen::Index>(i);
        const auto pidx = static_cast<Eigen::Index>(p);
        ids.push_back(id);
        u_before.push_back(report.flows->occupancy[idx]);
        rej_before.push_back(report.flows->rejection_out[idx]);
        u_after.push_back(report.pricing->occupancies[pidx]);
        rej_after.push_back(report.pricing->rejections[pidx]);
        const auto& block = report.scenario.blocks[static_cast<size_t>(i)];
        const double before = block.price.value_or(std::numeric_limits<double>::quiet_NaN());
        price_before.push_back(before);
        price_after.push_back(report.pricing->prices[pidx]);
        price_change.push_back(report.pricing->prices[pidx] - before);
    }
    return emit_bars(out_dir, "price_control", "Price changes under congestion caps",
                     "id,occupancy_before,occupancy_after,rejection_before,rejection_after,"
                     "price_before,price_after,price_change",
                     ids,
                     {u_before, u_after, rej_before, rej_after, price_before, price_after,
                      price_change},
                     6, svg);
}

std::vector<std::filesystem::path> emit_plot_data(const Report& report, const std::string& kind,
                                                  const std::filesystem::path& out_dir,
                                                  const PlotOptions& options) {
    if (kind == "curves") return emit_occupancy_curves(options, out_dir);
    if (kind == "cruising") return emit_cruising_shares(report, out_dir, options.svg);
    if (kind == "prices") return emit_price_control(report, out_dir, options.svg);
    if (kind == "all") {
        auto written = emit_occupancy_curves(options, out_dir);
        if (report.flows && !report.cruising.empty()) {
            auto more = emit_cruising_shares(report, out_dir, options.svg);
            written.insert(written.end(), more.begin(), more.end());
        }
        if (report.flows && report.pricing) {
            auto more = emit_price_control(report, out_dir, options.svg);
            written.insert(written.end(), more.begin(), more.end());
        }
        return written;
    }
    throw ValidationError("unknown plot kind '" + kind +
                          "'; expected curves, cruising, prices, or all");
}

} // namespace curbflow::io
