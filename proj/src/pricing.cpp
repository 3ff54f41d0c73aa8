#include "curbflow/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace curbflow::pricing {

namespace {

void check_price_in_box(const ElasticityModel& model, double p) {
    if (!std::isfinite(p) || p < model.p_min - 1e-12 || p > model.p_max + 1e-12) {
        throw ValidationError("price " + std::to_string(p) + " outside [" +
                              std::to_string(model.p_min) + ", " + std::to_string(model.p_max) +
                              "]");
    }
}

} // namespace

ElasticityModel::ElasticityModel(double alpha_, double p_min_, double p_max_)
    : alpha(alpha_), p_min(p_min_), p_max(p_max_) {
    if (!std::isfinite(alpha) || alpha <= 0.0) {
        throw ValidationError("demand slope alpha must be positive, got " + std::to_string(alpha));
    }
    if (p_min < 0.0 || !std::isfinite(p_min)) {
        throw ValidationError("price lower bound must be >= 0, got " + std::to_string(p_min));
    }
    if (p_max < p_min) {
        throw ValidationError("price upper bound " + std::to_string(p_max) +
                              " below lower bound " + std::to_string(p_min));
    }
    if (p_max > 1.0 / alpha + 1e-9) {
        throw ValidationError("price upper bound " + std::to_string(p_max) +
                              " exceeds 1/alpha = " + std::to_string(1.0 / alpha) +
                              " where demand would go negative");
    }
}

double occupancy_of_price(const ElasticityModel& model, double p) {
    check_price_in_box(model, p);
    return std::clamp(1.0 - model.alpha * p, 0.0, kOccupancyCap);
}

double rejection_of_price(const QueueParams& params, const ElasticityModel& model, double p) {
    const double u = occupancy_of_price(model, p);
    const double y = invert_occupancy(params, OccupancyTarget(u));
    return std::max(0.0, y - u * static_cast<double>(params.k) * params.mu);
}

double congestion_price_floor(const QueueParams& params, const ElasticityModel& model,
                              double cap, const std::string& block_id) {
    if (!(cap >= 0.0)) {
        throw ValidationError("congestion cap must be >= 0, got " + std::to_string(cap));
    }
    // Evaluation noise of g sits around 1e-10 at worst, so the cap gets an
    // absolute slack below the 1e-8 satisfaction tolerance.
    const double tol = 1e-9;
    auto within_cap = [&](double p) { return rejection_of_price(params, model, p) <= cap + tol; };
    if (within_cap(model.p_min)) {
        return model.p_min;
    }
    if (!within_cap(model.p_max)) {
        throw InfeasibleError("congestion cap " + std::to_string(cap) +
                              (block_id.empty() ? std::string{} : " on block '" + block_id + "'") +
                              " is infeasible: rejection still " +
                              std::to_string(rejection_of_price(params, model, model.p_max)) +
                              " at the price ceiling " + std::to_string(model.p_max));
    }
    // g is nonincreasing in p. Maintain g(lo) > cap >= g(hi) and return hi.
    double lo = model.p_min;
    double hi = model.p_max;
    while (hi - lo > 1e-12 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (within_cap(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

PricingSolution optimize_prices(const PricingProblem& problem) {
    const int n = static_cast<int>(problem.blocks.size());
    if (n == 0) {
        throw ValidationError("pricing problem has no blocks");
    }

    PricingSolution sol;
    sol.ids.reserve(n);
    sol.floors.resize(n);
    Eigen::VectorXd p_min(n), p_max(n), weight(n), slope(n);
    for (int i = 0; i < n; ++i) {
        const PricedBlock& pb = problem.blocks[i];
        sol.ids.push_back(pb.block.id);
        const double cap = pb.cap.value_or(std::numeric_limits<double>::infinity());
        sol.floors[i] = std::isinf(cap)
                            ? pb.model.p_min
                            : congestion_price_floor(pb.block.params, pb.model, cap, pb.block.id);
        p_min[i] = pb.model.p_min;
        p_max[i] = pb.model.p_max;
        slope[i] = pb.model.alpha;
        weight[i] = problem.weights == ObjectiveWeights::stalls
                        ? static_cast<double>(pb.block.params.k) * pb.weight
                        : pb.weight;
    }

    // Projected gradient on maximize sum_i w_i * (1 - alpha_i p_i) over the
    // box intersected with {g_i(p_i) <= cap_i}. The caps decouple per block
    // and g is monotone, so the feasible set projects componentwise onto
    // [floor_i, p_max_i].
    Eigen::VectorXd p = p_max;
    const double range = std::max(1e-12, (p_max - p_min).maxCoeff());
    const double step = 0.1 * range;
    int it = 0;
    for (; it < 100000; ++it) {
        Eigen::VectorXd next =
            (p - step * (weight.array() * slope.array()).matrix())
                .cwiseMax(sol.floors)
                .cwiseMin(p_max);
        const double update = (next - p).cwiseAbs().maxCoeff();
        p = next;
        if (update < 1e-10) break;
    }
    sol.prices = p;
    sol.iterations = it + 1;
    sol.kkt_residual = (sol.prices - sol.floors).cwiseAbs().maxCoeff();

    sol.occupancies.resize(n);
    sol.rejections.resize(n);
    sol.binding.resize(n);
    sol.objective = 0.0;
    for (int i = 0; i < n; ++i) {
        const PricedBlock& pb = problem.blocks[i];
        sol.occupancies[i] = occupancy_of_price(pb.model, sol.prices[i]);
        sol.rejections[i] = rejection_of_price(pb.block.params, pb.model, sol.prices[i]);
        sol.binding[i] = sol.floors[i] > pb.model.p_min + 1e-12;
        sol.objective += weight[i] * sol.occupancies[i];
    }
    return sol;
}

ConvexityReport verify_convexity(const QueueParams& params, const ElasticityModel& model,
                                 const std::vector<double>& price_grid) {
    ConvexityReport report;
    report.min_second_difference = std::numeric_limits<double>::infinity();
    report.min_certificate = std::numeric_limits<double>::infinity();
    if (price_grid.size() < 3) {
        report.min_second_difference = 0.0;
        report.min_certificate = 0.0;
        report.points = static_cast<int>(price_grid.size());
        return report;
    }

    std::vector<double> g(price_grid.size());
    for (size_t i = 0; i < price_grid.size(); ++i) {
        g[i] = rejection_of_price(params, model, price_grid[i]);
        const double u = occupancy_of_price(model, price_grid[i]);
        if (u > 0.0) {
            const double cert = convexity_margin(params, OccupancyTarget(u));
            report.min_certificate = std::min(report.min_certificate, cert);
            if (cert < -1e-8) {
                report.passed = false;
                report.violations.push_back("certificate " + std::to_string(cert) +
                                            " at price " + std::to_string(price_grid[i]));
            }
        }
    }
    for (size_t i = 1; i + 1 < price_grid.size(); ++i) {
        const double h1 = price_grid[i] - price_grid[i - 1];
        const double h2 = price_grid[i + 1] - price_grid[i];
        const double second = (g[i + 1] - g[i]) / h2 - (g[i] - g[i - 1]) / h1;
        const double scale = std::max({1.0, std::abs(g[i - 1]), std::abs(g[i]), std::abs(g[i + 1])});
        report.min_second_difference = std::min(report.min_second_difference, second / scale);
        if (second / scale < -1e-6) {
            report.passed = false;
            report.violations.push_back("second difference " + std::to_string(second) +
                                        " at price " + std::to_string(price_grid[i]));
        }
    }
    report.points = static_cast<int>(price_grid.size());
    return report;
}

} // namespace curbflow::pricing
