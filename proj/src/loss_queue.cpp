#include "curbflow/loss_queue.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace curbflow {

namespace {

void check_rate(double y) {
    if (!std::isfinite(y) || y < 0.0) {
        throw ValidationError("arrival rate must be finite and non-negative, got " +
                              std::to_string(y));
    }
}

// Blocking probability and its derivative in rho, advanced together:
//   B_0 = 1,  B_j = rho*B_{j-1} / (j + rho*B_{j-1})
//   B_j' = j * (B_{j-1} + rho*B_{j-1}') / (j + rho*B_{j-1})^2
struct BlockingPair {
    double b;
    double db_drho;
};

BlockingPair blocking_with_derivative(int k, double rho) {
    double b = 1.0;
    double db = 0.0;
    for (int j = 1; j <= k; ++j) {
        const double denom = static_cast<double>(j) + rho * b;
        const double bj = rho * b / denom;
        const double dbj = static_cast<double>(j) * (b + rho * db) / (denom * denom);
        b = bj;
        db = dbj;
    }
    return {b, db};
}

} // namespace

void QueueParams::validate() const {
    if (k < 1) {
        throw ValidationError("stall count k must be >= 1, got " + std::to_string(k));
    }
    if (!std::isfinite(mu) || mu <= 0.0) {
        throw ValidationError("service rate mu must be finite and positive, got " +
                              std::to_string(mu));
    }
}

LossProfile stationary_distribution(const QueueParams& params, double y) {
    params.validate();
    check_rate(y);

    const int k = params.k;
    const double rho = y / params.mu;

    LossProfile out;
    out.y = y;
    out.pi = Eigen::VectorXd::Zero(k + 1);

    if (y == 0.0) {
        out.pi[0] = 1.0;
        out.blocking = 0.0;
        out.occupancy = 0.0;
        return out;
    }

    // Unnormalized terms t_i = rho^i / i!, rescaled whenever they grow large
    // so any (k, rho) pair stays inside double range.
    constexpr double kRescaleAt = 1e280;
    double term = 1.0;
    double sum = 1.0;
    out.pi[0] = 1.0;
    for (int i = 1; i <= k; ++i) {
        term *= rho / static_cast<double>(i);
        out.pi[i] = term;
        sum += term;
        if (sum > kRescaleAt) {
            out.pi.head(i + 1) /= kRescaleAt;
            term /= kRescaleAt;
            sum /= kRescaleAt;
        }
    }
    out.pi /= sum;
    out.blocking = out.pi[k];
    out.occupancy = y * (1.0 - out.blocking) / (static_cast<double>(k) * params.mu);
    return out;
}

double erlang_blocking(const QueueParams& params, double y) {
    params.validate();
    check_rate(y);
    if (y == 0.0) return 0.0;
    const double rho = y / params.mu;
    double b = 1.0;
    for (int j = 1; j <= params.k; ++j) {
        b = rho * b / (static_cast<double>(j) + rho * b);
    }
    return b;
}

double occupancy(const QueueParams& params, double y) {
    const double b = erlang_blocking(params, y);
    return y * (1.0 - b) / (static_cast<double>(params.k) * params.mu);
}

double occupancy_slope(const QueueParams& params, double y) {
    params.validate();
    check_rate(y);
    const double rho = y / params.mu;
    const auto [b, db] = blocking_with_derivative(params.k, rho);
    // u = rho*(1-B(rho))/k, du/dy = du/drho / mu
    const double du_drho = ((1.0 - b) - rho * db) / static_cast<double>(params.k);
    return du_drho / params.mu;
}

} // namespace curbflow
