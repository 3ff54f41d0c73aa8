#include "curbflow/inversion.hpp"

#include <cmath>
#include <string>

#include "curbflow/root_find.hpp"

namespace curbflow {

namespace {

// Carried throughput y*(1 - B(y)) evaluated without the 1-B subtraction:
// 1 - B_k = k / (k + rho*B_{k-1}), which keeps full relative accuracy even
// deep in overload where B approaches 1.
double carried_rate(const QueueParams& params, double y) {
    if (y == 0.0) return 0.0;
    const double rho = y / params.mu;
    double b = 1.0;
    for (int j = 1; j < params.k; ++j) {
        b = rho * b / (static_cast<double>(j) + rho * b);
    }
    const double one_minus_b = static_cast<double>(params.k) / (static_cast<double>(params.k) + rho * b);
    return y * one_minus_b;
}

// Partial sums of t_i = rho^i / i! needed by the implicit derivatives of the
// occupancy polynomial, rescaled jointly when they grow large. All consumers
// are scale-invariant or sign-only.
struct PowerSums {
    double s_full = 0.0;   // sum_{i<=k}   t_i
    double s_k1 = 0.0;     // sum_{i<=k-1} t_i
    double s_k2 = 0.0;     // sum_{i<=k-2} t_i
    double w_k1 = 0.0;     // sum_{i<=k-1} i*t_i
    double w_k2 = 0.0;     // sum_{i<=k-2} i*t_i
};

PowerSums power_sums(int k, double rho) {
    constexpr double kRescaleAt = 1e280;
    PowerSums s;
    double term = 1.0;
    for (int i = 0; i <= k; ++i) {
        if (i > 0) term *= rho / static_cast<double>(i);
        s.s_full += term;
        if (i <= k - 1) {
            s.s_k1 += term;
            s.w_k1 += static_cast<double>(i) * term;
        }
        if (i <= k - 2) {
            s.s_k2 += term;
            s.w_k2 += static_cast<double>(i) * term;
        }
        if (s.s_full > kRescaleAt) {
            term /= kRescaleAt;
            s.s_full /= kRescaleAt;
            s.s_k1 /= kRescaleAt;
            s.s_k2 /= kRescaleAt;
            s.w_k1 /= kRescaleAt;
            s.w_k2 /= kRescaleAt;
        }
    }
    return s;
}

// Implicit-derivative bundle for F(y, x) = sum_i (x - i) y^i / i! = 0 with
// x = k*u, in the unit-service-rate normalization (y here is rho).
struct ImplicitDerivs {
    double yp;  // dy/dx at the solution
    double ypp; // d2y/dx2 at the solution
    double h;   // Fyy*y' + 2*Fxy, the curvature sign certificate
};

ImplicitDerivs implicit_derivs(int k, double x, double rho) {
    const PowerSums s = power_sums(k, rho);
    const double fx = s.s_full;
    const double fy = x * s.s_k1 - (s.w_k1 + s.s_k1);
    const double fyy = x * s.s_k2 - (s.w_k2 + 2.0 * s.s_k2);
    const double fxy = s.s_k1;
    const double yp = -fx / fy;
    const double h = fyy * yp + 2.0 * fxy;
    const double ypp = fx * h / (fy * fy);
    return {yp, ypp, h};
}

double target_occupancy(const QueueParams& params, OccupancyTarget target) {
    params.validate();
    return target.u;
}

} // namespace

OccupancyTarget::OccupancyTarget(double value) : u(value) {
    if (!std::isfinite(value) || value < 0.0 || value > kOccupancyCap) {
        throw ValidationError("occupancy target must lie in [0, " +
                              std::to_string(kOccupancyCap) + "], got " + std::to_string(value) +
                              " (targets at or above 1 need an unbounded arrival rate)");
    }
}

double invert_occupancy(const QueueParams& params, OccupancyTarget target) {
    const double u = target_occupancy(params, target);
    if (u == 0.0) return 0.0;

    const double scale = static_cast<double>(params.k) * params.mu;
    auto fn = [&](double y) { return carried_rate(params, y) / scale - u; };
    auto dfn = [&](double y) { return occupancy_slope(params, y); };

    const double lo = 0.0;
    double hi = scale;
    if (!detail::bracket_upward(fn, hi)) {
        throw NumericError("failed to bracket arrival rate for occupancy " + std::to_string(u) +
                           " after 200 doublings (target too close to 1)");
    }
    const double y = detail::newton_bisect(fn, dfn, lo, hi, 1e-14);
    if (std::abs(fn(y)) > 1e-10) {
        throw NumericError("occupancy inversion stalled at residual " + std::to_string(fn(y)));
    }
    return y;
}

double arrival_sensitivity(const QueueParams& params, OccupancyTarget target) {
    const double u = target_occupancy(params, target);
    if (u <= 0.0) {
        throw ValidationError("arrival_sensitivity requires occupancy in (0, cap], got 0");
    }
    const double rho = invert_occupancy(params, target) / params.mu;
    const auto d = implicit_derivs(params.k, static_cast<double>(params.k) * u, rho);
    return params.mu * static_cast<double>(params.k) * d.yp;
}

double arrival_curvature(const QueueParams& params, OccupancyTarget target) {
    const double u = target_occupancy(params, target);
    if (u <= 0.0) {
        throw ValidationError("arrival_curvature requires occupancy in (0, cap], got 0");
    }
    const double rho = invert_occupancy(params, target) / params.mu;
    const auto d = implicit_derivs(params.k, static_cast<double>(params.k) * u, rho);
    const double k = static_cast<double>(params.k);
    return params.mu * k * k * d.ypp;
}

double convexity_margin(const QueueParams& params, OccupancyTarget target) {
    const double u = target_occupancy(params, target);
    if (u <= 0.0) {
        throw ValidationError("convexity_margin requires occupancy in (0, cap], got 0");
    }
    const double rho = invert_occupancy(params, target) / params.mu;
    return implicit_derivs(params.k, static_cast<double>(params.k) * u, rho).h;
}

Eigen::VectorXd occupancy_poly_coeffs(const QueueParams& params, OccupancyTarget target) {
    const double u = target_occupancy(params, target);
    const double uk = u * static_cast<double>(params.k);
    Eigen::VectorXd coeffs(params.k + 1);
    double t = params.mu; // 1 / (i! * mu^(i-1)) at i = 0
    for (int i = 0; i <= params.k; ++i) {
        if (i > 0) t /= static_cast<double>(i) * params.mu;
        coeffs[i] = (static_cast<double>(i) - uk) * t;
    }
    return coeffs;
}

int sign_changes(const Eigen::VectorXd& seq) {
    if (seq.size() == 0) {
        throw ValidationError("sign_changes needs a nonempty sequence");
    }
    int changes = 0;
    int prev = 0;
    for (Eigen::Index i = 0; i < seq.size(); ++i) {
        const double v = seq[i];
        if (v == 0.0) continue;
        const int sign = v > 0.0 ? 1 : -1;
        if (prev != 0 && sign != prev) ++changes;
        prev = sign;
    }
    if (prev == 0) {
        throw ValidationError("sign_changes is undefined for an all-zero sequence");
    }
    return changes;
}

UniformSolution solve_uniform(const QueueParams& params, double lambda, int degree) {
    params.validate();
    if (degree < 1) {
        throw ValidationError("degree must be >= 1, got " + std::to_string(degree));
    }
    if (!std::isfinite(lambda) || lambda <= 0.0) {
        throw ValidationError("exogenous rate must be finite and positive, got " +
                              std::to_string(lambda));
    }
    const double capacity = static_cast<double>(params.k) * params.mu;
    if (lambda >= capacity) {
        throw InstabilityError("exogenous rate " + std::to_string(lambda) +
                               " >= capacity k*mu = " + std::to_string(capacity) +
                               "; queues are stable only below capacity");
    }

    auto fn = [&](double y) { return carried_rate(params, y) - lambda; };
    auto dfn = [&](double y) {
        return static_cast<double>(params.k) * params.mu * occupancy_slope(params, y);
    };

    const double lo = lambda;
    double hi = std::max(2.0 * lambda, capacity);
    if (!detail::bracket_upward(fn, hi)) {
        throw NumericError("failed to bracket the uniform-network arrival rate for lambda " +
                           std::to_string(lambda) + " (load too close to capacity)");
    }
    const double y = detail::newton_bisect(fn, dfn, lo, hi, 1e-12 * std::max(1.0, lambda));

    UniformSolution out;
    out.y = y;
    out.degree = degree;
    out.per_neighbor_rejection = y * erlang_blocking(params, y) / static_cast<double>(degree);
    out.residual = std::abs(fn(y));
    if (out.residual > 1e-10) {
        throw NumericError("uniform-network solve stalled at residual " +
                           std::to_string(out.residual));
    }
    return out;
}

} // namespace curbflow
