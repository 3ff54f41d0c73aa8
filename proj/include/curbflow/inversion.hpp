#pragma once

#include <Eigen/Core>

#include "curbflow/loss_queue.hpp"

namespace curbflow {

/// Largest admissible occupancy target. The arrival rate needed to hold an
/// occupancy diverges as u -> 1, so targets are capped strictly below 1.
inline constexpr double kOccupancyCap = 0.999;

/// An occupancy level a solver may be asked to hit. Accepts [0, kOccupancyCap];
/// anything above is rejected at construction.
struct OccupancyTarget {
    double u = 0.0;

    OccupancyTarget() = default;
    OccupancyTarget(double value); // NOLINT(google-explicit-constructor)
};

/// Steady state of one representative queue in a d-regular network of
/// identical blocks: total arrivals y, per-neighbor rejection flow x.
struct UniformSolution {
    double y = 0.0;
    double per_neighbor_rejection = 0.0;
    int degree = 1;
    double residual = 0.0; // |y*(1 - blocking) - lambda| at the solution
};

/// The arrival rate whose steady-state occupancy equals u: the unique positive
/// root of the degree-k occupancy polynomial, located as the root of the
/// equivalent monotone equation occupancy(y) = u. u = 0 returns 0 exactly.
double invert_occupancy(const QueueParams& params, OccupancyTarget target);

/// dy/du of the occupancy inverse, from the implicit derivative of the
/// occupancy polynomial evaluated at the solution pair. Strictly positive.
double arrival_sensitivity(const QueueParams& params, OccupancyTarget target);

/// d2y/du2 of the occupancy inverse, from the second implicit derivative.
/// Nonnegative: the arrival rate needed is convex in the occupancy target.
double arrival_curvature(const QueueParams& params, OccupancyTarget target);

/// Sign certificate behind the curvature result: h = Fyy * y' + 2*Fxy
/// evaluated at the solution of F(y, x) = 0 with x = k*u (unit service rate
/// normalization). Nonnegative wherever the inverse map is defined.
double convexity_margin(const QueueParams& params, OccupancyTarget target);

/// Coefficients c_i = (i - u*k) / (i! * mu^(i-1)), i = 0..k, of the polynomial
/// sum_i c_i y^i whose unique positive root is invert_occupancy(u).
Eigen::VectorXd occupancy_poly_coeffs(const QueueParams& params, OccupancyTarget target);

/// Number of strict sign alternations in a coefficient sequence, zeros
/// skipped. Throws on an all-zero sequence.
int sign_changes(const Eigen::VectorXd& seq);

/// Fixed point of the d-regular network with identical blocks: the unique
/// y > lambda with y * (1 - blocking(y)) = lambda. Requires 0 < lambda < k*mu.
UniformSolution solve_uniform(const QueueParams& params, double lambda, int degree);

} // namespace curbflow
