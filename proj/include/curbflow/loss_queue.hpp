#pragma once

#include <Eigen/Core>

#include "curbflow/errors.hpp"

namespace curbflow {

/// One block-face: k curb stalls served at rate mu each (1/hour).
/// Mean parking duration is 1/mu.
struct QueueParams {
    int k = 1;
    double mu = 1.0;

    QueueParams() = default;
    QueueParams(int stalls, double service_rate) : k(stalls), mu(service_rate) { validate(); }

    void validate() const;
};

/// Stationary snapshot of a single loss queue at total arrival rate y.
///
/// pi has length k+1; pi[i] is the long-run probability that i stalls are
/// occupied. blocking == pi[k]. occupancy == y * (1 - blocking) / (k * mu).
struct LossProfile {
    double y = 0.0;
    Eigen::VectorXd pi;
    double blocking = 0.0;
    double occupancy = 0.0;
};

/// Stationary distribution of the k-stall loss queue offered rate y.
/// Evaluated by the multiplicative term recurrence with on-the-fly rescaling,
/// so it stays finite for stall counts far beyond the factorial overflow point.
LossProfile stationary_distribution(const QueueParams& params, double y);

/// Probability an arrival finds every stall taken. Uses the one-pass
/// fixed-point recursion B_j = rho*B_{j-1} / (j + rho*B_{j-1}); stable up to
/// k ~ 1e4 and beyond.
double erlang_blocking(const QueueParams& params, double y);

/// Expected fraction of stalls in use: y * (1 - blocking) / (k * mu).
/// Strictly increasing in y, approaching 1 from below.
double occupancy(const QueueParams& params, double y);

/// d occupancy / dy, from the differentiated blocking recursion.
/// Strictly positive for all y >= 0.
double occupancy_slope(const QueueParams& params, double y);

} // namespace curbflow
