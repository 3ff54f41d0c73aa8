#pragma once

// Test-only oracles, independent of the library's computation paths:
// the stationary distribution from the explicit transition rate matrix,
// the blocking probability by direct normalized summation, and plain
// finite differences.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "curbflow/loss_queue.hpp"

namespace oracles {

// pi from pi*Q = 0, sum(pi) = 1, solved as a dense least-squares system on
// the explicit (k+1)x(k+1) birth-death rate matrix.
inline Eigen::VectorXd stationary_from_rate_matrix(int k, double mu, double y) {
    const int n = k + 1;
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (i < k) q(i, i + 1) = y;
        if (i > 0) q(i, i - 1) = i * mu;
        q(i, i) = -(q.row(i).sum());
    }
    Eigen::MatrixXd a(n + 1, n);
    a.topRows(n) = q.transpose();
    a.bottomRows(1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs[n] = 1.0;
    return a.colPivHouseholderQr().solve(rhs);
}

// Erlang blocking by direct normalized summation in extended precision.
inline double blocking_direct_sum(int k, double mu, double y) {
    const long double rho = static_cast<long double>(y) / mu;
    long double term = 1.0L;
    long double sum = 1.0L;
    for (int i = 1; i <= k; ++i) {
        term *= rho / i;
        sum += term;
    }
    return static_cast<double>(term / sum);
}

template <typename Fn>
double central_difference(Fn&& fn, double x, double h) {
    return (fn(x + h) - fn(x - h)) / (2.0 * h);
}

template <typename Fn>
double second_central_difference(Fn&& fn, double x, double h) {
    return (fn(x + h) - 2.0 * fn(x) + fn(x - h)) / (h * h);
}

} // namespace oracles
