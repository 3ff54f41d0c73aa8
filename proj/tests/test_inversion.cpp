#include <doctest.h>

#include <random>
#include <vector>

#include "curbflow/inversion.hpp"
#include "support/oracles.hpp"

using namespace curbflow;

namespace {

const std::vector<double> kGridU = {0.05, 0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45, 0.50,
                                    0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95, 0.98};
const std::vector<int> kGridK = {1, 2, 5, 10, 50};
const std::vector<double> kGridMu = {0.5, 1.0, 2.0};

// Coefficients of the uniform-network polynomial: same shape as the
// occupancy polynomial with u*k replaced by lambda/mu.
Eigen::VectorXd uniform_poly_coeffs(int k, double mu, double lambda) {
    Eigen::VectorXd coeffs(k + 1);
    double t = mu;
    for (int i = 0; i <= k; ++i) {
        if (i > 0) t /= i * mu;
        coeffs[i] = (i - lambda / mu) * t;
    }
    return coeffs;
}

} // namespace

TEST_SUITE_BEGIN("inversion");

TEST_CASE("inversion round trips the hand-computed examples") {
    CHECK(invert_occupancy(QueueParams(2, 1.0), 0.4) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(invert_occupancy(QueueParams(1, 1.0), 0.5) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(invert_occupancy(QueueParams(5, 2.0), 0.0) == 0.0);
    CHECK(invert_occupancy(QueueParams(1, 1.0), 0.0) == 0.0);
}

TEST_CASE("occupancy target domain") {
    CHECK_THROWS_AS(OccupancyTarget(-0.1), ValidationError);
    CHECK_THROWS_AS(OccupancyTarget(1.0), ValidationError);
    CHECK_THROWS_AS(OccupancyTarget(0.9995), ValidationError);
    CHECK_NOTHROW(OccupancyTarget{kOccupancyCap});
    CHECK_NOTHROW(OccupancyTarget{0.0});
}

TEST_CASE("round trip over the full grid") {
    for (int k : kGridK) {
        for (double mu : kGridMu) {
            const QueueParams params(k, mu);
            for (double u : kGridU) {
                const double y = invert_occupancy(params, u);
                CHECK(std::abs(occupancy(params, y) - u) <= 1e-9);
            }
        }
    }
}

TEST_CASE("sensitivity closed form for one stall") {
    // y = u/(1-u), dy/du = 1/(1-u)^2
    CHECK(arrival_sensitivity(QueueParams(1, 1.0), 0.5) == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(arrival_sensitivity(QueueParams(1, 1.0), 1e-7) == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("sensitivity matches central differences of the inverse") {
    for (int k : {1, 2, 5, 10}) {
        const QueueParams params(k, 1.0);
        for (double u : {0.2, 0.4, 0.6, 0.8, 0.9}) {
            const double h = 1e-6;
            const double fd = oracles::central_difference(
                [&](double v) { return invert_occupancy(params, v); }, u, h);
            CHECK(arrival_sensitivity(params, u) == doctest::Approx(fd).epsilon(1e-5));
        }
    }
    // mu scales the arrival axis
    const double base = arrival_sensitivity(QueueParams(3, 1.0), 0.6);
    CHECK(arrival_sensitivity(QueueParams(3, 2.0), 0.6) == doctest::Approx(2.0 * base).epsilon(1e-9));
}

TEST_CASE("curvature closed form for one stall") {
    // d2y/du2 = 2/(1-u)^3
    CHECK(arrival_curvature(QueueParams(1, 1.0), 0.5) == doctest::Approx(16.0).epsilon(1e-8));
    CHECK(arrival_curvature(QueueParams(1, 1.0), 1e-7) == doctest::Approx(2.0).epsilon(1e-5));
}

TEST_CASE("curvature matches second central differences") {
    for (int k : {2, 5, 10}) {
        const QueueParams params(k, 1.0);
        for (double u : {0.3, 0.5, 0.7, 0.9}) {
            const double h = 1e-4;
            const double fd = oracles::second_central_difference(
                [&](double v) { return invert_occupancy(params, v); }, u, h);
            const double curv = arrival_curvature(params, u);
            CHECK(curv >= 0.0);
            CHECK(curv == doctest::Approx(fd).epsilon(1e-4));
        }
    }
}

TEST_CASE("polynomial coefficients by direct formula") {
    const Eigen::VectorXd c1 = occupancy_poly_coeffs(QueueParams(1, 1.0), 0.5);
    CHECK(c1.size() == 2);
    CHECK(c1[0] == doctest::Approx(-0.5).epsilon(1e-14));
    CHECK(c1[1] == doctest::Approx(0.5).epsilon(1e-14));

    // s_1 = 1 - u*k vanishes at u*k = 1; s_2 = (2 - 1)/2! = 0.5.
    const Eigen::VectorXd c2 = occupancy_poly_coeffs(QueueParams(2, 1.0), 0.5);
    CHECK(c2[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(c2[1] == 0.0);
    CHECK(c2[2] == doctest::Approx(0.5).epsilon(1e-14));

    const Eigen::VectorXd c0 = occupancy_poly_coeffs(QueueParams(1, 1.0), 0.0);
    CHECK(c0[0] == 0.0);
    CHECK(c0[1] == 1.0);
}

TEST_CASE("polynomial vanishes at the inverted arrival rate") {
    for (int k : {1, 2, 5, 10}) {
        for (double mu : kGridMu) {
            const QueueParams params(k, mu);
            for (double u : {0.2, 0.5, 0.8, 0.95}) {
                const Eigen::VectorXd coeffs = occupancy_poly_coeffs(params, u);
                const double y = invert_occupancy(params, u);
                double value = 0.0, scale = 0.0, pow_y = 1.0;
                for (int i = 0; i <= k; ++i) {
                    value += coeffs[i] * pow_y;
                    scale = std::max(scale, std::abs(coeffs[i] * pow_y));
                    pow_y *= y;
                }
                CHECK(std::abs(value) <= 1e-8 * scale);
            }
        }
    }
}

TEST_CASE("sign change counting") {
    CHECK(sign_changes(Eigen::Vector2d(1.0, -1.0)) == 1);
    CHECK(sign_changes(Eigen::Vector3d(-1.0, 0.0, 0.25)) == 1);
    CHECK(sign_changes(Eigen::Vector3d(1.0, -2.0, 3.0)) == 2);
    CHECK(sign_changes(Eigen::Vector3d(1.0, 2.0, 3.0)) == 0);
    CHECK_THROWS_AS(sign_changes(Eigen::Vector3d(0.0, 0.0, 0.0)), ValidationError);
    CHECK_THROWS_AS(sign_changes(Eigen::VectorXd()), ValidationError);
}

TEST_CASE("occupancy polynomial has exactly one sign change") {
    for (int k : kGridK) {
        for (double mu : kGridMu) {
            for (double u : kGridU) {
                CHECK(sign_changes(occupancy_poly_coeffs(QueueParams(k, mu), u)) == 1);
            }
        }
    }
}

TEST_CASE("uniform-network polynomial has exactly one sign change") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = std::uniform_int_distribution<int>(1, 40)(rng);
        const double mu = std::uniform_real_distribution<double>(0.25, 4.0)(rng);
        const double lambda = k * mu * std::uniform_real_distribution<double>(1e-4, 0.9999)(rng);
        CHECK(sign_changes(uniform_poly_coeffs(k, mu, lambda)) == 1);
    }
}

TEST_CASE("uniform network hand example") {
    // y/(1+y) = 0.5 => y = 1; x = y*B/d = 0.5/4
    const auto sol = solve_uniform(QueueParams(1, 1.0), 0.5, 4);
    CHECK(sol.y == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(sol.per_neighbor_rejection == doctest::Approx(0.125).epsilon(1e-10));
    CHECK(sol.degree == 4);
}

TEST_CASE("uniform network limits and residuals") {
    const auto tiny = solve_uniform(QueueParams(1, 1.0), 1e-9, 1);
    CHECK(tiny.y < 1e-6);
    CHECK(tiny.y > 0.0);

    const auto sol = solve_uniform(QueueParams(2, 1.0), 1.5, 2);
    CHECK(sol.y > 1.5);
    CHECK(std::abs(sol.y * (1.0 - erlang_blocking(QueueParams(2, 1.0), sol.y)) - 1.5) <= 1e-10);
}

TEST_CASE("uniform network rejects unstable and invalid loads") {
    CHECK_THROWS_AS(solve_uniform(QueueParams(2, 1.0), 2.0, 1), InstabilityError);
    CHECK_THROWS_AS(solve_uniform(QueueParams(2, 1.0), 5.0, 1), InstabilityError);
    CHECK_THROWS_AS(solve_uniform(QueueParams(2, 1.0), 0.0, 1), ValidationError);
    CHECK_THROWS_AS(solve_uniform(QueueParams(2, 1.0), -1.0, 1), ValidationError);
    CHECK_THROWS_AS(solve_uniform(QueueParams(2, 1.0), 1.0, 0), ValidationError);
}

TEST_CASE("uniform network random loads stay above lambda") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 300; ++trial) {
        const int k = std::uniform_int_distribution<int>(1, 40)(rng);
        const double mu = std::uniform_real_distribution<double>(0.25, 4.0)(rng);
        const double lambda = k * mu * std::uniform_real_distribution<double>(0.001, 0.999)(rng);
        const int d = std::uniform_int_distribution<int>(1, 6)(rng);
        const auto sol = solve_uniform(QueueParams(k, mu), lambda, d);
        CHECK(sol.y > lambda);
        CHECK(sol.per_neighbor_rejection >= 0.0);
        CHECK(sol.residual <= 1e-10);
    }
}

TEST_CASE("implicit derivative is positive everywhere sampled") {
    for (int k : kGridK) {
        for (double mu : kGridMu) {
            for (double u : kGridU) {
                CHECK(arrival_sensitivity(QueueParams(k, mu), u) > 0.0);
            }
        }
    }
}

TEST_CASE("curvature certificate holds everywhere sampled") {
    for (int k : kGridK) {
        for (double mu : kGridMu) {
            for (double u : kGridU) {
                CHECK(arrival_curvature(QueueParams(k, mu), u) >= -1e-8);
                CHECK(convexity_margin(QueueParams(k, mu), u) >= -1e-8);
            }
        }
    }
    // equivalently: forward differences of the inverse are nondecreasing
    for (int k : {1, 5, 20}) {
        const QueueParams params(k, 1.0);
        double prev_diff = -1.0;
        for (double u = 0.05; u <= 0.96; u += 0.05) {
            const double diff = invert_occupancy(params, u + 0.04) - invert_occupancy(params, u);
            CHECK(diff >= prev_diff);
            prev_diff = diff;
        }
    }
}

TEST_CASE("solution pairs satisfy 2/y' + 2 >= x for small stall counts") {
    // The bound holds wherever x = k*u stays below 2, i.e. k <= 2; beyond
    // that it fails (k = 50, u = 0.8 gives 2/y' + 2 ~ 3.5 against x = 40)
    // while the convexity certificate itself stays nonnegative.
    for (int k : {1, 2}) {
        for (double u : kGridU) {
            const QueueParams params(k, 1.0);
            const double yp = arrival_sensitivity(params, u) / k; // dy/dx at mu = 1
            const double x = k * u;
            CHECK(2.0 / yp + 2.0 >= x - 1e-9);
        }
    }
    // Where the bound breaks, the certificate still holds.
    const QueueParams big(50, 1.0);
    const double yp = arrival_sensitivity(big, 0.8) / 50.0;
    CHECK(2.0 / yp + 2.0 < 50.0 * 0.8);
    CHECK(convexity_margin(big, 0.8) >= 0.0);
}

TEST_CASE("arrival rate needed grows with a sharp elbow near full occupancy") {
    const QueueParams params(10, 1.0);
    const double y82 = invert_occupancy(params, 0.82);
    const double y90 = invert_occupancy(params, 0.90);
    const double y98 = invert_occupancy(params, 0.98);
    CHECK(y98 - y90 > y90 - y82);
}

TEST_SUITE_END();
