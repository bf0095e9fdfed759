#include <doctest.h>

#include <cmath>
#include <limits>

#include "kancast/lbfgs.hpp"

using namespace kancast;

namespace {

double quadratic(const std::vector<double>& x, std::vector<double>& g) {
    g = {2.0 * (x[0] - 3.0), 2.0 * (x[1] + 1.0)};
    return (x[0] - 3.0) * (x[0] - 3.0) + (x[1] + 1.0) * (x[1] + 1.0);
}

double rosenbrock(const std::vector<double>& x, std::vector<double>& g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g = {-2.0 * a - 400.0 * x[0] * b, 200.0 * b};
    return a * a + 100.0 * b * b;
}

} // namespace

TEST_CASE("convex quadratic solved to tight tolerance in few iterations") {
    const auto r = lbfgs_minimize(quadratic, {0.0, 0.0});
    CHECK(r.converged);
    CHECK(r.iterations <= 50);
    CHECK(std::abs(r.x[0] - 3.0) < 1e-8);
    CHECK(std::abs(r.x[1] + 1.0) < 1e-8);
}

TEST_CASE("Rosenbrock from the classic start") {
    LbfgsOptions options;
    options.max_iterations = 500;
    const auto r = lbfgs_minimize(rosenbrock, {-1.2, 1.0}, options);
    CHECK(std::abs(r.x[0] - 1.0) < 1e-5);
    CHECK(std::abs(r.x[1] - 1.0) < 1e-5);
}

TEST_CASE("starting at the minimum leaves parameters unchanged") {
    const auto r = lbfgs_minimize(quadratic, {3.0, -1.0});
    CHECK(r.converged);
    CHECK(r.iterations == 0);
    CHECK(r.x[0] == 3.0);
    CHECK(r.x[1] == -1.0);
}

TEST_CASE("deterministic: repeated runs give identical trajectories") {
    const auto a = lbfgs_minimize(rosenbrock, {-1.2, 1.0});
    const auto b = lbfgs_minimize(rosenbrock, {-1.2, 1.0});
    CHECK(a.x == b.x);
    CHECK(a.value == b.value);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("non-finite objective at the start is rejected") {
    auto bad = [](const std::vector<double>& x, std::vector<double>& g) {
        g.assign(x.size(), 0.0);
        return std::numeric_limits<double>::quiet_NaN();
    };
    CHECK_THROWS_AS(lbfgs_minimize(bad, {1.0}), NonFiniteObjective);
}

TEST_CASE("initial_step scales only the first trial step") {
    // With a tiny initial step, one iteration and one line-search trial the
    // move is exactly initial_step times the steepest-descent direction.
    LbfgsOptions options;
    options.max_iterations = 1;
    options.max_line_search = 1;
    options.initial_step = 1e-3;
    const auto r = lbfgs_minimize(quadratic, {0.0, 0.0}, options);
    CHECK(r.x[0] == doctest::Approx(1e-3 * 6.0));
    CHECK(r.x[1] == doctest::Approx(1e-3 * -2.0));
}
