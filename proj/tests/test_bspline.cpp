#include <doctest.h>

#include <cmath>
#include <random>

#include "kancast/bspline.hpp"

using kancast::BSplineBasis;
using kancast::GridSpec;

namespace {

// Independent recursive evaluation of a single basis function over the
// extended knot vector. 0/0 terms are treated as 0; the top boundary is
// folded into the last interior interval so the recursion agrees with the
// clamped evaluation of the library.
double recursive_basis(const std::vector<double>& knots, int i, int k, double x,
                       double upper) {
    if (k == 0) {
        if (x == upper) return knots[i] < upper && upper <= knots[i + 1] ? 1.0 : 0.0;
        return knots[i] <= x && x < knots[i + 1] ? 1.0 : 0.0;
    }
    double left = 0.0, right = 0.0;
    const double dl = knots[i + k] - knots[i];
    const double dr = knots[i + k + 1] - knots[i + 1];
    if (dl > 0.0) left = (x - knots[i]) / dl * recursive_basis(knots, i, k - 1, x, upper);
    if (dr > 0.0)
        right = (knots[i + k + 1] - x) / dr * recursive_basis(knots, i + 1, k - 1, x, upper);
    return left + right;
}

} // namespace

TEST_CASE("basis construction: knot counts and degenerate domains") {
    GridSpec minimal{0.0, 1.0, 1, 0};
    const auto b0 = kancast::make_basis(minimal);
    CHECK(b0.knots().size() == 2);
    CHECK(b0.knots()[0] == 0.0);
    CHECK(b0.knots()[1] == 1.0);
    CHECK(b0.size() == 1);

    GridSpec cubic{0.0, 1.0, 3, 3};
    const auto b3 = kancast::make_basis(cubic);
    CHECK(b3.knots().size() == 10); // G + 2k + 1
    CHECK(b3.size() == 6);
    // Uniform extension: same spacing everywhere, k knots beyond each end.
    const double h = 1.0 / 3.0;
    for (size_t i = 0; i + 1 < b3.knots().size(); ++i)
        CHECK(b3.knots()[i + 1] - b3.knots()[i] == doctest::Approx(h).epsilon(1e-12));
    CHECK(b3.knots().front() == doctest::Approx(-3.0 * h));
    CHECK(b3.knots().back() == doctest::Approx(1.0 + 3.0 * h));

    CHECK_THROWS_AS(kancast::make_basis(GridSpec{2.0, 2.0, 3, 3}),
                    kancast::DegenerateDomain);
    CHECK_THROWS_AS(kancast::make_basis(GridSpec{3.0, 2.0, 3, 3}),
                    kancast::DegenerateDomain);
}

TEST_CASE("order-0 basis is an interval indicator") {
    const auto b = kancast::make_basis(GridSpec{0.0, 2.0, 2, 0});
    const auto v = b.eval(0.5);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 0.0);
    const auto w = b.eval(1.5);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == 1.0);
}

TEST_CASE("partition of unity, nonnegativity and local support") {
    const auto b = kancast::make_basis(GridSpec{-2.0, 5.0, 3, 3});
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 5.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const double x = u(rng);
        const auto v = b.eval(x);
        double sum = 0.0;
        for (int i = 0; i < b.size(); ++i) {
            CHECK(v[static_cast<size_t>(i)] >= 0.0);
            sum += v[static_cast<size_t>(i)];
            // Local support: zero outside [knot_i, knot_{i+k+1}].
            if (x < b.knots()[static_cast<size_t>(i)] ||
                x > b.knots()[static_cast<size_t>(i) + 4])
                CHECK(v[static_cast<size_t>(i)] == 0.0);
        }
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
    // Endpoints included.
    for (double x : {-2.0, 5.0}) {
        double sum = 0.0;
        for (double vi : b.eval(x)) sum += vi;
        CHECK(std::abs(sum - 1.0) < 1e-12);
    }
}

TEST_CASE("values agree with the recursive evaluation") {
    const auto b = kancast::make_basis(GridSpec{0.0, 1.0, 3, 3});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto check_at = [&](double x) {
        const auto v = b.eval(x);
        for (int i = 0; i < b.size(); ++i) {
            const double ref = recursive_basis(b.knots(), i, 3, x, 1.0);
            CHECK(std::abs(v[static_cast<size_t>(i)] - ref) < 1e-12);
        }
    };
    check_at(0.5);
    check_at(0.0);
    check_at(1.0);
    for (int trial = 0; trial < 500; ++trial) check_at(u(rng));
}

TEST_CASE("derivatives: zero sum, finite-difference agreement, order-0 error") {
    const auto b = kancast::make_basis(GridSpec{-1.0, 3.0, 4, 3});
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-0.9, 2.9);
    const double h = 1e-6;
    for (int trial = 0; trial < 100; ++trial) {
        const double x = u(rng);
        const auto d = b.eval_derivative(x);
        const auto lo = b.eval(x - h);
        const auto hi = b.eval(x + h);
        double sum = 0.0;
        for (int i = 0; i < b.size(); ++i) {
            sum += d[static_cast<size_t>(i)];
            const double fd = (hi[static_cast<size_t>(i)] - lo[static_cast<size_t>(i)]) /
                              (2.0 * h);
            const double scale = std::max(1.0, std::abs(fd));
            CHECK(std::abs(d[static_cast<size_t>(i)] - fd) / scale < 1e-5);
        }
        CHECK(std::abs(sum) < 1e-10);
    }

    std::vector<double> values, derivs;
    b.eval_with_derivative(0.7, values, derivs);
    const auto v = b.eval(0.7);
    const auto d = b.eval_derivative(0.7);
    for (int i = 0; i < b.size(); ++i) {
        CHECK(values[static_cast<size_t>(i)] == v[static_cast<size_t>(i)]);
        CHECK(derivs[static_cast<size_t>(i)] == d[static_cast<size_t>(i)]);
    }

    const auto flat = kancast::make_basis(GridSpec{0.0, 1.0, 2, 0});
    CHECK_THROWS_AS(flat.eval_derivative(0.5), kancast::OrderTooLow);
}
