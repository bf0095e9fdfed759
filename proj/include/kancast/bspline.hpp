#pragma once

#include <vector>

#include "kancast/errors.hpp"

namespace kancast {

// Uniform B-spline grid: `grid_size` intervals on [lower, upper], splines of
// order (degree) `order`. Basis count is grid_size + order.
struct GridSpec {
    double lower = -1.0;
    double upper = 1.0;
    int grid_size = 3;
    int order = 3;

    int basis_count() const { return grid_size + order; }
};

// Extended knot vector and evaluation routines. Immutable after construction;
// safe to share across threads.
class BSplineBasis {
public:
    explicit BSplineBasis(const GridSpec& spec);

    const GridSpec& spec() const { return spec_; }
    const std::vector<double>& knots() const { return knots_; }
    int size() const { return spec_.basis_count(); }

    // All basis values at x (x is clamped to [lower, upper] first).
    // Nonnegative, sum to 1 on the domain.
    std::vector<double> eval(double x) const;

    // d/dx of each basis function. Requires order >= 1.
    std::vector<double> eval_derivative(double x) const;

    // Evaluates both in one pass; out params sized to basis_count().
    void eval_with_derivative(double x, std::vector<double>& values,
                              std::vector<double>& derivs) const;

private:
    int find_span(double x) const;

    GridSpec spec_;
    std::vector<double> knots_; // grid_size + 2*order + 1 entries, nondecreasing
};

BSplineBasis make_basis(const GridSpec& spec);

} // namespace kancast
