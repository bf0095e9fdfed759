#include "kancast/bspline.hpp"

#include <algorithm>
#include <cmath>

namespace kancast {

namespace {

// Nonzero basis values of degree `deg` at `span` (knots[span] <= x < knots[span+1]).
// Returns deg+1 values for basis indices span-deg .. span.
std::vector<double> nonzero_basis(const std::vector<double>& knots, int span,
                                  double x, int deg) {
    std::vector<double> vals(static_cast<size_t>(deg) + 1, 0.0);
    std::vector<double> left(static_cast<size_t>(deg) + 1, 0.0);
    std::vector<double> right(static_cast<size_t>(deg) + 1, 0.0);
    vals[0] = 1.0;
    for (int j = 1; j <= deg; ++j) {
        left[j] = x - knots[span + 1 - j];
        right[j] = knots[span + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            double tmp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        vals[j] = saved;
    }
    return vals;
}

} // namespace

BSplineBasis::BSplineBasis(const GridSpec& spec) : spec_(spec) {
    if (!(spec.lower < spec.upper))
        throw DegenerateDomain("B-spline domain requires lower < upper, got [" +
                               std::to_string(spec.lower) + ", " +
                               std::to_string(spec.upper) + "]");
    if (spec.grid_size < 1)
        throw DegenerateDomain("grid_size must be positive");
    if (spec.order < 0)
        throw OrderTooLow("order must be nonnegative");

    const int g = spec.grid_size;
    const int k = spec.order;
    const double h = (spec.upper - spec.lower) / g;
    knots_.resize(static_cast<size_t>(g + 2 * k + 1));
    for (int i = 0; i <= g + 2 * k; ++i)
        knots_[static_cast<size_t>(i)] = spec.lower + (i - k) * h;
}

int BSplineBasis::find_span(double x) const {
    const int k = spec_.order;
    const int g = spec_.grid_size;
    // Interior spans run from index k to g+k-1.
    if (x >= spec_.upper) return g + k - 1;
    if (x <= spec_.lower) return k;
    int span = k + static_cast<int>((x - spec_.lower) / (spec_.upper - spec_.lower) * g);
    span = std::clamp(span, k, g + k - 1);
    // Guard against floating-point placement one cell off.
    while (span > k && x < knots_[static_cast<size_t>(span)]) --span;
    while (span < g + k - 1 && x >= knots_[static_cast<size_t>(span + 1)]) ++span;
    return span;
}

std::vector<double> BSplineBasis::eval(double x) const {
    const int k = spec_.order;
    const double xc = std::clamp(x, spec_.lower, spec_.upper);
    const int span = find_span(xc);
    const auto local = nonzero_basis(knots_, span, xc, k);
    std::vector<double> out(static_cast<size_t>(size()), 0.0);
    for (int r = 0; r <= k; ++r)
        out[static_cast<size_t>(span - k + r)] = local[static_cast<size_t>(r)];
    return out;
}

std::vector<double> BSplineBasis::eval_derivative(double x) const {
    std::vector<double> values, derivs;
    eval_with_derivative(x, values, derivs);
    return derivs;
}

void BSplineBasis::eval_with_derivative(double x, std::vector<double>& values,
                                        std::vector<double>& derivs) const {
    const int k = spec_.order;
    if (k < 1)
        throw OrderTooLow("derivative undefined for order-0 B-splines");
    const double xc = std::clamp(x, spec_.lower, spec_.upper);
    const int span = find_span(xc);

    const auto local = nonzero_basis(knots_, span, xc, k);
    const auto lower = nonzero_basis(knots_, span, xc, k - 1); // indices span-k+1..span

    values.assign(static_cast<size_t>(size()), 0.0);
    derivs.assign(static_cast<size_t>(size()), 0.0);
    for (int r = 0; r <= k; ++r)
        values[static_cast<size_t>(span - k + r)] = local[static_cast<size_t>(r)];

    // B'_{i,k} = k * ( B_{i,k-1}/(t_{i+k}-t_i) - B_{i+1,k-1}/(t_{i+k+1}-t_{i+1}) ).
    auto lower_val = [&](int i) -> double {
        int r = i - (span - k + 1);
        if (r < 0 || r > k - 1) return 0.0;
        return lower[static_cast<size_t>(r)];
    };
    for (int i = span - k; i <= span; ++i) {
        const double d1 = knots_[static_cast<size_t>(i + k)] - knots_[static_cast<size_t>(i)];
        const double d2 =
            knots_[static_cast<size_t>(i + k + 1)] - knots_[static_cast<size_t>(i + 1)];
        double d = 0.0;
        if (d1 > 0.0) d += lower_val(i) / d1;
        if (d2 > 0.0) d -= lower_val(i + 1) / d2;
        derivs[static_cast<size_t>(i)] = k * d;
    }
}

BSplineBasis make_basis(const GridSpec& spec) { return BSplineBasis(spec); }

} // namespace kancast
