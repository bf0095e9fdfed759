#include "kancast/lbfgs.hpp"

#include <cmath>
#include <limits>
#include <deque>

namespace kancast {

namespace {

constexpr double kWolfeC2 = 0.9;

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

struct Pair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

// Two-loop recursion: d = -H * g.
std::vector<double> search_direction(const std::deque<Pair>& pairs,
                                     const std::vector<double>& g) {
    std::vector<double> q = g;
    std::vector<double> alpha(pairs.size());
    for (size_t i = pairs.size(); i-- > 0;) {
        alpha[i] = pairs[i].rho * dot(pairs[i].s, q);
        for (size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * pairs[i].y[j];
    }
    if (!pairs.empty()) {
        const Pair& last = pairs.back();
        const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
        for (auto& v : q) v *= gamma;
    }
    for (size_t i = 0; i < pairs.size(); ++i) {
        const double beta = pairs[i].rho * dot(pairs[i].y, q);
        for (size_t j = 0; j < q.size(); ++j) q[j] += (alpha[i] - beta) * pairs[i].s[j];
    }
    for (auto& v : q) v = -v;
    return q;
}

} // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, const std::vector<double>& x0,
                           const LbfgsOptions& options) {
    LbfgsResult result;
    result.x = x0;
    std::vector<double> g(x0.size());
    double f = objective(result.x, g);
    if (!std::isfinite(f))
        throw NonFiniteObjective("objective is not finite at the starting point");
    for (double gi : g)
        if (!std::isfinite(gi))
            throw NonFiniteObjective("gradient is not finite at the starting point");

    std::deque<Pair> pairs;
    bool retried_after_reset = false;

    for (int iter = 0; iter < options.max_iterations; ++iter) {
        result.grad_norm = norm2(g);
        if (result.grad_norm < options.grad_tolerance) {
            result.converged = true;
            break;
        }

        std::vector<double> d = search_direction(pairs, g);
        double dg = dot(d, g);
        if (dg >= 0.0) {
            // Not a descent direction; fall back to steepest descent.
            pairs.clear();
            d = g;
            for (auto& v : d) v = -v;
            dg = -dot(g, g);
        }

        // Bracketing line search: backtrack (halve) while Armijo fails,
        // expand while the weak-Wolfe curvature condition fails. Without the
        // curvature condition the accepted steps can carry s.y <= 0 in
        // indefinite regions, every pair gets rejected, and the direction
        // goes stale.
        double step = pairs.empty() ? options.initial_step : 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        bool accepted = false;
        std::vector<double> x_new(result.x.size());
        std::vector<double> g_new(result.x.size());
        double f_new = f;
        double armijo_step = 0.0, armijo_f = f;
        std::vector<double> armijo_x, armijo_g;
        for (int ls = 0; ls < options.max_line_search; ++ls) {
            for (size_t j = 0; j < result.x.size(); ++j)
                x_new[j] = result.x[j] + step * d[j];
            f_new = objective(x_new, g_new);
            if (!std::isfinite(f_new) ||
                f_new > f + options.armijo_c1 * step * dg) {
                hi = step;
                step = 0.5 * (lo + hi);
            } else if (dot(g_new, d) < kWolfeC2 * dg) {
                // Sufficient decrease but slope still steep: remember the
                // point, then try a longer step.
                if (step > armijo_step) {
                    armijo_step = step;
                    armijo_f = f_new;
                    armijo_x = x_new;
                    armijo_g = g_new;
                }
                lo = step;
                step = std::isinf(hi) ? 2.0 * step : 0.5 * (lo + hi);
            } else {
                accepted = true;
                break;
            }
        }
        if (!accepted && armijo_step > 0.0) {
            // Fall back to the best Armijo point; the curvature filter below
            // decides whether its pair is usable.
            x_new = std::move(armijo_x);
            g_new = std::move(armijo_g);
            f_new = armijo_f;
            accepted = true;
        }

        if (!accepted) {
            if (!pairs.empty() && !retried_after_reset) {
                // Drop stale curvature and retry from steepest descent once.
                pairs.clear();
                retried_after_reset = true;
                continue;
            }
            result.line_search_failed = true;
            break;
        }
        retried_after_reset = false;

        Pair pair;
        pair.s.resize(result.x.size());
        pair.y.resize(result.x.size());
        for (size_t j = 0; j < result.x.size(); ++j) {
            pair.s[j] = x_new[j] - result.x[j];
            pair.y[j] = g_new[j] - g[j];
        }
        const double sy = dot(pair.s, pair.y);
        if (sy > 1e-12 * norm2(pair.s) * norm2(pair.y)) {
            pair.rho = 1.0 / sy;
            pairs.push_back(std::move(pair));
            if (static_cast<int>(pairs.size()) > options.history) pairs.pop_front();
        }

        result.x = std::move(x_new);
        x_new.resize(result.x.size());
        g = g_new;
        f = f_new;
        result.iterations = iter + 1;
    }

    result.value = f;
    result.grad_norm = norm2(g);
    if (result.grad_norm < options.grad_tolerance) result.converged = true;
    return result;
}

} // namespace kancast
