#pragma once

#include <functional>
#include <vector>

#include "kancast/errors.hpp"

namespace kancast {

// value + gradient at a point
using Objective =
    std::function<double(const std::vector<double>&, std::vector<double>&)>;

struct LbfgsOptions {
    int history = 10;          // two-loop recursion memory
    int max_iterations = 100;
    double grad_tolerance = 1e-8;
    double initial_step = 1.0; // line-search trial step on the first iteration
    double armijo_c1 = 1e-4;
    int max_line_search = 30;
};

struct LbfgsResult {
    std::vector<double> x;
    double value = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;       // grad norm below tolerance
    bool line_search_failed = false;
};

// Limited-memory BFGS with two-loop recursion and a bracketing line search:
// backtracking on the Armijo condition, then bisection/expansion until the
// weak Wolfe curvature condition holds (so accepted steps keep s.y > 0). The
// first iteration (steepest descent) trials initial_step; once curvature
// pairs exist the trial step is 1 with the standard y.s/y.y scaling. On
// line-search failure the history is dropped and the step retried once
// before giving up.
LbfgsResult lbfgs_minimize(const Objective& objective, const std::vector<double>& x0,
                           const LbfgsOptions& options = {});

} // namespace kancast
