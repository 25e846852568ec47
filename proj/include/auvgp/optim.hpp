#pragma once

#include <functional>

#include "auvgp/types.hpp"

namespace auvgp {

struct BoxLbfgsOptions {
    int max_iterations = 500;
    double tol_df = 1e-7;    // stop when |f_new - f_old| drops below this
    double tol_grad = 1e-6;  // stop on projected gradient infinity norm
    int memory = 10;
    double lower = -7.0, upper = 7.0;
};

struct BoxLbfgsResult {
    Vec x;
    double f = 0;
    int iterations = 0;
    int f_evals = 0;
    int g_evals = 0;
    bool converged = false;
};

/// Limited-memory BFGS with box bounds handled by projection and a
/// backtracking Armijo line search. `value` may return +inf to reject a
/// trial point; `value_and_grad` is only called at accepted points.
BoxLbfgsResult minimize_box_lbfgs(
    const std::function<double(const Vec&)>& value,
    const std::function<double(const Vec&, Vec&)>& value_and_grad, Vec x0,
    const BoxLbfgsOptions& options);

}  // namespace auvgp
