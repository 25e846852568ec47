#include "auvgp/optim.hpp"

#include <cmath>
#include <deque>

namespace auvgp {

namespace {

Vec clamp_to_box(Vec x, double lo, double hi) {
    return x.cwiseMax(lo).cwiseMin(hi);
}

/// Infinity norm of the gradient with components pointing out of the box
/// zeroed; those directions cannot reduce f any further.
double projected_grad_norm(const Vec& x, const Vec& g, double lo, double hi) {
    double norm = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const bool blocked =
            (x(i) <= lo && g(i) > 0) || (x(i) >= hi && g(i) < 0);
        if (!blocked) norm = std::max(norm, std::abs(g(i)));
    }
    return norm;
}

struct Correction {
    Vec s, y;
    double rho;
};

Vec two_loop_direction(const std::deque<Correction>& mem, const Vec& g) {
    Vec q = g;
    std::vector<double> a(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
        a[i] = mem[i].rho * mem[i].s.dot(q);
        q -= a[i] * mem[i].y;
    }
    if (!mem.empty()) {
        const auto& last = mem.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < mem.size(); ++i) {
        const double b = mem[i].rho * mem[i].y.dot(q);
        q += (a[i] - b) * mem[i].s;
    }
    return -q;
}

}  // namespace

BoxLbfgsResult minimize_box_lbfgs(
    const std::function<double(const Vec&)>& value,
    const std::function<double(const Vec&, Vec&)>& value_and_grad, Vec x0,
    const BoxLbfgsOptions& options) {
    constexpr double kArmijo = 1e-4;
    constexpr double kMinStep = 1e-16;

    BoxLbfgsResult res;
    res.x = clamp_to_box(std::move(x0), options.lower, options.upper);
    Vec g(res.x.size());
    res.f = value_and_grad(res.x, g);
    ++res.g_evals;
    if (!std::isfinite(res.f)) return res;

    std::deque<Correction> mem;
    // Largest coordinate movement of the last accepted step; trial steps
    // start at four times this so a cliff-induced backtrack is not paid
    // again from scratch every iteration.
    double last_move = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        if (projected_grad_norm(res.x, g, options.lower, options.upper) <
            options.tol_grad) {
            res.converged = true;
            break;
        }

        Vec x_new;
        double f_new = 0;
        bool full_step = false;
        auto backtrack = [&](const Vec& d, double t0, double t_natural) {
            double t = t0;
            while (t >= kMinStep) {
                x_new = clamp_to_box(res.x + t * d, options.lower,
                                     options.upper);
                const Vec step = x_new - res.x;
                if (step.lpNorm<Eigen::Infinity>() == 0) return false;
                f_new = value(x_new);
                ++res.f_evals;
                if (std::isfinite(f_new) &&
                    f_new <= res.f + kArmijo * g.dot(step)) {
                    full_step = t == t_natural;
                    return true;
                }
                t *= 0.5;
            }
            return false;
        };
        // Scale raw gradient steps so the largest coordinate moves by one;
        // two-loop directions already carry curvature scaling.
        const auto gradient_step = [&] {
            return 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
        };

        Vec d = two_loop_direction(mem, g);
        if (d.dot(g) >= 0) {
            mem.clear();
            d = -g;
        }
        // Cap the trial step so no coordinate moves more than 2 log-units
        // at once; the likelihood surface has cliffs that a quasi-Newton
        // scale estimate from a handful of pairs routinely overshoots. The
        // warm-start cap additionally keeps the trial near the last accepted
        // movement so repeated backtracking is not paid every iteration; it
        // grows back fourfold per accepted step.
        const double d_inf = std::max(1e-300, d.lpNorm<Eigen::Infinity>());
        const double natural =
            mem.empty() ? std::min(gradient_step(),
                                   2.0 / std::max(1.0, d_inf))
                        : std::min(1.0, 2.0 / std::max(1.0, d_inf));
        const double t0 = std::min(natural, 4.0 * last_move / d_inf);
        bool accepted = backtrack(d, t0, natural);
        if (!accepted && !mem.empty()) {
            // The quasi-Newton direction is unusable; drop the stale
            // curvature pairs and retry along the gradient before giving up.
            mem.clear();
            last_move = std::numeric_limits<double>::infinity();
            d = -g;
            accepted = backtrack(d, gradient_step(), gradient_step());
        }
        if (!accepted) {
            // No admissible step left along the gradient; the iterate is as
            // converged as the line search can make it.
            res.converged = true;
            break;
        }
        last_move = (x_new - res.x).lpNorm<Eigen::Infinity>();
        Vec g_new(res.x.size());
        const double f_check = value_and_grad(x_new, g_new);
        ++res.g_evals;
        f_new = f_check;

        const Vec s = x_new - res.x;
        const Vec y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            mem.push_back({s, y, 1.0 / sy});
            if (static_cast<int>(mem.size()) > options.memory)
                mem.pop_front();
        }
        const double df = std::abs(res.f - f_new);
        res.x = std::move(x_new);
        res.f = f_new;
        g = std::move(g_new);
        res.iterations = iter + 1;
        // A tiny improvement only signals convergence when the step was
        // taken at full trial length; a heavily backtracked step says the
        // direction was bad, not that the surface is flat.
        if (df < options.tol_df && full_step) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace auvgp
