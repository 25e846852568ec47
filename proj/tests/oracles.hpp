#pragma once

// Numerical oracles shared by the unit suites and the acceptance gate. Kept
// deliberately naive: each one recomputes a quantity the library produces in
// closed form, through an independent route (quadrature, dense inverse,
// finite differences), so agreement is evidence rather than tautology.

#include <cmath>
#include <random>

#include "auvgp/kernels.hpp"
#include "auvgp/types.hpp"

namespace oracles {

template <typename F>
double simpson_half(const F& f, double a, double m, double b, double fa,
                    double fm, double fb, double whole, double eps,
                    int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps)
        return left + right + delta / 15.0;
    return simpson_half(f, a, lm, m, fa, flm, fm, left, 0.5 * eps,
                        depth - 1) +
           simpson_half(f, m, rm, b, fm, frm, fb, right, 0.5 * eps,
                        depth - 1);
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double eps,
                        int depth = 28) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_half(f, a, m, b, fa, fm, fb, whole, eps, depth);
}

/// Convolved covariance between outputs q and s at (x, x2) by direct
/// numerical integration of sum_r sigma_ur^2 Int k_qr(x-z) k_sr(x2-z) dz
/// over each latent. Supports D = 1 and D = 2.
inline double quadrature_cross_covariance(const auvgp::Hyperparameters& hp,
                                          int q, int s, const auvgp::Vec& x,
                                          const auvgp::Vec& x2) {
    using auvgp::Vec;
    double total = 0.0;
    for (int r = 0; r < hp.R; ++r) {
        if (!hp.is_active(q, r) || !hp.is_active(s, r)) continue;
        const auto kq = [&](const Vec& u) {
            double quad = 0;
            for (int d = 0; d < hp.D; ++d) {
                const double l = hp.ell(q, r, d);
                quad += u(d) * u(d) / (l * l);
            }
            return hp.S(q, r) * std::exp(-0.5 * quad);
        };
        const auto ks = [&](const Vec& u) {
            double quad = 0;
            for (int d = 0; d < hp.D; ++d) {
                const double l = hp.ell(s, r, d);
                quad += u(d) * u(d) / (l * l);
            }
            return hp.S(s, r) * std::exp(-0.5 * quad);
        };
        double margin = 0;
        for (int d = 0; d < hp.D; ++d)
            margin = std::max({margin, hp.ell(q, r, d), hp.ell(s, r, d)});
        margin *= 14.0;

        double integral = 0;
        if (hp.D == 1) {
            const double lo = std::min(x(0), x2(0)) - margin;
            const double hi = std::max(x(0), x2(0)) + margin;
            const auto f = [&](double z) {
                Vec u1(1), u2(1);
                u1(0) = x(0) - z;
                u2(0) = x2(0) - z;
                return kq(u1) * ks(u2);
            };
            integral = adaptive_simpson(f, lo, hi, 1e-12);
        } else if (hp.D == 2) {
            const double lo0 = std::min(x(0), x2(0)) - margin;
            const double hi0 = std::max(x(0), x2(0)) + margin;
            const double lo1 = std::min(x(1), x2(1)) - margin;
            const double hi1 = std::max(x(1), x2(1)) + margin;
            const auto outer = [&](double z0) {
                const auto inner = [&](double z1) {
                    Vec u1(2), u2(2);
                    u1 << x(0) - z0, x(1) - z1;
                    u2 << x2(0) - z0, x2(1) - z1;
                    return kq(u1) * ks(u2);
                };
                return adaptive_simpson(inner, lo1, hi1, 1e-13);
            };
            integral = adaptive_simpson(outer, lo0, hi0, 1e-11);
        } else {
            throw auvgp::ConfigError(
                "quadrature_cross_covariance supports D = 1 or 2 only");
        }
        total += hp.sigma_u2(r) * integral;
    }
    return total;
}

/// Random but well-scaled hyperparameter draw: length scales within a factor
/// of two of one, order-one sensitivities of either sign, moderate latent
/// and small noise variances.
inline auvgp::Hyperparameters random_hyperparameters(
    int Q, int R, int D, std::mt19937_64& rng, bool independent_terms = false) {
    auvgp::Hyperparameters hp =
        auvgp::Hyperparameters::make(Q, R, D, independent_terms);
    std::uniform_real_distribution<double> ell(-0.7, 0.7);
    std::uniform_real_distribution<double> mag(0.3, 2.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_real_distribution<double> su(-1.0, 1.0);
    std::uniform_real_distribution<double> sw(-3.0, -1.0);
    for (int q = 0; q < hp.Q; ++q)
        for (int r = 0; r < hp.R; ++r) {
            if (!hp.is_active(q, r)) continue;
            hp.S(q, r) = (coin(rng) < 0.5 ? -1.0 : 1.0) * mag(rng);
            for (int d = 0; d < D; ++d)
                hp.log_ell(q * hp.R + r, d) = ell(rng);
        }
    for (int r = 0; r < hp.R; ++r) hp.log_sigma_u2(r) = su(rng);
    for (int q = 0; q < Q; ++q) hp.log_sigma_w2(q) = sw(rng);
    return hp;
}

inline std::vector<auvgp::Mat> random_inputs(int Q, int n, int D,
                                             std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    std::vector<auvgp::Mat> X;
    X.reserve(Q);
    for (int q = 0; q < Q; ++q) {
        auvgp::Mat block(n, D);
        for (int i = 0; i < n; ++i)
            for (int d = 0; d < D; ++d) block(i, d) = unif(rng);
        X.push_back(std::move(block));
    }
    return X;
}

inline auvgp::Vec random_point(int D, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(-2.0, 2.0);
    auvgp::Vec x(D);
    for (int d = 0; d < D; ++d) x(d) = unif(rng);
    return x;
}

}  // namespace oracles
