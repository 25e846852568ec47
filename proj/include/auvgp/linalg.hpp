#pragma once

#include "auvgp/types.hpp"

namespace auvgp {

/// Lower Cholesky factor of an SPD matrix plus the jitter bookkeeping from
/// factor_spd. Only the lower triangle of L is meaningful.
struct CholeskyFactor {
    Mat L;
    int jitter_level = 0;      // 0 means the base jitter alone sufficed
    double jitter_total = 0;   // absolute diagonal shift including the base
};

/// Factors K (which already carries the base jitter on its diagonal).
/// On failure the diagonal shift is escalated by x10 up to four times, i.e.
/// from base (1e-8 scale) to 1e-4 scale; if that still fails, throws
/// NotPositiveDefinite carrying the last escalation level.
CholeskyFactor factor_spd(const Mat& k, double base_jitter);

double log_det(const CholeskyFactor& f);

/// K^-1 b via two triangular solves.
Vec chol_solve(const CholeskyFactor& f, const Vec& b);

/// Full K^-1. Uses LAPACK's triangular inversion when available, otherwise
/// OpenMP column-block triangular solves.
Mat spd_inverse(const CholeskyFactor& f);

/// Single-threaded Eigen reference of spd_inverse, kept for testing.
Mat spd_inverse_serial(const CholeskyFactor& f);

}  // namespace auvgp
