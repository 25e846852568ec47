#include "auvgp/linalg.hpp"

#include <cmath>
#include <mutex>
#include <numbers>

#include <omp.h>

#include "auvgp/kernels.hpp"

#ifdef AUVGP_USE_LAPACKE
#include <lapacke.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace auvgp {

namespace {

#ifdef AUVGP_USE_LAPACKE
// OpenBLAS is kept single threaded: the library parallelizes at the kernel
// level itself, and results must not depend on BLAS scheduling.
void pin_blas_threads() {
    static std::once_flag flag;
    std::call_once(flag, [] { openblas_set_num_threads(1); });
}

bool try_factor(Mat& a) {
    pin_blas_threads();
    const auto n = static_cast<lapack_int>(a.rows());
    return LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', n, a.data(), n) == 0;
}
#else
bool try_factor(Mat& a) {
    Eigen::LLT<Mat> llt(a);
    if (llt.info() != Eigen::Success) return false;
    a = llt.matrixL();
    return true;
}
#endif

}  // namespace

CholeskyFactor factor_spd(const Mat& k, double base_jitter) {
    if (k.rows() != k.cols()) throw Error("factor_spd: matrix not square");
    constexpr int kMaxEscalations = 4;
    for (int level = 0; level <= kMaxEscalations; ++level) {
        const double extra = level == 0
                                 ? 0.0
                                 : base_jitter * (std::pow(10.0, level) - 1.0);
        Mat a = k;
        if (extra > 0) a.diagonal().array() += extra;
        if (try_factor(a)) {
            CholeskyFactor f;
            f.L = std::move(a);
            f.jitter_level = level;
            f.jitter_total = base_jitter + extra;
            return f;
        }
    }
    throw NotPositiveDefinite(
        "covariance not positive definite after jitter escalation to " +
            std::to_string(base_jitter * std::pow(10.0, kMaxEscalations)),
        kMaxEscalations);
}

double log_det(const CholeskyFactor& f) {
    return 2.0 * f.L.diagonal().array().log().sum();
}

Vec chol_solve(const CholeskyFactor& f, const Vec& b) {
    Vec x = f.L.triangularView<Eigen::Lower>().solve(b);
    f.L.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
}

Mat spd_inverse(const CholeskyFactor& f) {
    const auto n = f.L.rows();
#ifdef AUVGP_USE_LAPACKE
    pin_blas_threads();
    Mat inv = f.L;
    if (LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', static_cast<lapack_int>(n),
                       inv.data(), static_cast<lapack_int>(n)) != 0)
        throw Error("spd_inverse: dpotri failed");
    inv.triangularView<Eigen::StrictlyUpper>() =
        inv.triangularView<Eigen::StrictlyLower>().transpose();
    return inv;
#else
    // Column blocks of the identity are solved independently; writes land in
    // disjoint column ranges, so any thread count gives the same matrix.
    Mat inv(n, n);
    const int n_threads = thread_count();
    const auto block = std::max<Eigen::Index>(1, (n + 4 * n_threads - 1) /
                                                     (4 * n_threads));
#pragma omp parallel for schedule(static) num_threads(n_threads)
    for (Eigen::Index j0 = 0; j0 < n; j0 += block) {
        const auto w = std::min(block, n - j0);
        Mat rhs = Mat::Zero(n, w);
        for (Eigen::Index j = 0; j < w; ++j) rhs(j0 + j, j) = 1.0;
        f.L.triangularView<Eigen::Lower>().solveInPlace(rhs);
        f.L.triangularView<Eigen::Lower>().transpose().solveInPlace(rhs);
        inv.middleCols(j0, w) = rhs;
    }
    return inv;
#endif
}

Mat spd_inverse_serial(const CholeskyFactor& f) {
    const auto n = f.L.rows();
    Mat inv = Mat::Identity(n, n);
    f.L.triangularView<Eigen::Lower>().solveInPlace(inv);
    f.L.triangularView<Eigen::Lower>().transpose().solveInPlace(inv);
    return inv;
}

}  // namespace auvgp
