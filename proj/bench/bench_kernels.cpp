// Compares the OpenMP kernel paths against their serial references on a
// protocol-sized instance. Run with --threads N (or MOGP_THREADS) to see
// scaling; wall times are medians of repeated runs.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include "auvgp/kernels.hpp"
#include "auvgp/linalg.hpp"
#include "auvgp/mogp.hpp"

using namespace auvgp;

namespace {

double time_median(int repeats, const std::function<void()>& fn) {
    std::vector<double> times;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        times.push_back(std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0)
                            .count());
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

}  // namespace

int main(int argc, char** argv) {
    int n_per_output = 200;
    int repeats = 3;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
            set_thread_count(std::atoi(argv[++i]));
        else if (std::strcmp(argv[i], "--rows") == 0 && i + 1 < argc)
            n_per_output = std::atoi(argv[++i]);
        else if (std::strcmp(argv[i], "--repeats") == 0 && i + 1 < argc)
            repeats = std::atoi(argv[++i]);
    }

    const int Q = 6, R = 2, D = 27;
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Hyperparameters hp = Hyperparameters::make(Q, R, D);
    for (int q = 0; q < Q; ++q)
        for (int r = 0; r < R; ++r) {
            hp.S(q, r) = unif(rng);
            for (int d = 0; d < D; ++d)
                hp.log_ell(q * R + r, d) = 0.5 * unif(rng);
        }
    for (int r = 0; r < R; ++r) hp.log_sigma_u2(r) = 0.3 * unif(rng);
    hp.log_sigma_w2.setConstant(-3.0);

    std::vector<Mat> X;
    Mat shared(n_per_output, D);
    for (int i = 0; i < n_per_output; ++i)
        for (int d = 0; d < D; ++d) shared(i, d) = unif(rng);
    for (int q = 0; q < Q; ++q) X.push_back(shared);
    Vec y(Q * n_per_output);
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = unif(rng);

    std::printf("rows/output %d (NQ = %d), threads %d, repeats %d\n",
                n_per_output, Q * n_per_output, thread_count(), repeats);

    Mat k_parallel, k_serial;
    double base = 0;
    const double t_asm_par = time_median(repeats, [&] {
        k_parallel = assemble_full_covariance(hp, X, &base);
    });
    const double t_asm_ser = time_median(repeats, [&] {
        k_serial = assemble_full_covariance_serial(hp, X, &base);
    });
    const double asm_err = (k_parallel - k_serial).cwiseAbs().maxCoeff();

    const CholeskyFactor f = factor_spd(k_parallel, base);
    const Vec alpha = chol_solve(f, y);

    Mat kinv_fast, kinv_ref;
    const double t_inv_fast =
        time_median(repeats, [&] { kinv_fast = spd_inverse(f); });
    const double t_inv_ser =
        time_median(repeats, [&] { kinv_ref = spd_inverse_serial(f); });
    const double inv_err = (kinv_fast - kinv_ref).cwiseAbs().maxCoeff();

    const Mat asym = alpha * alpha.transpose() - kinv_fast;
    Vec g_par, g_ser;
    const double t_grad_par = time_median(repeats, [&] {
        g_par = accumulate_likelihood_gradient(hp, X, asym);
    });
    const double t_grad_ser = time_median(repeats, [&] {
        g_ser = accumulate_likelihood_gradient_serial(hp, X, asym);
    });
    const double grad_err = (g_par - g_ser).cwiseAbs().maxCoeff() /
                            std::max(1.0, g_ser.cwiseAbs().maxCoeff());

    std::printf("%-22s %10s %10s %9s %12s\n", "kernel", "parallel", "serial",
                "speedup", "max diff");
    std::printf("%-22s %9.4fs %9.4fs %8.2fx %12.3e\n", "assemble covariance",
                t_asm_par, t_asm_ser, t_asm_ser / t_asm_par, asm_err);
    std::printf("%-22s %9.4fs %9.4fs %8.2fx %12.3e\n", "spd inverse",
                t_inv_fast, t_inv_ser, t_inv_ser / t_inv_fast, inv_err);
    std::printf("%-22s %9.4fs %9.4fs %8.2fx %12.3e\n", "likelihood gradient",
                t_grad_par, t_grad_ser, t_grad_ser / t_grad_par, grad_err);
    return 0;
}
