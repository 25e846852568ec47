#pragma once

#include <vector>

#include "auvgp/types.hpp"

#include "json.hpp"

namespace auvgp {

/// All free parameters of the convolved multi-output GP.
///
/// Q outputs, R latent white-noise functions, D regressor dimensions. Each
/// active (output q, latent r) pair owns a raw sensitivity S(q,r) and one
/// ARD length-scale per regressor dimension; each latent owns a variance and
/// each output an independent noise variance. Variances and length-scales
/// are stored and optimized in log space so positivity is structural;
/// sensitivities are optimized raw so sign flips remain reachable.
///
/// `active` is a structural mask: inactive pairs contribute exactly zero
/// covariance and expose no parameters. The default mask is all-ones; the
/// `independent_terms` flag appends one private latent per output (active
/// for that output only), giving each output an own-covariance term that
/// does not couple to the others.
struct Hyperparameters {
    int Q = 0, R = 0, D = 0;
    Mat S;              // Q x R
    Mat log_ell;        // (Q*R) x D, row index q*R + r
    Vec log_sigma_u2;   // R
    Vec log_sigma_w2;   // Q
    Eigen::ArrayXXi active;  // Q x R, 0/1

    static Hyperparameters make(int Q, int R, int D,
                                bool independent_terms = false);

    bool is_active(int q, int r) const { return active(q, r) != 0; }
    double ell(int q, int r, int d) const {
        return std::exp(log_ell(q * R + r, d));
    }
    double sigma_u2(int r) const { return std::exp(log_sigma_u2(r)); }
    double sigma_w2(int q) const { return std::exp(log_sigma_w2(q)); }

    /// Throws ConfigError if dimensions are inconsistent or values non-finite.
    void validate() const;

    int n_params() const;

    /// Packed optimization vector. Sensitivities enter whitened,
    ///   s'_qr = S_qr exp(log_sensitivity_scale(q, r)),
    /// so a unit packed sensitivity corresponds to unit prior signal
    /// variance regardless of the length scales; everything else is packed
    /// as stored (log space).
    Vec pack() const;
    void unpack(const Vec& theta);

    /// log of prod_d (pi ell_qrd^2)^(1/4), the whitening factor that makes
    /// the self-convolution amplitude of latent r on output q equal to
    /// s'_qr^2 sigma_ur^2.
    double log_sensitivity_scale(int q, int r) const;

    nlohmann::json to_json() const;
    static Hyperparameters from_json(const nlohmann::json& j);
};

/// Flat positions of each hyperparameter inside the packed vector.
/// Order: whitened sensitivities for active pairs (q-major), then their
/// length-scale blocks of D, then latent log variances, then noise log
/// variances.
struct ParamLayout {
    int n_params = 0;
    std::vector<int> s_idx;    // Q*R, -1 when inactive
    std::vector<int> ell_idx;  // Q*R, start of the D-block, -1 when inactive
    std::vector<int> u_idx;    // R
    std::vector<int> w_idx;    // Q
};
ParamLayout make_layout(const Hyperparameters& hp);

/// k_qr(x) = S_qr exp(-1/2 sum_d x_d^2 / ell_qrd^2).
double smoothing_kernel(const Hyperparameters& hp, int q, int r, const Vec& x);

/// Closed form of the white-noise convolution integral
///   sum_r sigma_ur^2 Int k_qr(x - z) k_sr(x2 - z) dz
///     = sum_r sigma_ur^2 S_qr S_sr
///       prod_d sqrt(2 pi lq_d^2 ls_d^2 / (lq_d^2 + ls_d^2))
///       exp(-1/2 sum_d (x_d - x2_d)^2 / (lq_d^2 + ls_d^2)).
/// Straightforward reference implementation; the assembled fast path is
/// cross-checked against it and against numerical quadrature in the tests.
double cross_covariance(const Hyperparameters& hp, int q, int s, const Vec& x,
                        const Vec& x2);

/// Per-(q,s,r) quantities reused across every matrix entry of a block.
struct PairTerm {
    int r = 0;
    double amp = 0;  // sigma_ur^2 * prod_d sqrt(2 pi lq^2 ls^2 w_d)
    double Sq = 0, Ss = 0;
    Vec w;        // 1 / (lq_d^2 + ls_d^2)
    Vec uq, us;   // lq_d^2 w_d and ls_d^2 w_d (gradient brackets)
};

/// Precomputed block layout for fast covariance assembly, gradient
/// accumulation, and prediction rows.
struct CovarianceStructure {
    int Q = 0, D = 0;
    std::vector<int> offset;  // Q+1 entries; offset[Q] = total size
    std::vector<std::vector<PairTerm>> block;  // indexed q*Q+s for q<=s
    Vec sigma_w2;

    int total() const { return offset.back(); }
    const std::vector<PairTerm>& terms(int q, int s) const {
        return block[q <= s ? q * Q + s : s * Q + q];
    }
};

CovarianceStructure build_structure(const Hyperparameters& hp,
                                    const std::vector<int>& sizes);

/// Noise-free covariance entry via the precomputed structure.
double structure_entry(const CovarianceStructure& st, int q, int s,
                       const Vec& x, const Vec& x2);

/// Stacked signal covariance (no noise, no jitter) of all outputs' inputs.
/// X holds one N_q x D matrix per output. OpenMP-parallel over rows with
/// disjoint writes, so the result is identical for any thread count.
Mat assemble_signal_covariance(const Hyperparameters& hp,
                               const std::vector<Mat>& X);

/// Signal covariance plus per-output noise on the diagonal blocks plus a
/// base jitter of 1e-8 * mean(diagonal). `base_jitter_out`, when given,
/// receives the 1e-8 * mean(diagonal) unit used by jitter escalation.
Mat assemble_full_covariance(const Hyperparameters& hp,
                             const std::vector<Mat>& X,
                             double* base_jitter_out = nullptr);

/// Single-threaded reference assembly built on cross_covariance(); kept for
/// validating the parallel path.
Mat assemble_full_covariance_serial(const Hyperparameters& hp,
                                    const std::vector<Mat>& X,
                                    double* base_jitter_out = nullptr);

/// Accumulates d(logML)/d(theta_i) = 1/2 sum_jk Asym_jk dK_jk/d(theta_i)
/// over every hyperparameter, where Asym = alpha alpha^T - K^-1. Derivatives
/// are taken with respect to the packed parameterization (whitened
/// sensitivities, log everything else; see Hyperparameters::pack).
/// OpenMP-parallel with per-thread accumulators merged in thread order.
Vec accumulate_likelihood_gradient(const Hyperparameters& hp,
                                   const std::vector<Mat>& X, const Mat& asym);

/// Serial reference of the same accumulation.
Vec accumulate_likelihood_gradient_serial(const Hyperparameters& hp,
                                          const std::vector<Mat>& X,
                                          const Mat& asym);

/// Worker threads used by the parallel kernels. Resolution order:
/// explicit set_thread_count() (CLI --threads), else MOGP_THREADS, else
/// the OpenMP default.
int thread_count();
void set_thread_count(int n);

}  // namespace auvgp
