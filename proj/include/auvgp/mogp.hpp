#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "auvgp/kernels.hpp"
#include "auvgp/linalg.hpp"
#include "auvgp/narx.hpp"
#include "auvgp/types.hpp"

#include "json.hpp"

namespace auvgp {

struct ModelConfig {
    int latents = 2;
    bool independent_terms = false;
};

struct OptimizerConfig {
    int restarts = 5;
    int max_iterations = 500;
    double tol_df = 1e-7;
    double tol_grad = 1e-6;
    double bound = 7.0;          // box on every packed parameter
    double init_low = -1.0;      // uniform init range for drawn parameters
    double init_high = 1.0;
    double noise_log_init = -3.0;  // noise log variance starts here, not drawn
    int memory = 10;
};

struct TrainingMeta {
    int restarts_attempted = 0;
    int restarts_succeeded = 0;
    int restarts_rejected = 0;  // finite restarts the screen turned away
    int best_restart = -1;
    int iterations = 0;
    int f_evals = 0;
    bool converged = false;
    double final_log_marginal = 0;
};

/// A trained model bundles the hyperparameters with the (normalized)
/// training data and the factored covariance. Serialization stores data and
/// hyperparameters only; the factorization is rebuilt on load, which keeps
/// the document small and reproducible.
struct TrainedModel {
    Hyperparameters hp;
    std::vector<Mat> X;  // one block per output (identical blocks are fine)
    Vec y;               // stacked targets, output-major
    NormalizationMap norm;
    int lag = 0;
    TrainingMeta meta;

    CholeskyFactor factor;
    Vec alpha;
    double base_jitter = 0;

    int total_rows() const { return static_cast<int>(y.size()); }

    /// Recomputes factor and alpha from hp, X, y. Called by train() and on
    /// deserialization.
    void refactor();

    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);
};

double log_marginal_likelihood(const Hyperparameters& hp,
                               const std::vector<Mat>& X, const Vec& y);

/// Value and gradient with respect to the packed parameters, sharing one
/// factorization.
double lml_and_gradient(const Hyperparameters& hp, const std::vector<Mat>& X,
                        const Vec& y, Vec& grad);

/// Acceptance check applied to each finished restart before likelihood
/// ranking. The candidate carries hyperparameters, data, and factorization
/// but no normalization map or lag; callers that roll models out must fill
/// those in on a copy.
using RestartScreen = std::function<bool(const TrainedModel&)>;

/// Maximizes the log marginal likelihood over `restarts` seeded starts and
/// keeps the best. Starts whose initial covariance cannot be factored are
/// skipped; throws AllRestartsFailed when none survives. When a screen is
/// given, the likelihood ranks only restarts the screen accepts; if it
/// rejects every restart the unscreened ranking decides instead, since a
/// trained model is still more useful than none.
TrainedModel train(const std::vector<Mat>& X, const Vec& y,
                   const ModelConfig& model, const OptimizerConfig& opt,
                   std::uint64_t seed, const RestartScreen& screen = {});

struct Prediction {
    Vec mean;      // Q
    Vec variance;  // Q, includes the per-output noise variance
};

/// Posterior at one query point. Negative variances from round-off are
/// clamped to zero; clamps beyond -1e-10 increment the warning counter.
Prediction predict(const TrainedModel& model, const Vec& x);

/// Row-parallel batch prediction; row i of the outputs corresponds to row i
/// of queries.
void predict_batch(const TrainedModel& model, const Mat& queries, Mat& mean,
                   Mat& variance);

long negative_variance_warnings();
void reset_negative_variance_warnings();

/// Independent single-output baseline: one GP per output on the same
/// regressors (Q = 1, one latent each). Returned in output order. The
/// screen, when given, is consulted per restart with the output index.
std::vector<TrainedModel> train_independent_baseline(
    const Mat& X, const Mat& Y, const OptimizerConfig& opt,
    std::uint64_t seed,
    const std::function<bool(int, const TrainedModel&)>& screen = {});

}  // namespace auvgp
