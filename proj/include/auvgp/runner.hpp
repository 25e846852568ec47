#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "auvgp/config.hpp"
#include "auvgp/metrics.hpp"
#include "auvgp/mogp.hpp"
#include "auvgp/narx.hpp"
#include "auvgp/types.hpp"

namespace auvgp {

/// Prediction backend shared by validation and free-run simulation. Thin
/// interface so tests can plug in synthetic predictors.
class Predictor {
  public:
    virtual ~Predictor() = default;
    virtual const NormalizationMap& norm() const = 0;
    virtual int lag() const = 0;
    /// Rows of queries are regressors; fills n x 6 mean and variance.
    virtual void predict_rows(const Mat& queries, Mat& mean,
                              Mat& variance) const = 0;
};

class MogpPredictor : public Predictor {
  public:
    explicit MogpPredictor(const TrainedModel& model);
    const NormalizationMap& norm() const override { return model_.norm; }
    int lag() const override { return model_.lag; }
    void predict_rows(const Mat& queries, Mat& mean,
                      Mat& variance) const override;

  private:
    const TrainedModel& model_;
};

/// One single-output model per output channel, evaluated independently.
class IndependentPredictor : public Predictor {
  public:
    explicit IndependentPredictor(const std::vector<TrainedModel>& models);
    const NormalizationMap& norm() const override {
        return models_.front().norm;
    }
    int lag() const override { return models_.front().lag; }
    void predict_rows(const Mat& queries, Mat& mean,
                      Mat& variance) const override;

  private:
    const std::vector<TrainedModel>& models_;
};

struct OneStepResult {
    MetricsReport report;
    Mat mean, sd;  // n x 6, normalized units
    std::vector<double> t;
};

/// Teacher-forced validation: every prediction uses true lagged values.
/// Throws NormalizationMismatch if the dataset was built with a different
/// map than the predictor's.
OneStepResult one_step_validate(const Predictor& predictor,
                                const RegressionDataset& validation);

struct FreeRunOptions {
    int start_index = -1;  // -1 means the first predictable row (= lag)
    bool teacher_forcing = false;
    double divergence_guard = 10.0;  // normalized units
};

struct FreeRunResult {
    MetricsReport report;
    Mat mean, sd;            // one row per simulated step
    std::vector<double> t;
    Mat regressors;          // regressor used at each step (buffer trace)
    int steps = 0;
};

/// Closed-loop simulation over the log: the lag buffer starts from true
/// samples, then predicted means are fed back while commanded inputs come
/// from the log. Throws DivergenceDetected when a normalized prediction
/// magnitude exceeds the guard.
FreeRunResult free_run_simulate(const Predictor& predictor,
                                const TrajectoryLog& log,
                                const FreeRunOptions& options = {});

/// Trains the multi-output model on an embedded NARX dataset. The marginal
/// likelihood ranks restarts, but only among those whose closed-loop rollout
/// over the training segment of `log` stays bounded by the divergence guard:
/// on noise-free data the likelihood alone cannot see between samples, and
/// the top restart is occasionally an interpolant that explodes under
/// feedback. Rejected restarts still decide when every restart fails the
/// rollout.
TrainedModel train_mogp(const RegressionDataset& train_set,
                        const TrajectoryLog& log, double boundary_time,
                        const ModelConfig& model, const OptimizerConfig& opt,
                        double divergence_guard, std::uint64_t seed);

/// Independent single-output counterpart of train_mogp. Each output's
/// restarts must pass an own-loop rollout: that output is fed back while
/// every other channel follows the log.
std::vector<TrainedModel> train_baseline(const RegressionDataset& train_set,
                                         const TrajectoryLog& log,
                                         double boundary_time,
                                         const OptimizerConfig& opt,
                                         double divergence_guard,
                                         std::uint64_t seed);

struct ModelScores {
    MetricsReport one_step;
    MetricsReport free_run;
};

struct ExperimentOutcome {
    int experiment_id = 0;
    bool ok = false;
    std::string error;
    ModelScores mogp, baseline;
};

struct ProtocolResult {
    std::vector<ExperimentOutcome> outcomes;
    int failures = 0;
    long negative_variance_clamps = 0;
    std::vector<std::pair<std::string, double>> timings;  // console only
};

/// Runs the full excitation protocol and writes the report bundle under
/// out_dir: per-metric CSV tables (experiment rows plus Average and
/// Standard deviation), per-experiment prediction CSVs and SVG plots, and
/// a JSON manifest. Every file is a pure function of (config, seed); wall
/// times are returned for console display, never written to the bundle.
ProtocolResult run_protocol(const RunConfig& cfg, std::uint64_t seed,
                            const std::string& out_dir, bool verbose = false);

struct SensitivityRow {
    double duration = 0;
    std::string model_id;
    bool ok = false;
    std::string error;
    MetricsReport metrics;  // free-run over the full span
};

struct SensitivityResult {
    std::vector<SensitivityRow> rows;
    int failures = 0;
    std::vector<std::pair<std::string, double>> timings;  // console only
};

/// Training-size sweep: for each duration, half-chirp half-ramp excitation
/// on all inputs, training on the first half, free-run over the whole log.
/// Writes sensitivity.csv and a manifest under out_dir.
SensitivityResult sensitivity_sweep(const RunConfig& cfg, std::uint64_t seed,
                                    const std::string& out_dir,
                                    bool verbose = false);

}  // namespace auvgp
