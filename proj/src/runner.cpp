#include "auvgp/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "auvgp/jsonio.hpp"
#include "auvgp/kernels.hpp"
#include "auvgp/plant.hpp"
#include "auvgp/signals.hpp"
#include "auvgp/svg.hpp"

namespace auvgp {

namespace {

constexpr const char* kToolName = "auvgp";
constexpr const char* kToolVersion = "1.0.0";

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         t0)
        .count();
}

}  // namespace

MogpPredictor::MogpPredictor(const TrainedModel& model) : model_(model) {
    if (model.hp.Q != kNumOutputs)
        throw ConfigError("MogpPredictor: model has " +
                          std::to_string(model.hp.Q) + " outputs, expected " +
                          std::to_string(kNumOutputs));
}

void MogpPredictor::predict_rows(const Mat& queries, Mat& mean,
                                 Mat& variance) const {
    predict_batch(model_, queries, mean, variance);
}

IndependentPredictor::IndependentPredictor(
    const std::vector<TrainedModel>& models)
    : models_(models) {
    if (static_cast<int>(models.size()) != kNumOutputs)
        throw ConfigError("IndependentPredictor: need one model per output");
    for (const TrainedModel& m : models) {
        if (m.hp.Q != 1)
            throw ConfigError("IndependentPredictor: models must be "
                              "single-output");
        if (!(m.norm == models.front().norm) || m.lag != models.front().lag)
            throw NormalizationMismatch(
                "IndependentPredictor: models disagree on normalization or "
                "lag");
    }
}

void IndependentPredictor::predict_rows(const Mat& queries, Mat& mean,
                                        Mat& variance) const {
    mean.resize(queries.rows(), kNumOutputs);
    variance.resize(queries.rows(), kNumOutputs);
    Mat m1, v1;
    for (int q = 0; q < kNumOutputs; ++q) {
        predict_batch(models_[q], queries, m1, v1);
        mean.col(q) = m1.col(0);
        variance.col(q) = v1.col(0);
    }
}

OneStepResult one_step_validate(const Predictor& predictor,
                                const RegressionDataset& validation) {
    if (!(predictor.norm() == validation.norm))
        throw NormalizationMismatch(
            "one_step_validate: dataset normalization differs from the "
            "model's");
    if (predictor.lag() != validation.lag)
        throw NormalizationMismatch("one_step_validate: lag mismatch");
    OneStepResult res;
    Mat variance;
    predictor.predict_rows(validation.X, res.mean, variance);
    res.sd = variance.cwiseSqrt();
    res.t = validation.t;
    const Mat residuals = res.mean - validation.Y;
    res.report = compute_metrics(residuals);
    res.report.horizon = Horizon::one_step;
    res.report.coverage_2sigma = coverage_fraction(residuals, res.sd);
    return res;
}

FreeRunResult free_run_simulate(const Predictor& predictor,
                                const TrajectoryLog& log,
                                const FreeRunOptions& options) {
    const NormalizationMap& norm = predictor.norm();
    const int lag = predictor.lag();
    const int start = options.start_index < 0 ? lag : options.start_index;
    if (start < lag)
        throw ConfigError("free_run_simulate: start_index below the lag");
    if (log.rows() <= start)
        throw LogTooShort("free_run_simulate: log ends before start_index");

    const int n = log.rows() - start;
    FreeRunResult res;
    res.mean.resize(n, kNumOutputs);
    res.sd.resize(n, kNumOutputs);
    res.regressors.resize(n, regressor_dim(lag));
    res.t.resize(n);

    // Normalized channel histories; the first `start` rows come from the
    // log, after that inputs keep following the log while outputs are
    // whatever the loop below appends (predictions, or truth under teacher
    // forcing).
    std::vector<std::vector<double>> hist(kNumChannels);
    for (int ch = 0; ch < kNumChannels; ++ch) {
        hist[ch].reserve(log.rows());
        for (int k = 0; k < start; ++k)
            hist[ch].push_back(norm.normalize(ch, log.channels(k, ch)));
    }

    Mat mean1, var1;
    Mat query(1, regressor_dim(lag));
    for (int i = 0; i < n; ++i) {
        const int k = start + i;
        const Vec x = assemble_regressor(hist, lag);
        query.row(0) = x.transpose();
        predictor.predict_rows(query, mean1, var1);
        res.regressors.row(i) = x.transpose();
        res.mean.row(i) = mean1.row(0);
        res.sd.row(i) = var1.row(0).cwiseSqrt();
        res.t[i] = log.t[k];
        res.steps = i + 1;
        // negated comparison so a NaN prediction also counts as divergence
        if (!(mean1.row(0).cwiseAbs().maxCoeff() <= options.divergence_guard))
            throw DivergenceDetected(
                "free_run_simulate: normalized prediction left +/-" +
                    std::to_string(options.divergence_guard) + " at t = " +
                    std::to_string(log.t[k]),
                i);
        for (int ch = 0; ch < kNumInputs; ++ch)
            hist[ch].push_back(norm.normalize(ch, log.channels(k, ch)));
        for (int out = 0; out < kNumOutputs; ++out) {
            const double fed =
                options.teacher_forcing
                    ? norm.normalize(kNumInputs + out, log.output(k, out))
                    : mean1(0, out);
            hist[kNumInputs + out].push_back(fed);
        }
    }

    Mat truth(n, kNumOutputs);
    for (int i = 0; i < n; ++i)
        for (int out = 0; out < kNumOutputs; ++out)
            truth(i, out) =
                norm.normalize(kNumInputs + out, log.output(start + i, out));
    res.report = compute_metrics(res.mean - truth);
    res.report.horizon = Horizon::free_run;
    return res;
}

namespace {

struct PreparedData {
    TrajectoryLog log;
    NormalizationMap norm;
    RegressionDataset train, validation;
};

PreparedData prepare_data(const RunConfig& cfg, const TrajectoryLog& log,
                          double boundary_time) {
    PreparedData d;
    d.log = log;
    d.norm = build_normalization(d.log, boundary_time);
    const RegressionDataset full = embed(d.log, cfg.narx.lag, d.norm);
    auto [train, validation] = split_dataset(full, boundary_time);
    d.train = subsample(train, cfg.narx.n_max);
    d.validation = std::move(validation);
    return d;
}

TrajectoryLog training_segment(const TrajectoryLog& log, double boundary) {
    int n = 0;
    while (n < log.rows() && log.t[n] <= boundary) ++n;
    TrajectoryLog seg;
    seg.t.assign(log.t.begin(), log.t.begin() + n);
    seg.channels = log.channels.topRows(n);
    return seg;
}

/// A screening rollout passes when it completes inside the guard with an
/// aggregate RMSE under 1: an error of one half-range means the prediction
/// carries no information about the channel, so anything above that is
/// already useless regardless of how the final metrics are scored.
bool stable_rollout(const Predictor& predictor, const TrajectoryLog& seg,
                    double guard) {
    FreeRunOptions fr;
    fr.divergence_guard = guard;
    try {
        const FreeRunResult r = free_run_simulate(predictor, seg, fr);
        return std::isfinite(r.report.rmse) && r.report.rmse < 1.0;
    } catch (const DivergenceDetected&) {
        return false;
    }
}

/// Own-loop rollout for one baseline output: channel `out_ch` is fed back
/// from its own predictions while all other channels follow the log.
bool own_loop_stable(const TrainedModel& model, int out_ch,
                     const TrajectoryLog& seg, double guard) {
    const NormalizationMap& norm = model.norm;
    const int lag = model.lag;
    if (seg.rows() <= lag) return true;

    std::vector<std::vector<double>> hist(kNumChannels);
    for (int ch = 0; ch < kNumChannels; ++ch) {
        hist[ch].reserve(seg.rows());
        for (int k = 0; k < lag; ++k)
            hist[ch].push_back(norm.normalize(ch, seg.channels(k, ch)));
    }
    double sq_sum = 0;
    int n = 0;
    for (int k = lag; k < seg.rows(); ++k) {
        const Vec x = assemble_regressor(hist, lag);
        const Prediction p = predict(model, x);
        const double mu = p.mean(0);
        if (!(std::abs(mu) <= guard)) return false;
        for (int ch = 0; ch < kNumChannels; ++ch) {
            const double truth = norm.normalize(ch, seg.channels(k, ch));
            hist[ch].push_back(ch == kNumInputs + out_ch ? mu : truth);
        }
        const double r = mu - norm.normalize(kNumInputs + out_ch,
                                             seg.channels(k,
                                                          kNumInputs +
                                                              out_ch));
        sq_sum += r * r;
        ++n;
    }
    return std::isfinite(sq_sum) && std::sqrt(sq_sum / n) < 1.0;
}

}  // namespace

TrainedModel train_mogp(const RegressionDataset& train_set,
                        const TrajectoryLog& log, double boundary_time,
                        const ModelConfig& model, const OptimizerConfig& opt,
                        double divergence_guard, std::uint64_t seed) {
    const std::vector<Mat> X(kNumOutputs, train_set.X);
    Vec y(train_set.Y.size());
    for (int q = 0; q < kNumOutputs; ++q)
        y.segment(q * train_set.X.rows(), train_set.X.rows()) =
            train_set.Y.col(q);
    const TrajectoryLog seg = training_segment(log, boundary_time);
    const NormalizationMap& norm = train_set.norm;
    const int lag = train_set.lag;
    const RestartScreen screen = [&seg, &norm, lag,
                                  divergence_guard](const TrainedModel& c) {
        TrainedModel m = c;
        m.norm = norm;
        m.lag = lag;
        return stable_rollout(MogpPredictor(m), seg, divergence_guard);
    };
    TrainedModel out = train(X, y, model, opt, seed, screen);
    out.norm = train_set.norm;
    out.lag = train_set.lag;
    return out;
}

std::vector<TrainedModel> train_baseline(const RegressionDataset& train_set,
                                         const TrajectoryLog& log,
                                         double boundary_time,
                                         const OptimizerConfig& opt,
                                         double divergence_guard,
                                         std::uint64_t seed) {
    const TrajectoryLog seg = training_segment(log, boundary_time);
    const NormalizationMap& norm = train_set.norm;
    const int lag = train_set.lag;
    const auto screen = [&seg, &norm, lag, divergence_guard](
                            int q, const TrainedModel& c) {
        TrainedModel m = c;
        m.norm = norm;
        m.lag = lag;
        return own_loop_stable(m, q, seg, divergence_guard);
    };
    std::vector<TrainedModel> models = train_independent_baseline(
        train_set.X, train_set.Y, opt, seed, screen);
    for (TrainedModel& m : models) {
        m.norm = train_set.norm;
        m.lag = train_set.lag;
    }
    return models;
}

namespace {

void tag(MetricsReport& rep, int experiment_id, const std::string& model_id) {
    rep.experiment_id = experiment_id;
    rep.model_id = model_id;
}

/// t, then <channel>_true, <channel>_pred, <channel>_sd per output channel,
/// all in normalized units.
void write_prediction_csv(const std::string& path,
                          const std::vector<double>& t, const Mat& truth,
                          const Mat& mean, const Mat& sd) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write CSV file: " + path);
    f << "t";
    for (int ch = 0; ch < kNumOutputs; ++ch)
        f << "," << kOutputNames[ch] << "_true," << kOutputNames[ch]
          << "_pred," << kOutputNames[ch] << "_sd";
    f << "\n";
    for (std::size_t i = 0; i < t.size(); ++i) {
        f << format_full(t[i]);
        for (int ch = 0; ch < kNumOutputs; ++ch) {
            const auto r = static_cast<Eigen::Index>(i);
            f << "," << format_full(truth(r, ch)) << ","
              << format_full(mean(r, ch)) << "," << format_full(sd(r, ch));
        }
        f << "\n";
    }
    if (!f) throw Error("short write on CSV file: " + path);
}

Mat normalized_truth(const TrajectoryLog& log, const NormalizationMap& norm,
                     int first_row, int count) {
    Mat truth(count, kNumOutputs);
    for (int i = 0; i < count; ++i)
        for (int out = 0; out < kNumOutputs; ++out)
            truth(i, out) = norm.normalize(kNumInputs + out,
                                           log.output(first_row + i, out));
    return truth;
}

void write_free_run_plots(const std::string& dir, int experiment_id,
                          const TrajectoryLog& log,
                          const NormalizationMap& norm,
                          const FreeRunResult& mogp,
                          const FreeRunResult& base) {
    const int start = log.rows() - mogp.steps;
    for (int ch = 0; ch < kNumOutputs; ++ch) {
        SvgSeries truth{{}, {}, "#222222", "plant", 1.0};
        SvgSeries gp{{}, {}, "#1f6fb8", "mogp", 1.2};
        SvgSeries ind{{}, {}, "#d95f02", "baseline", 1.0};
        SvgBand band{{}, {}, {}, "#1f6fb8", 0.18, "mogp 2 sigma"};
        for (int i = 0; i < mogp.steps; ++i) {
            const double t = mogp.t[i];
            truth.x.push_back(t);
            truth.y.push_back(
                norm.normalize(kNumInputs + ch, log.output(start + i, ch)));
            gp.x.push_back(t);
            gp.y.push_back(mogp.mean(i, ch));
            band.x.push_back(t);
            band.lo.push_back(mogp.mean(i, ch) - 2 * mogp.sd(i, ch));
            band.hi.push_back(mogp.mean(i, ch) + 2 * mogp.sd(i, ch));
            if (i < base.steps) {
                ind.x.push_back(t);
                ind.y.push_back(base.mean(i, ch));
            }
        }
        const std::string title = "Experiment " +
                                  std::to_string(experiment_id) + ": " +
                                  kOutputNames[ch] + " (free run)";
        write_line_chart(dir + "/freerun_" + kOutputNames[ch] + ".svg",
                         title, "t [s]", std::string(kOutputNames[ch]) +
                                             " (normalized)",
                         {band}, {truth, gp, ind});
    }
}

nlohmann::json metrics_to_json(const MetricsReport& rep) {
    nlohmann::json j;
    j["rmse"] = rep.rmse;
    j["mae"] = rep.mae;
    j["press"] = rep.press;
    j["count"] = rep.count;
    j["horizon"] = horizon_name(rep.horizon);
    if (std::isfinite(rep.coverage_2sigma))
        j["coverage_2sigma"] = rep.coverage_2sigma;
    nlohmann::json per;
    for (int ch = 0; ch < kNumOutputs; ++ch)
        per[kOutputNames[ch]] = {{"rmse", rep.channel[ch].rmse},
                                 {"mae", rep.channel[ch].mae},
                                 {"press", rep.channel[ch].press}};
    j["channels"] = std::move(per);
    return j;
}

struct Aggregate {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
};

Aggregate aggregate_of(const std::vector<double>& values) {
    if (values.empty()) return {};
    Aggregate a;
    double sum = 0;
    for (double v : values) sum += v;
    a.mean = sum / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0;
        for (double v : values) ss += (v - a.mean) * (v - a.mean);
        a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return a;
}

using MetricGetter = double (*)(const MetricsReport&);

/// One CSV per metric: experiment rows then Average and Standard deviation,
/// columns per model, mirroring the report tables.
void write_metric_table(const std::string& path,
                        const std::vector<ExperimentOutcome>& outcomes,
                        Horizon horizon, MetricGetter get) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write CSV file: " + path);
    f << "experiment,mogp,baseline\n";
    std::vector<double> gp_vals, base_vals;
    for (const ExperimentOutcome& oc : outcomes) {
        f << oc.experiment_id;
        if (oc.ok) {
            const MetricsReport& gp = horizon == Horizon::one_step
                                          ? oc.mogp.one_step
                                          : oc.mogp.free_run;
            const MetricsReport& ind = horizon == Horizon::one_step
                                           ? oc.baseline.one_step
                                           : oc.baseline.free_run;
            f << "," << format_full(get(gp)) << "," << format_full(get(ind));
            gp_vals.push_back(get(gp));
            base_vals.push_back(get(ind));
        } else {
            f << ",,";
        }
        f << "\n";
    }
    const Aggregate gp_ag = aggregate_of(gp_vals);
    const Aggregate base_ag = aggregate_of(base_vals);
    f << "Average," << format_full(gp_ag.mean) << ","
      << format_full(base_ag.mean) << "\n";
    f << "Standard deviation," << format_full(gp_ag.stddev) << ","
      << format_full(base_ag.stddev) << "\n";
    if (!f) throw Error("short write on CSV file: " + path);
}

double get_rmse(const MetricsReport& r) { return r.rmse; }
double get_mae(const MetricsReport& r) { return r.mae; }
double get_press(const MetricsReport& r) { return r.press; }
double get_coverage(const MetricsReport& r) { return r.coverage_2sigma; }

void save_model_documents(const std::string& dir, const TrainedModel& mogp,
                          const std::vector<TrainedModel>& baseline) {
    save_json_file(dir + "/model_mogp.json", mogp.to_json());
    nlohmann::json arr = nlohmann::json::array();
    for (const TrainedModel& m : baseline) arr.push_back(m.to_json());
    save_json_file(dir + "/model_baseline.json",
                   {{"schema_version", 1}, {"models", std::move(arr)}});
}

}  // namespace

ProtocolResult run_protocol(const RunConfig& cfg, std::uint64_t seed,
                            const std::string& out_dir, bool verbose) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const long clamps_before = negative_variance_warnings();

    ProtocolResult result;
    for (int id : cfg.protocol.experiments) {
        ExperimentOutcome oc;
        oc.experiment_id = id;
        const auto t0 = std::chrono::steady_clock::now();
        const std::string dir =
            out_dir + "/experiment_" + std::to_string(id);
        try {
            fs::create_directories(dir);
            const ExperimentProgram program =
                make_experiment(id, cfg.signals, cfg.experiment.duration);
            const TrajectoryLog log =
                run_experiment(cfg.plant, program, cfg.experiment);
            write_trajectory_csv(log, dir + "/data.csv");
            const PreparedData data =
                prepare_data(cfg, log, cfg.narx.boundary_time);

            const TrainedModel gp = train_mogp(
                data.train, log, cfg.narx.boundary_time, cfg.model,
                cfg.protocol.optimizer, cfg.protocol.divergence_guard,
                mix_seed(seed, id));
            const std::vector<TrainedModel> ind = train_baseline(
                data.train, log, cfg.narx.boundary_time,
                cfg.protocol.optimizer, cfg.protocol.divergence_guard,
                mix_seed(seed, 100 + id));
            const MogpPredictor gp_pred(gp);
            const IndependentPredictor ind_pred(ind);

            FreeRunOptions fr;
            fr.divergence_guard = cfg.protocol.divergence_guard;

            const OneStepResult os_gp = one_step_validate(gp_pred,
                                                          data.validation);
            const OneStepResult os_ind = one_step_validate(ind_pred,
                                                           data.validation);
            const FreeRunResult fr_gp = free_run_simulate(gp_pred, log, fr);
            const FreeRunResult fr_ind = free_run_simulate(ind_pred, log, fr);

            oc.mogp = {os_gp.report, fr_gp.report};
            oc.baseline = {os_ind.report, fr_ind.report};
            tag(oc.mogp.one_step, id, "mogp");
            tag(oc.mogp.free_run, id, "mogp");
            tag(oc.baseline.one_step, id, "baseline");
            tag(oc.baseline.free_run, id, "baseline");
            oc.ok = true;

            write_prediction_csv(
                dir + "/onestep_mogp.csv", os_gp.t,
                data.validation.Y, os_gp.mean, os_gp.sd);
            write_prediction_csv(
                dir + "/onestep_baseline.csv", os_ind.t,
                data.validation.Y, os_ind.mean, os_ind.sd);
            const int start = log.rows() - fr_gp.steps;
            write_prediction_csv(
                dir + "/freerun_mogp.csv", fr_gp.t,
                normalized_truth(log, data.norm, start, fr_gp.steps),
                fr_gp.mean, fr_gp.sd);
            write_prediction_csv(
                dir + "/freerun_baseline.csv", fr_ind.t,
                normalized_truth(log, data.norm, start, fr_ind.steps),
                fr_ind.mean, fr_ind.sd);
            if (cfg.protocol.write_plots)
                write_free_run_plots(dir, id, log, data.norm, fr_gp, fr_ind);
            if (cfg.protocol.save_models) save_model_documents(dir, gp, ind);
        } catch (const Error& e) {
            oc.ok = false;
            oc.error = e.what();
            ++result.failures;
        }
        result.timings.emplace_back("experiment_" + std::to_string(id),
                                    seconds_since(t0));
        if (verbose)
            std::cerr << "experiment " << id << ": "
                      << (oc.ok ? "ok" : oc.error) << " ("
                      << result.timings.back().second << " s)\n";
        result.outcomes.push_back(std::move(oc));
    }

    write_metric_table(out_dir + "/onestep_rmse.csv", result.outcomes,
                       Horizon::one_step, get_rmse);
    write_metric_table(out_dir + "/onestep_mae.csv", result.outcomes,
                       Horizon::one_step, get_mae);
    write_metric_table(out_dir + "/onestep_press.csv", result.outcomes,
                       Horizon::one_step, get_press);
    write_metric_table(out_dir + "/onestep_coverage.csv", result.outcomes,
                       Horizon::one_step, get_coverage);
    write_metric_table(out_dir + "/freerun_rmse.csv", result.outcomes,
                       Horizon::free_run, get_rmse);
    write_metric_table(out_dir + "/freerun_mae.csv", result.outcomes,
                       Horizon::free_run, get_mae);
    write_metric_table(out_dir + "/freerun_press.csv", result.outcomes,
                       Horizon::free_run, get_press);

    result.negative_variance_clamps =
        negative_variance_warnings() - clamps_before;

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    manifest["kind"] = "protocol";
    manifest["seed"] = seed;
    manifest["config"] = config_to_json(cfg);
    nlohmann::json rows = nlohmann::json::array();
    for (const ExperimentOutcome& oc : result.outcomes) {
        nlohmann::json row;
        row["experiment"] = oc.experiment_id;
        row["ok"] = oc.ok;
        if (!oc.ok) row["error"] = oc.error;
        if (oc.ok) {
            row["mogp"] = {{"one_step", metrics_to_json(oc.mogp.one_step)},
                           {"free_run", metrics_to_json(oc.mogp.free_run)}};
            row["baseline"] = {
                {"one_step", metrics_to_json(oc.baseline.one_step)},
                {"free_run", metrics_to_json(oc.baseline.free_run)}};
        }
        rows.push_back(std::move(row));
    }
    manifest["experiments"] = std::move(rows);
    manifest["failures"] = result.failures;
    manifest["partial"] = result.failures > 0;
    manifest["negative_variance_clamps"] = result.negative_variance_clamps;
    // Wall-clock timings stay out of the manifest: the bundle must be a
    // pure function of (config, seed). The CLI prints them instead.
    save_json_file(out_dir + "/manifest.json", manifest);
    return result;
}

SensitivityResult sensitivity_sweep(const RunConfig& cfg, std::uint64_t seed,
                                    const std::string& out_dir,
                                    bool verbose) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    SensitivityResult result;
    for (std::size_t di = 0; di < cfg.sensitivity.durations.size(); ++di) {
        const double duration = cfg.sensitivity.durations[di];
        const auto t0 = std::chrono::steady_clock::now();
        SensitivityRow gp_row, ind_row;
        gp_row.duration = ind_row.duration = duration;
        gp_row.model_id = "mogp";
        ind_row.model_id = "baseline";
        try {
            RunConfig local = cfg;
            local.experiment.duration = duration;
            local.narx.boundary_time = duration / 2;
            const ExperimentProgram program =
                make_half_chirp_half_ramp(local.signals, duration);
            const TrajectoryLog log =
                run_experiment(local.plant, program, local.experiment);
            const PreparedData data =
                prepare_data(local, log, local.narx.boundary_time);

            const TrainedModel gp = train_mogp(
                data.train, log, local.narx.boundary_time, local.model,
                cfg.sensitivity.optimizer, cfg.protocol.divergence_guard,
                mix_seed(seed, 300 + static_cast<int>(di)));
            const std::vector<TrainedModel> ind = train_baseline(
                data.train, log, local.narx.boundary_time,
                cfg.sensitivity.optimizer, cfg.protocol.divergence_guard,
                mix_seed(seed, 400 + static_cast<int>(di)));

            FreeRunOptions fr;
            fr.divergence_guard = cfg.protocol.divergence_guard;
            const FreeRunResult fr_gp =
                free_run_simulate(MogpPredictor(gp), log, fr);
            const FreeRunResult fr_ind =
                free_run_simulate(IndependentPredictor(ind), log, fr);
            gp_row.metrics = fr_gp.report;
            ind_row.metrics = fr_ind.report;
            tag(gp_row.metrics, 0, "mogp");
            tag(ind_row.metrics, 0, "baseline");
            gp_row.ok = ind_row.ok = true;
        } catch (const Error& e) {
            gp_row.ok = ind_row.ok = false;
            gp_row.error = ind_row.error = e.what();
            ++result.failures;
        }
        result.timings.emplace_back(
            "duration_" + std::to_string(static_cast<long>(duration)),
            seconds_since(t0));
        if (verbose)
            std::cerr << "duration " << duration << ": "
                      << (gp_row.ok ? "ok" : gp_row.error) << " ("
                      << result.timings.back().second << " s)\n";
        result.rows.push_back(std::move(gp_row));
        result.rows.push_back(std::move(ind_row));
    }

    std::ofstream f(out_dir + "/sensitivity.csv");
    if (!f) throw Error("cannot write CSV file: " + out_dir +
                        "/sensitivity.csv");
    f << "duration,model,rmse,mae,press\n";
    for (const SensitivityRow& row : result.rows) {
        f << format_full(row.duration) << "," << row.model_id;
        if (row.ok)
            f << "," << format_full(row.metrics.rmse) << ","
              << format_full(row.metrics.mae) << ","
              << format_full(row.metrics.press);
        else
            f << ",,,";
        f << "\n";
    }
    f.close();

    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    manifest["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    manifest["kind"] = "sensitivity";
    manifest["seed"] = seed;
    manifest["config"] = config_to_json(cfg);
    nlohmann::json rows = nlohmann::json::array();
    for (const SensitivityRow& row : result.rows) {
        nlohmann::json r;
        r["duration"] = row.duration;
        r["model"] = row.model_id;
        r["ok"] = row.ok;
        if (row.ok)
            r["metrics"] = metrics_to_json(row.metrics);
        else
            r["error"] = row.error;
        rows.push_back(std::move(r));
    }
    manifest["rows"] = std::move(rows);
    manifest["failures"] = result.failures;
    save_json_file(out_dir + "/manifest.json", manifest);
    return result;
}

}  // namespace auvgp
