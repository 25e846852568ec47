#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "auvgp/config.hpp"
#include "auvgp/jsonio.hpp"
#include "auvgp/kernels.hpp"
#include "auvgp/mogp.hpp"
#include "auvgp/narx.hpp"
#include "auvgp/plant.hpp"
#include "auvgp/runner.hpp"
#include "auvgp/signals.hpp"
#include "auvgp/trajectory.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct GlobalArgs {
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 0;
    bool verbose = false;
};

auvgp::RunConfig effective_config(const GlobalArgs& g) {
    if (g.config_path.empty()) return auvgp::RunConfig{};
    return auvgp::load_config(g.config_path);
}

void print_timings(const std::vector<std::pair<std::string, double>>& rows) {
    double total = 0;
    for (const auto& [label, seconds] : rows) {
        std::cout << "  " << label << ": " << seconds << " s\n";
        total += seconds;
    }
    std::cout << "  total: " << total << " s\n";
}

/// Seeds a dataset for training: rows at or before the boundary, capped at
/// n_max. Falls back to the whole log when everything is inside the
/// boundary (no validation requested).
auvgp::RegressionDataset training_slice(const auvgp::RegressionDataset& full,
                                        double boundary, int n_max) {
    bool any_after = false;
    for (double t : full.t) any_after = any_after || t > boundary;
    if (!any_after) return auvgp::subsample(full, n_max);
    auto [train, validation] = auvgp::split_dataset(full, boundary);
    return auvgp::subsample(train, n_max);
}

int run_simulate_plant(const GlobalArgs& g, const auvgp::RunConfig& cfg,
                       int experiment, const std::string& out) {
    const auvgp::ExperimentProgram program =
        auvgp::make_experiment(experiment, cfg.signals,
                               cfg.experiment.duration);
    const auvgp::TrajectoryLog log =
        auvgp::run_experiment(cfg.plant, program, cfg.experiment);
    auvgp::write_trajectory_csv(log, out);
    std::cout << out << ": " << log.rows() << " rows\n";
    for (int ch = 0; ch < auvgp::kNumChannels; ++ch)
        std::cout << "  " << auvgp::kChannelNames[ch] << " in ["
                  << log.channels.col(ch).minCoeff() << ", "
                  << log.channels.col(ch).maxCoeff() << "]\n";
    (void)g;
    return 0;
}

int run_train(const GlobalArgs& g, const auvgp::RunConfig& cfg,
              const std::string& data_path, const std::string& model_path) {
    const auvgp::TrajectoryLog log = auvgp::read_trajectory_csv(data_path);
    const auvgp::NormalizationMap norm =
        auvgp::build_normalization(log, cfg.narx.boundary_time);
    const auvgp::RegressionDataset full =
        auvgp::embed(log, cfg.narx.lag, norm);
    const auvgp::RegressionDataset train_set =
        training_slice(full, cfg.narx.boundary_time, cfg.narx.n_max);

    const auvgp::TrainedModel model = auvgp::train_mogp(
        train_set, log, cfg.narx.boundary_time, cfg.model, cfg.optimizer,
        cfg.protocol.divergence_guard, g.seed);
    auvgp::save_json_file(model_path, model.to_json());
    std::cout << model_path << ": trained on " << train_set.X.rows()
              << " targets per output, log marginal likelihood "
              << model.meta.final_log_marginal << " (restart "
              << model.meta.best_restart << ", "
              << model.meta.iterations << " iterations)\n";
    return 0;
}

int run_predict(const GlobalArgs& g, const std::string& model_path,
                const std::string& data_path, const std::string& out) {
    const auvgp::TrainedModel model =
        auvgp::TrainedModel::from_json(auvgp::load_json_file(model_path));
    const auvgp::TrajectoryLog log = auvgp::read_trajectory_csv(data_path);
    const auvgp::RegressionDataset data =
        auvgp::embed(log, model.lag, model.norm);
    const auvgp::MogpPredictor predictor(model);
    const auvgp::OneStepResult res = auvgp::one_step_validate(predictor, data);
    std::ofstream f(out);
    if (!f) throw auvgp::Error("cannot write CSV file: " + out);
    f << "t";
    for (int ch = 0; ch < auvgp::kNumOutputs; ++ch)
        f << "," << auvgp::kOutputNames[ch] << "_true,"
          << auvgp::kOutputNames[ch] << "_pred," << auvgp::kOutputNames[ch]
          << "_sd";
    f << "\n";
    for (std::size_t i = 0; i < res.t.size(); ++i) {
        f << auvgp::format_full(res.t[i]);
        const auto r = static_cast<Eigen::Index>(i);
        for (int ch = 0; ch < auvgp::kNumOutputs; ++ch)
            f << "," << auvgp::format_full(data.Y(r, ch)) << ","
              << auvgp::format_full(res.mean(r, ch)) << ","
              << auvgp::format_full(res.sd(r, ch));
        f << "\n";
    }
    std::cout << out << ": " << res.t.size()
              << " one-step predictions, aggregate rmse " << res.report.rmse
              << ", 2 sigma coverage " << res.report.coverage_2sigma << "\n";
    (void)g;
    return 0;
}

int run_free_run(const GlobalArgs& g, const std::string& model_path,
                 const std::string& data_path, const std::string& out,
                 int start_index, bool teacher_forcing, double guard) {
    const auvgp::TrainedModel model =
        auvgp::TrainedModel::from_json(auvgp::load_json_file(model_path));
    const auvgp::TrajectoryLog log = auvgp::read_trajectory_csv(data_path);
    auvgp::FreeRunOptions options;
    options.start_index = start_index;
    options.teacher_forcing = teacher_forcing;
    options.divergence_guard = guard;
    const auvgp::MogpPredictor predictor(model);
    const auvgp::FreeRunResult res =
        auvgp::free_run_simulate(predictor, log, options);
    std::ofstream f(out);
    if (!f) throw auvgp::Error("cannot write CSV file: " + out);
    f << "t";
    for (int ch = 0; ch < auvgp::kNumOutputs; ++ch)
        f << "," << auvgp::kOutputNames[ch] << "_true,"
          << auvgp::kOutputNames[ch] << "_pred," << auvgp::kOutputNames[ch]
          << "_sd";
    f << "\n";
    const int start = log.rows() - res.steps;
    for (int i = 0; i < res.steps; ++i) {
        f << auvgp::format_full(res.t[i]);
        for (int ch = 0; ch < auvgp::kNumOutputs; ++ch)
            f << ","
              << auvgp::format_full(model.norm.normalize(
                     auvgp::kNumInputs + ch, log.output(start + i, ch)))
              << "," << auvgp::format_full(res.mean(i, ch)) << ","
              << auvgp::format_full(res.sd(i, ch));
        f << "\n";
    }
    std::cout << out << ": " << res.steps << " free-run steps, aggregate rmse "
              << res.report.rmse << "\n";
    (void)g;
    return 0;
}

int run_protocol_cmd(const GlobalArgs& g, const auvgp::RunConfig& cfg,
                     const std::string& out) {
    const auvgp::ProtocolResult res =
        auvgp::run_protocol(cfg, g.seed, out, g.verbose);
    std::cout << "protocol bundle written to " << out << "\n";
    if (res.failures > 0)
        std::cout << "warning: " << res.failures
                  << " experiment(s) failed; bundle marked partial\n";
    if (res.negative_variance_clamps > 0)
        std::cout << "warning: " << res.negative_variance_clamps
                  << " negative predictive variance(s) clamped\n";
    std::cout << "timings (console only, not part of the bundle):\n";
    print_timings(res.timings);
    return 0;
}

int run_sensitivity_cmd(const GlobalArgs& g, auvgp::RunConfig cfg,
                        const std::vector<double>& durations,
                        const std::string& out) {
    if (!durations.empty()) cfg.sensitivity.durations = durations;
    for (std::size_t i = 1; i < cfg.sensitivity.durations.size(); ++i)
        if (cfg.sensitivity.durations[i] <= cfg.sensitivity.durations[i - 1])
            throw auvgp::ConfigError("durations must be strictly increasing");
    const auvgp::SensitivityResult res =
        auvgp::sensitivity_sweep(cfg, g.seed, out, g.verbose);
    std::cout << "sensitivity results written to " << out << " ("
              << res.rows.size() << " rows)\n";
    if (res.failures > 0)
        std::cout << "warning: " << res.failures << " duration(s) failed\n";
    std::cout << "timings (console only, not part of the bundle):\n";
    print_timings(res.timings);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coupled AUV dynamics identification with convolved "
                 "multi-output Gaussian processes"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config_path,
                   "JSON configuration file (defaults used when omitted)");
    app.add_option("--seed", g.seed, "Master RNG seed")
        ->default_val(std::uint64_t{0});
    app.add_option("--threads", g.threads,
                   "Worker threads (overrides MOGP_THREADS)");
    app.add_flag("--verbose", g.verbose, "Progress output on stderr");

    auto* sim = app.add_subcommand("simulate-plant",
                                   "Generate an excitation trajectory CSV");
    int experiment = 1;
    double duration = -1, sample_dt = -1, integrator_dt = -1;
    std::string coefficients_path, sim_out = "trajectory.csv";
    sim->add_option("--experiment", experiment,
                    "Excitation program 1..8");
    sim->add_option("--duration", duration, "Run length in seconds");
    sim->add_option("--sample-dt", sample_dt, "Sampling period in seconds");
    sim->add_option("--integrator-dt", integrator_dt,
                    "RK4 step in seconds");
    sim->add_option("--coefficients", coefficients_path,
                    "Plant coefficient key-value file");
    sim->add_option("--out", sim_out, "Output CSV path");

    auto* train_cmd =
        app.add_subcommand("train", "Train the multi-output GP on a log");
    std::string train_data, train_model = "model.json";
    train_cmd->add_option("--data", train_data, "Trajectory CSV")->required();
    train_cmd->add_option("--model", train_model, "Model document to write");

    auto* predict_cmd = app.add_subcommand(
        "predict", "One-step predictions of a trained model over a log");
    std::string pred_model, pred_data, pred_out = "predictions.csv";
    predict_cmd->add_option("--model", pred_model, "Model document")
        ->required();
    predict_cmd->add_option("--data", pred_data, "Trajectory CSV")
        ->required();
    predict_cmd->add_option("--out", pred_out, "Output CSV path");

    auto* freerun_cmd = app.add_subcommand(
        "free-run", "Closed-loop simulation of a trained model over a log");
    std::string fr_model, fr_data, fr_out = "freerun.csv";
    int fr_start = -1;
    bool fr_teacher = false;
    double fr_guard = 10.0;
    freerun_cmd->add_option("--model", fr_model, "Model document")
        ->required();
    freerun_cmd->add_option("--data", fr_data, "Trajectory CSV")->required();
    freerun_cmd->add_option("--out", fr_out, "Output CSV path");
    freerun_cmd->add_option("--start-index", fr_start,
                            "First predicted row (default: the lag)");
    freerun_cmd->add_flag("--teacher-forcing", fr_teacher,
                          "Feed true outputs back instead of predictions");
    freerun_cmd->add_option("--guard", fr_guard,
                            "Divergence guard in normalized units");

    auto* protocol_cmd = app.add_subcommand(
        "protocol", "Run the 8-experiment identification protocol");
    std::string protocol_out = "protocol_report";
    protocol_cmd->add_option("--out", protocol_out, "Report bundle directory");

    auto* sens_cmd = app.add_subcommand(
        "sensitivity", "Training-size sensitivity sweep");
    std::string sens_out = "sensitivity_report";
    std::vector<double> sens_durations;
    sens_cmd->add_option("--out", sens_out, "Report directory");
    sens_cmd->add_option("--durations", sens_durations,
                         "Comma-separated durations in seconds")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        if (g.threads > 0) auvgp::set_thread_count(g.threads);
        auvgp::RunConfig cfg = effective_config(g);
        if (sim->parsed()) {
            if (!coefficients_path.empty())
                cfg.plant = auvgp::load_coefficients(coefficients_path);
            if (sim->count("--duration")) {
                if (duration <= 0)
                    throw auvgp::ConfigError("duration must be positive");
                cfg.experiment.duration = duration;
            }
            if (sim->count("--sample-dt")) {
                if (sample_dt <= 0)
                    throw auvgp::ConfigError("sample-dt must be positive");
                cfg.experiment.sample_dt = sample_dt;
            }
            if (sim->count("--integrator-dt")) {
                if (integrator_dt <= 0)
                    throw auvgp::ConfigError("integrator-dt must be positive");
                cfg.experiment.integrator_dt = integrator_dt;
            }
            return run_simulate_plant(g, cfg, experiment, sim_out);
        }
        if (train_cmd->parsed()) return run_train(g, cfg, train_data,
                                                  train_model);
        if (predict_cmd->parsed())
            return run_predict(g, pred_model, pred_data, pred_out);
        if (freerun_cmd->parsed())
            return run_free_run(g, fr_model, fr_data, fr_out, fr_start,
                                fr_teacher, fr_guard);
        if (protocol_cmd->parsed())
            return run_protocol_cmd(g, cfg, protocol_out);
        if (sens_cmd->parsed())
            return run_sensitivity_cmd(g, cfg, sens_durations, sens_out);
        std::cerr << "error: no subcommand\n";
        return kExitConfig;
    } catch (const auvgp::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
