#include "auvgp/config.hpp"

#include <set>

#include "auvgp/jsonio.hpp"

namespace auvgp {

namespace {

/// Applies the keys of `j` to bound destinations; anything unbound throws.
class Section {
  public:
    Section(const nlohmann::json* j, std::string name)
        : j_(j), name_(std::move(name)) {}

    void bind(const char* key, double& dst) {
        if (const auto* v = find(key)) {
            if (!v->is_number())
                throw ConfigError(name_ + "." + key + ": expected a number");
            dst = v->get<double>();
        }
    }
    void bind(const char* key, int& dst) {
        if (const auto* v = find(key)) {
            if (!v->is_number_integer())
                throw ConfigError(name_ + "." + key + ": expected an integer");
            dst = v->get<int>();
        }
    }
    void bind(const char* key, bool& dst) {
        if (const auto* v = find(key)) {
            if (!v->is_boolean())
                throw ConfigError(name_ + "." + key + ": expected a boolean");
            dst = v->get<bool>();
        }
    }
    void bind(const char* key, std::vector<int>& dst) {
        if (const auto* v = find(key)) {
            if (!v->is_array())
                throw ConfigError(name_ + "." + key + ": expected an array");
            dst.clear();
            for (const auto& e : *v) dst.push_back(e.get<int>());
        }
    }
    void bind(const char* key, std::vector<double>& dst) {
        if (const auto* v = find(key)) {
            if (!v->is_array())
                throw ConfigError(name_ + "." + key + ": expected an array");
            dst.clear();
            for (const auto& e : *v) dst.push_back(e.get<double>());
        }
    }
    const nlohmann::json* subsection(const char* key) { return find(key); }

    /// Call after all binds: rejects keys that matched nothing.
    void finish() const {
        if (j_ == nullptr) return;
        for (const auto& item : j_->items())
            if (!seen_.contains(item.key()))
                throw ConfigError(name_ + ": unknown key '" + item.key() +
                                  "'");
    }

  private:
    const nlohmann::json* find(const char* key) {
        seen_.insert(key);
        if (j_ == nullptr) return nullptr;
        auto it = j_->find(key);
        return it == j_->end() ? nullptr : &*it;
    }

    const nlohmann::json* j_;
    std::string name_;
    std::set<std::string> seen_;
};

void parse_optimizer(const nlohmann::json* j, const std::string& name,
                     OptimizerConfig& opt) {
    Section s(j, name);
    s.bind("restarts", opt.restarts);
    s.bind("max_iterations", opt.max_iterations);
    s.bind("tol_df", opt.tol_df);
    s.bind("tol_grad", opt.tol_grad);
    s.bind("bound", opt.bound);
    s.bind("init_low", opt.init_low);
    s.bind("init_high", opt.init_high);
    s.bind("noise_log_init", opt.noise_log_init);
    s.bind("memory", opt.memory);
    s.finish();
}

nlohmann::json optimizer_to_json(const OptimizerConfig& opt) {
    return {{"restarts", opt.restarts},
            {"max_iterations", opt.max_iterations},
            {"tol_df", opt.tol_df},
            {"tol_grad", opt.tol_grad},
            {"bound", opt.bound},
            {"init_low", opt.init_low},
            {"init_high", opt.init_high},
            {"noise_log_init", opt.noise_log_init},
            {"memory", opt.memory}};
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    RunConfig cfg;
    Section root(&j, "config");
    {
        // schema_version is required at the top level only.
        const auto* v = root.subsection("schema_version");
        if (v == nullptr)
            throw ConfigError("config: missing schema_version");
        if (!v->is_number_integer() || v->get<int>() != 1)
            throw ConfigError("config: unsupported schema_version");
    }
    if (const auto* p = root.subsection("plant")) {
        Section s(p, "plant");
        if (const auto* f = s.subsection("coefficients_file"))
            cfg.plant = load_coefficients(f->get<std::string>());
        if (const auto* c = s.subsection("coefficients"))
            cfg.plant = coefficients_from_json(*c);
        s.finish();
    }
    {
        Section s(root.subsection("signals"), "signals");
        auto& sig = cfg.signals;
        s.bind("chirp_f0", sig.chirp_f0);
        s.bind("chirp_f1", sig.chirp_f1);
        s.bind("switch_time", sig.switch_time);
        s.bind("prop_bias", sig.prop_bias);
        s.bind("prop_chirp_amp", sig.prop_chirp_amp);
        s.bind("prop_ramp_rate", sig.prop_ramp_rate);
        s.bind("prop_ramp_amp", sig.prop_ramp_amp);
        s.bind("prop_step_amp", sig.prop_step_amp);
        s.bind("rudder_chirp_amp", sig.rudder_chirp_amp);
        s.bind("rudder_ramp_rate", sig.rudder_ramp_rate);
        s.bind("rudder_ramp_amp", sig.rudder_ramp_amp);
        s.bind("rudder_step_amp", sig.rudder_step_amp);
        s.bind("stern_chirp_amp", sig.stern_chirp_amp);
        s.bind("stern_ramp_rate", sig.stern_ramp_rate);
        s.bind("stern_ramp_amp", sig.stern_ramp_amp);
        s.bind("stern_step_amp", sig.stern_step_amp);
        s.finish();
    }
    {
        Section s(root.subsection("experiment"), "experiment");
        s.bind("duration", cfg.experiment.duration);
        s.bind("sample_dt", cfg.experiment.sample_dt);
        s.bind("integrator_dt", cfg.experiment.integrator_dt);
        s.bind("initial_surge", cfg.experiment.initial_surge);
        s.finish();
    }
    {
        Section s(root.subsection("narx"), "narx");
        s.bind("lag", cfg.narx.lag);
        s.bind("boundary_time", cfg.narx.boundary_time);
        s.bind("n_max", cfg.narx.n_max);
        s.finish();
    }
    {
        Section s(root.subsection("model"), "model");
        s.bind("latents", cfg.model.latents);
        s.bind("independent_terms", cfg.model.independent_terms);
        s.finish();
    }
    parse_optimizer(root.subsection("optimizer"), "optimizer", cfg.optimizer);
    {
        Section s(root.subsection("protocol"), "protocol");
        s.bind("experiments", cfg.protocol.experiments);
        s.bind("divergence_guard", cfg.protocol.divergence_guard);
        s.bind("save_models", cfg.protocol.save_models);
        s.bind("write_plots", cfg.protocol.write_plots);
        parse_optimizer(s.subsection("optimizer"), "protocol.optimizer",
                        cfg.protocol.optimizer);
        s.finish();
    }
    {
        Section s(root.subsection("sensitivity"), "sensitivity");
        s.bind("durations", cfg.sensitivity.durations);
        parse_optimizer(s.subsection("optimizer"), "sensitivity.optimizer",
                        cfg.sensitivity.optimizer);
        s.finish();
    }
    root.finish();

    for (std::size_t i = 1; i < cfg.sensitivity.durations.size(); ++i)
        if (cfg.sensitivity.durations[i] <= cfg.sensitivity.durations[i - 1])
            throw ConfigError(
                "sensitivity.durations must be strictly increasing");
    for (int e : cfg.protocol.experiments)
        if (e < 1 || e > 8)
            throw ConfigError("protocol.experiments entries must be in 1..8");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    return config_from_json(load_json_file(path));
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["plant"] = {{"coefficients", coefficients_to_json(cfg.plant)}};
    const auto& sig = cfg.signals;
    j["signals"] = {{"chirp_f0", sig.chirp_f0},
                    {"chirp_f1", sig.chirp_f1},
                    {"switch_time", sig.switch_time},
                    {"prop_bias", sig.prop_bias},
                    {"prop_chirp_amp", sig.prop_chirp_amp},
                    {"prop_ramp_rate", sig.prop_ramp_rate},
                    {"prop_ramp_amp", sig.prop_ramp_amp},
                    {"prop_step_amp", sig.prop_step_amp},
                    {"rudder_chirp_amp", sig.rudder_chirp_amp},
                    {"rudder_ramp_rate", sig.rudder_ramp_rate},
                    {"rudder_ramp_amp", sig.rudder_ramp_amp},
                    {"rudder_step_amp", sig.rudder_step_amp},
                    {"stern_chirp_amp", sig.stern_chirp_amp},
                    {"stern_ramp_rate", sig.stern_ramp_rate},
                    {"stern_ramp_amp", sig.stern_ramp_amp},
                    {"stern_step_amp", sig.stern_step_amp}};
    j["experiment"] = {{"duration", cfg.experiment.duration},
                       {"sample_dt", cfg.experiment.sample_dt},
                       {"integrator_dt", cfg.experiment.integrator_dt},
                       {"initial_surge", cfg.experiment.initial_surge}};
    j["narx"] = {{"lag", cfg.narx.lag},
                 {"boundary_time", cfg.narx.boundary_time},
                 {"n_max", cfg.narx.n_max}};
    j["model"] = {{"latents", cfg.model.latents},
                  {"independent_terms", cfg.model.independent_terms}};
    j["optimizer"] = optimizer_to_json(cfg.optimizer);
    j["protocol"] = {{"experiments", cfg.protocol.experiments},
                     {"divergence_guard", cfg.protocol.divergence_guard},
                     {"save_models", cfg.protocol.save_models},
                     {"write_plots", cfg.protocol.write_plots},
                     {"optimizer", optimizer_to_json(cfg.protocol.optimizer)}};
    j["sensitivity"] = {{"durations", cfg.sensitivity.durations},
                        {"optimizer",
                         optimizer_to_json(cfg.sensitivity.optimizer)}};
    return j;
}

}  // namespace auvgp
