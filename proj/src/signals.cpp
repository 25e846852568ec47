#include "auvgp/signals.hpp"

#include <algorithm>
#include <cmath>

namespace auvgp {

SignalKind signal_kind_from_string(const std::string& s) {
    if (s == "chirp") return SignalKind::chirp;
    if (s == "step") return SignalKind::step;
    if (s == "ramp") return SignalKind::ramp;
    if (s == "constant") return SignalKind::constant;
    throw ConfigError("unknown signal kind: " + s);
}

std::string to_string(SignalKind k) {
    switch (k) {
        case SignalKind::chirp: return "chirp";
        case SignalKind::step: return "step";
        case SignalKind::ramp: return "ramp";
        case SignalKind::constant: return "constant";
    }
    return "?";
}

double generate_signal(const SignalSpec& spec, double t) {
    if (t < spec.start_time || t > spec.end_time)
        throw OutOfWindow("signal evaluated outside its window");
    const double tau = t - spec.start_time;
    switch (spec.kind) {
        case SignalKind::chirp: {
            const double T = spec.end_time - spec.start_time;
            const double phase =
                2.0 * M_PI * (spec.f0 * tau +
                              (spec.f1 - spec.f0) * tau * tau / (2.0 * T));
            return spec.amplitude * std::sin(phase);
        }
        case SignalKind::step:
            return t >= spec.step_time ? spec.amplitude : 0.0;
        case SignalKind::ramp: {
            const double v = spec.ramp_rate * tau;
            const double a = std::abs(spec.amplitude);
            return std::clamp(v, -a, a);
        }
        case SignalKind::constant:
            return spec.amplitude;
    }
    return 0.0;
}

double ChannelProgram::eval(double t) const {
    double sum = 0.0;
    for (const auto& s : specs)
        if (t >= s.start_time && t <= s.end_time) sum += generate_signal(s, t);
    return sum;
}

namespace {

SignalSpec bias_spec(double amplitude, double duration) {
    SignalSpec s;
    s.kind = SignalKind::constant;
    s.amplitude = amplitude;
    s.start_time = 0.0;
    s.end_time = duration;
    return s;
}

SignalSpec chirp_spec(double amplitude, double t_end, double f0, double f1) {
    SignalSpec s;
    s.kind = SignalKind::chirp;
    s.amplitude = amplitude;
    s.start_time = 0.0;
    s.end_time = t_end;
    s.f0 = f0;
    s.f1 = f1;
    return s;
}

SignalSpec ramp_spec(double rate, double amplitude, double t0, double t1) {
    SignalSpec s;
    s.kind = SignalKind::ramp;
    s.amplitude = amplitude;
    s.ramp_rate = rate;
    s.start_time = t0;
    s.end_time = t1;
    return s;
}

SignalSpec step_spec(double amplitude, double t0, double t1) {
    SignalSpec s;
    s.kind = SignalKind::step;
    s.amplitude = amplitude;
    s.step_time = t0;
    s.start_time = t0;
    s.end_time = t1;
    return s;
}

}  // namespace

ExperimentProgram make_experiment(int id, const SignalDefaults& d,
                                  double duration) {
    if (id < 1 || id > 8) throw ConfigError("unknown experiment: must be 1..8");
    const double t_sw = std::min(d.switch_time, duration / 2.0);
    const bool ramp = id <= 4;          // 1..4 ramp, 5..8 step
    const int target = (id - 1) % 4;    // 0 prop, 1 rudder, 2 stern, 3 all

    ExperimentProgram p;
    p.experiment_id = id;
    p.propeller.specs.push_back(bias_spec(d.prop_bias, duration));

    auto excite = [&](ChannelProgram& ch, double chirp_amp, double ramp_rate,
                      double ramp_amp, double step_amp) {
        ch.specs.push_back(chirp_spec(chirp_amp, t_sw, d.chirp_f0, d.chirp_f1));
        if (ramp)
            ch.specs.push_back(ramp_spec(ramp_rate, ramp_amp, t_sw, duration));
        else
            ch.specs.push_back(step_spec(step_amp, t_sw, duration));
    };

    if (target == 0 || target == 3)
        excite(p.propeller, d.prop_chirp_amp, d.prop_ramp_rate, d.prop_ramp_amp,
               d.prop_step_amp);
    if (target == 1 || target == 3)
        excite(p.rudder, d.rudder_chirp_amp, d.rudder_ramp_rate,
               d.rudder_ramp_amp, d.rudder_step_amp);
    if (target == 2 || target == 3)
        excite(p.stern, d.stern_chirp_amp, d.stern_ramp_rate, d.stern_ramp_amp,
               d.stern_step_amp);
    return p;
}

ExperimentProgram make_half_chirp_half_ramp(const SignalDefaults& d,
                                            double duration) {
    SignalDefaults scaled = d;
    scaled.switch_time = duration / 2.0;
    // ramp reaches its cap by the end of the run regardless of duration
    scaled.prop_ramp_rate = d.prop_ramp_amp / (duration / 2.0);
    scaled.rudder_ramp_rate = d.rudder_ramp_amp / (duration / 2.0);
    scaled.stern_ramp_rate = d.stern_ramp_amp / (duration / 2.0);
    ExperimentProgram p = make_experiment(4, scaled, duration);
    p.experiment_id = 0;
    return p;
}

}  // namespace auvgp
