#pragma once

#include <string>
#include <vector>

#include "auvgp/types.hpp"

namespace auvgp {

enum class SignalKind { chirp, step, ramp, constant };

SignalKind signal_kind_from_string(const std::string& s);
std::string to_string(SignalKind k);

/// One excitation segment on a command channel, active on
/// [start_time, end_time].
struct SignalSpec {
    SignalKind kind = SignalKind::constant;
    double amplitude = 0.0;
    double start_time = 0.0;
    double end_time = 0.0;
    double f0 = 0.0, f1 = 0.0;  // chirp band, Hz
    double step_time = 0.0;
    double ramp_rate = 0.0;  // units/s
};

/// Evaluates one segment at time t.
///   chirp:    A sin(2 pi (f0 tau + (f1-f0) tau^2 / (2 T))), tau = t - start
///   step:     0 before step_time, A from step_time on
///   ramp:     ramp_rate * tau, magnitude-clamped at |A|
///   constant: A
/// Throws OutOfWindow when t is outside [start_time, end_time].
double generate_signal(const SignalSpec& spec, double t);

/// A command channel as a sum of segments; segments whose window does not
/// contain t contribute nothing.
struct ChannelProgram {
    std::vector<SignalSpec> specs;
    double eval(double t) const;
};

/// Full three-channel excitation program for one experiment.
struct ExperimentProgram {
    ChannelProgram propeller;
    ChannelProgram rudder;
    ChannelProgram stern;
    int experiment_id = 0;  // 1..8 for the standard table, 0 for custom
};

/// Per-channel excitation sizing. The chirp band and switch time are shared.
struct SignalDefaults {
    // Band reaches through the plant's rigid-body modes while staying
    // resolvable at the 1.5 s sampling interval.
    double chirp_f0 = 0.005, chirp_f1 = 0.12;  // Hz
    double switch_time = 1000.0;               // chirp until here

    // Ramp and step amplitudes sit slightly above the chirp amplitude, so
    // the validation segment probes just beyond the range seen in training.
    double prop_bias = 25.0;  // rev/s, holds cruise speed on quiet channels
    double prop_chirp_amp = 5.0;
    double prop_ramp_rate = 0.007, prop_ramp_amp = 5.5;
    double prop_step_amp = 5.5;

    double rudder_chirp_amp = 0.30;  // rad
    double rudder_ramp_rate = 3.5e-4, rudder_ramp_amp = 0.32;
    double rudder_step_amp = 0.32;

    double stern_chirp_amp = 0.22;
    double stern_ramp_rate = 2.8e-4, stern_ramp_amp = 0.24;
    double stern_step_amp = 0.24;
};

/// Builds one of the eight standard excitation programs:
///   1..4 chirp then ramp, 5..8 chirp then step, cycling through
///   propeller / rudder / stern / all-surfaces.
/// The chirp occupies [0, min(switch_time, duration/2)); the second segment
/// runs to `duration`. Channels not excited hold their bias.
/// Throws ConfigError for ids outside 1..8.
ExperimentProgram make_experiment(int id, const SignalDefaults& d,
                                  double duration);

/// Chirp on the first half, ramp on the second half, all three channels.
/// Used by the training-size sensitivity sweep.
ExperimentProgram make_half_chirp_half_ramp(const SignalDefaults& d,
                                            double duration);

}  // namespace auvgp
