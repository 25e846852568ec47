#include <cmath>

#include "doctest.h"

#include "auvgp/signals.hpp"

using namespace auvgp;

namespace {

SignalSpec window(SignalKind kind, double t0, double t1) {
    SignalSpec s;
    s.kind = kind;
    s.start_time = t0;
    s.end_time = t1;
    return s;
}

}  // namespace

TEST_CASE("chirp matches its phase formula and starts at zero") {
    SignalSpec s = window(SignalKind::chirp, 0.0, 1000.0);
    s.amplitude = 0.3;
    s.f0 = 0.005;
    s.f1 = 0.12;

    CHECK(generate_signal(s, 0.0) == 0.0);

    for (double t : {1.5, 123.0, 499.5, 1000.0}) {
        const double phase =
            2.0 * M_PI * (s.f0 * t + (s.f1 - s.f0) * t * t / (2.0 * 1000.0));
        CHECK(generate_signal(s, t) ==
              doctest::Approx(0.3 * std::sin(phase)).epsilon(1e-14));
    }
}

TEST_CASE("chirp with f0 == f1 is a plain sine") {
    SignalSpec s = window(SignalKind::chirp, 0.0, 100.0);
    s.amplitude = 1.0;
    s.f0 = s.f1 = 0.05;
    CHECK(generate_signal(s, 37.0) ==
          doctest::Approx(std::sin(2.0 * M_PI * 0.05 * 37.0)).epsilon(1e-14));
}

TEST_CASE("chirp window offset shifts the phase origin") {
    SignalSpec s = window(SignalKind::chirp, 50.0, 150.0);
    s.amplitude = 2.0;
    s.f0 = 0.01;
    s.f1 = 0.02;
    CHECK(generate_signal(s, 50.0) == 0.0);
    const double tau = 30.0, T = 100.0;
    const double phase =
        2.0 * M_PI * (s.f0 * tau + (s.f1 - s.f0) * tau * tau / (2.0 * T));
    CHECK(generate_signal(s, 80.0) ==
          doctest::Approx(2.0 * std::sin(phase)).epsilon(1e-14));
}

TEST_CASE("step is zero before step_time and the amplitude from it on") {
    SignalSpec s = window(SignalKind::step, 0.0, 2000.0);
    s.amplitude = 0.32;
    s.step_time = 1000.0;
    CHECK(generate_signal(s, 999.9) == 0.0);
    CHECK(generate_signal(s, 1000.0) == 0.32);
    CHECK(generate_signal(s, 1000.1) == 0.32);
    CHECK(generate_signal(s, 2000.0) == 0.32);
}

TEST_CASE("ramp grows linearly and clamps at the amplitude magnitude") {
    SignalSpec s = window(SignalKind::ramp, 0.0, 100.0);
    s.amplitude = 0.4;
    s.ramp_rate = 0.01;
    CHECK(generate_signal(s, 10.0) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(generate_signal(s, 40.0) == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(generate_signal(s, 50.0) == 0.4);
    CHECK(generate_signal(s, 100.0) == 0.4);

    s.ramp_rate = -0.01;
    CHECK(generate_signal(s, 10.0) == doctest::Approx(-0.1).epsilon(1e-14));
    CHECK(generate_signal(s, 90.0) == -0.4);
}

TEST_CASE("ramp clamp uses the magnitude of a negative amplitude") {
    SignalSpec s = window(SignalKind::ramp, 0.0, 100.0);
    s.amplitude = -0.2;
    s.ramp_rate = 0.01;
    CHECK(generate_signal(s, 90.0) == 0.2);
}

TEST_CASE("constant returns the amplitude everywhere in the window") {
    SignalSpec s = window(SignalKind::constant, 0.0, 10.0);
    s.amplitude = 25.0;
    CHECK(generate_signal(s, 0.0) == 25.0);
    CHECK(generate_signal(s, 9.99) == 25.0);
}

TEST_CASE("evaluation outside the window throws OutOfWindow") {
    SignalSpec s = window(SignalKind::constant, 10.0, 20.0);
    s.amplitude = 1.0;
    CHECK_THROWS_AS(generate_signal(s, 9.999), OutOfWindow);
    CHECK_THROWS_AS(generate_signal(s, 20.001), OutOfWindow);
    CHECK_NOTHROW(generate_signal(s, 10.0));
    CHECK_NOTHROW(generate_signal(s, 20.0));
}

TEST_CASE("channel program sums active segments and skips inactive ones") {
    ChannelProgram ch;
    SignalSpec bias = window(SignalKind::constant, 0.0, 100.0);
    bias.amplitude = 25.0;
    SignalSpec late = window(SignalKind::constant, 50.0, 100.0);
    late.amplitude = 5.0;
    ch.specs = {bias, late};

    CHECK(ch.eval(10.0) == 25.0);
    CHECK(ch.eval(75.0) == 30.0);
    CHECK(ch.eval(50.0) == 30.0);
}

TEST_CASE("empty channel program evaluates to zero") {
    ChannelProgram ch;
    CHECK(ch.eval(123.0) == 0.0);
}

TEST_CASE("signal kind names round-trip and unknown names throw") {
    for (SignalKind k : {SignalKind::chirp, SignalKind::step, SignalKind::ramp,
                         SignalKind::constant})
        CHECK(signal_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(signal_kind_from_string("sawtooth"), ConfigError);
}

TEST_CASE("experiment ids outside 1..8 are rejected") {
    const SignalDefaults d;
    CHECK_THROWS_AS(make_experiment(0, d, 2000.0), ConfigError);
    CHECK_THROWS_AS(make_experiment(9, d, 2000.0), ConfigError);
    for (int id = 1; id <= 8; ++id) CHECK_NOTHROW(make_experiment(id, d, 2000.0));
}

TEST_CASE("experiment 1 excites only the propeller") {
    const SignalDefaults d;
    const ExperimentProgram p = make_experiment(1, d, 2000.0);
    CHECK(p.experiment_id == 1);

    for (double t = 0.0; t <= 2000.0; t += 7.5) {
        CHECK(p.rudder.eval(t) == 0.0);
        CHECK(p.stern.eval(t) == 0.0);
    }
    // chirp rides on the bias during the first segment
    CHECK(p.propeller.eval(0.0) == d.prop_bias);
    bool moved = false;
    for (double t = 1.5; t < 1000.0; t += 1.5)
        if (std::abs(p.propeller.eval(t) - d.prop_bias) > 1.0) moved = true;
    CHECK(moved);
    // ramp holds the cap at the end of the log
    CHECK(p.propeller.eval(2000.0) ==
          doctest::Approx(d.prop_bias + d.prop_ramp_amp).epsilon(1e-12));
}

TEST_CASE("experiment 2 drives the rudder and leaves the stern alone") {
    const SignalDefaults d;
    const ExperimentProgram p = make_experiment(2, d, 2000.0);
    bool rudder_moved = false;
    for (double t = 0.0; t <= 2000.0; t += 1.5) {
        if (std::abs(p.rudder.eval(t)) > 0.01) rudder_moved = true;
        CHECK(p.stern.eval(t) == 0.0);
        CHECK(p.propeller.eval(t) == d.prop_bias);
    }
    CHECK(rudder_moved);
}

TEST_CASE("experiment 4 excites all three channels") {
    const SignalDefaults d;
    const ExperimentProgram p = make_experiment(4, d, 2000.0);
    bool prop = false, rud = false, stern = false;
    for (double t = 0.0; t <= 2000.0; t += 1.5) {
        if (std::abs(p.propeller.eval(t) - d.prop_bias) > 0.5) prop = true;
        if (std::abs(p.rudder.eval(t)) > 0.01) rud = true;
        if (std::abs(p.stern.eval(t)) > 0.01) stern = true;
    }
    CHECK(prop);
    CHECK(rud);
    CHECK(stern);
}

TEST_CASE("experiments 5..8 switch to a step after the chirp") {
    const SignalDefaults d;
    const ExperimentProgram p = make_experiment(6, d, 2000.0);
    // rudder variant: the step holds a constant offset over the whole
    // second half
    const double v1 = p.rudder.eval(1400.0);
    const double v2 = p.rudder.eval(1900.0);
    CHECK(v1 == doctest::Approx(d.rudder_step_amp).epsilon(1e-12));
    CHECK(v2 == doctest::Approx(d.rudder_step_amp).epsilon(1e-12));
}

TEST_CASE("short runs move the switch to half the duration") {
    const SignalDefaults d;
    const ExperimentProgram p = make_experiment(5, d, 500.0);
    // step becomes active at 250 s instead of the 1000 s default
    CHECK(p.propeller.eval(200.0) != doctest::Approx(d.prop_bias + d.prop_step_amp));
    CHECK(p.propeller.eval(300.0) ==
          doctest::Approx(d.prop_bias + d.prop_step_amp).epsilon(1e-12));
}

TEST_CASE("half chirp half ramp program reaches every ramp cap at the end") {
    const SignalDefaults d;
    const double duration = 500.0;
    const ExperimentProgram p = make_half_chirp_half_ramp(d, duration);
    CHECK(p.experiment_id == 0);
    CHECK(p.propeller.eval(duration) ==
          doctest::Approx(d.prop_bias + d.prop_ramp_amp).epsilon(1e-9));
    CHECK(p.rudder.eval(duration) ==
          doctest::Approx(d.rudder_ramp_amp).epsilon(1e-9));
    CHECK(p.stern.eval(duration) ==
          doctest::Approx(d.stern_ramp_amp).epsilon(1e-9));
}
