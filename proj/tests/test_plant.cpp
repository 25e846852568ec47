#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "doctest.h"

#include "auvgp/plant.hpp"

using namespace auvgp;

namespace {

PlantCoefficients neutral_coefficients() {
    PlantCoefficients c;
    c.B = c.W;
    c.r_b = c.r_g;
    return c;
}

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("equilibrium state with neutral buoyancy is an exact fixed point") {
    const PlantCoefficients c = neutral_coefficients();
    PlantState s;
    ControlInput in;

    const Vec6 acc = assemble_dynamics(c, s, in);
    CHECK(acc.isZero(0.0));

    const PlantState stepped = step_plant(c, s, in, 0.731);
    CHECK(stepped.eta.isApprox(s.eta, 0.0));
    CHECK(stepped.nu.isApprox(s.nu, 0.0));
}

TEST_CASE("weight/buoyancy imbalance puts 7 N net upward force in heave") {
    PlantCoefficients c;
    REQUIRE(c.W == doctest::Approx(299.0));
    REQUIRE(c.B == doctest::Approx(306.0));
    PlantState s;
    ControlInput in;

    const Vec6 acc = assemble_dynamics(c, s, in);
    const Vec6 force = mass_matrix(c) * acc;
    CHECK(std::abs(force(0)) < 1e-12);
    CHECK(std::abs(force(1)) < 1e-12);
    CHECK(force(2) == doctest::Approx(-7.0).epsilon(1e-12));
    CHECK(acc(2) < 0.0);
}

TEST_CASE("terminal surge speed matches the closed-form drag balance") {
    // Decouple surge: neutral restoring, centered CG/CB (a CG offset couples
    // thrust into pitch through the mass matrix), no prop torque, no linear
    // surge drag.
    PlantCoefficients c = neutral_coefficients();
    c.r_g = Vec3::Zero();
    c.r_b = Vec3::Zero();
    c.K_mprop = 0.0;
    c.d_lin(0) = 0.0;

    ControlInput in;
    in.n = 30.0;
    const double u_ss = std::sqrt(c.K_fprop * in.n * in.n / c.d_quad(0));

    PlantState s = cruise_state(1.5);
    const double dt = 0.05;
    for (int k = 0; k < 2400; ++k) s = step_plant(c, s, in, dt);

    CHECK(s.nu(0) == doctest::Approx(u_ss).epsilon(1e-3));
    CHECK(s.nu.tail<5>().cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("kinematics maps body velocity through the Euler rotation") {
    Vec6 eta = Vec6::Zero();
    Vec6 nu = Vec6::Zero();
    nu(0) = 1.0;

    SUBCASE("identity attitude") {
        const Vec6 d = kinematics(eta, nu);
        CHECK(d(0) == doctest::Approx(1.0));
        CHECK(d.tail<5>().cwiseAbs().maxCoeff() < 1e-15);
    }

    SUBCASE("90 degree yaw maps surge to Earth y") {
        eta(5) = M_PI / 2.0;
        const Vec6 d = kinematics(eta, nu);
        CHECK(std::abs(d(0)) < 1e-15);
        CHECK(d(1) == doctest::Approx(1.0));
    }
}

TEST_CASE("rotation block is orthonormal with determinant +1") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> angle(-M_PI, M_PI);
    std::uniform_real_distribution<double> pitch(-1.4, 1.4);

    for (int trial = 0; trial < 200; ++trial) {
        Vec6 eta = Vec6::Zero();
        eta(3) = angle(rng);
        eta(4) = pitch(rng);
        eta(5) = angle(rng);

        // Recover the rotation columns by pushing unit body velocities
        // through the kinematic map.
        Mat3 rot;
        for (int i = 0; i < 3; ++i) {
            Vec6 nu = Vec6::Zero();
            nu(i) = 1.0;
            rot.col(i) = kinematics(eta, nu).head<3>();
        }
        CHECK((rot.transpose() * rot - Mat3::Identity()).cwiseAbs().maxCoeff() <
              1e-12);
        CHECK(rot.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("kinematics throws GimbalLock near vertical pitch") {
    Vec6 eta = Vec6::Zero();
    Vec6 nu = Vec6::Ones();

    eta(4) = M_PI / 2.0 - 1e-4;
    CHECK_THROWS_AS(kinematics(eta, nu), GimbalLock);
    eta(4) = -(M_PI / 2.0 - 1e-4);
    CHECK_THROWS_AS(kinematics(eta, nu), GimbalLock);
    eta(4) = M_PI / 2.0 - 2e-3;
    CHECK_NOTHROW(kinematics(eta, nu));
}

TEST_CASE("assemble_dynamics rejects non-finite state") {
    const PlantCoefficients c;
    ControlInput in;
    PlantState s;
    s.nu(2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(assemble_dynamics(c, s, in), NonFiniteState);
}

TEST_CASE("assemble_dynamics is deterministic") {
    const PlantCoefficients c;
    PlantState s;
    s.eta << 1.0, -2.0, 3.0, 0.1, -0.2, 0.3;
    s.nu << 1.4, 0.1, -0.2, 0.3, -0.1, 0.2;
    ControlInput in{28.0, 0.1, -0.05};

    const Vec6 a = assemble_dynamics(c, s, in);
    const Vec6 b = assemble_dynamics(c, s, in);
    CHECK(a.isApprox(b, 0.0));
}

TEST_CASE("control inputs are clamped to saturation bounds") {
    const PlantCoefficients c;
    const ControlInput raw{100.0, -2.0, 0.2};
    const ControlInput in = clamp_input(c, raw);
    CHECK(in.n == doctest::Approx(c.n_max));
    CHECK(in.delta_rudder == doctest::Approx(-c.fin_max));
    CHECK(in.delta_elevator == doctest::Approx(0.2));
}

TEST_CASE("RK4 self-convergence order is at least 3.5") {
    const PlantCoefficients c;
    ControlInput in{28.0, 0.08, -0.06};

    auto run = [&](double dt) {
        PlantState s = cruise_state(1.5);
        const int steps = static_cast<int>(std::lround(10.0 / dt));
        for (int k = 0; k < steps; ++k) s = step_plant(c, s, in, dt);
        return s;
    };

    const PlantState ref = run(0.2 / 16.0);
    auto err = [&](double dt) {
        const PlantState s = run(dt);
        return std::sqrt((s.eta - ref.eta).squaredNorm() +
                         (s.nu - ref.nu).squaredNorm());
    };

    const double e1 = err(0.2);
    const double e2 = err(0.1);
    REQUIRE(e2 > 0.0);
    const double order = std::log2(e1 / e2);
    CHECK(order >= 3.5);
}

TEST_CASE("kinetic energy is non-increasing without input or restoring") {
    const PlantCoefficients c = neutral_coefficients();
    const Mat6 m = mass_matrix(c);
    ControlInput in;

    PlantState s = cruise_state(1.5);
    s.nu.tail<5>() << 0.2, -0.15, 0.3, -0.25, 0.2;

    double ke = 0.5 * s.nu.dot(m * s.nu);
    for (int k = 0; k < 200; ++k) {
        s = step_plant(c, s, in, 0.05);
        const double next = 0.5 * s.nu.dot(m * s.nu);
        CHECK(next <= ke + 1e-9);
        ke = next;
    }
    CHECK(ke < 0.5 * 1.5 * 1.5 * m(0, 0));
}

TEST_CASE("mirrored rudder mirrors the sway/roll/yaw response") {
    PlantCoefficients c = neutral_coefficients();
    c.K_mprop = 0.0;

    auto run = [&](double rudder) {
        ControlInput in{28.0, rudder, 0.0};
        PlantState s = cruise_state(1.5);
        for (int k = 0; k < 200; ++k) s = step_plant(c, s, in, 0.05);
        return s;
    };

    const PlantState pos = run(0.2);
    const PlantState neg = run(-0.2);

    for (int i : {0, 2, 4})
        CHECK(std::abs(pos.nu(i) - neg.nu(i)) < 1e-6);
    for (int i : {1, 3, 5})
        CHECK(std::abs(pos.nu(i) + neg.nu(i)) < 1e-6);
}

TEST_CASE("run_experiment row count follows duration and sampling") {
    const PlantCoefficients c;
    const SignalDefaults d;
    ExperimentOptions opt;
    opt.duration = 30.0;
    opt.sample_dt = 1.5;

    const TrajectoryLog log = run_experiment(c, make_experiment(1, d, 30.0), opt);
    CHECK(log.rows() == 21);
    CHECK(log.t.front() == doctest::Approx(0.0));
    CHECK(log.t.back() == doctest::Approx(30.0));
}

TEST_CASE("experiment 1 leaves the fin channels constant") {
    const PlantCoefficients c;
    const SignalDefaults d;
    ExperimentOptions opt;
    opt.duration = 120.0;

    const TrajectoryLog log = run_experiment(c, make_experiment(1, d, 120.0), opt);
    for (int k = 0; k < log.rows(); ++k) {
        CHECK(log.input(k, 1) == doctest::Approx(log.input(0, 1)));
        CHECK(log.input(k, 2) == doctest::Approx(log.input(0, 2)));
    }
}

TEST_CASE("full experiment 8 stays bounded and excites every output") {
    const PlantCoefficients c;
    const SignalDefaults d;
    const ExperimentOptions opt;

    const TrajectoryLog log = run_experiment(c, make_experiment(8, d, opt.duration), opt);
    REQUIRE(log.rows() == 1334);

    for (int ch = 0; ch < kNumOutputs; ++ch) {
        const auto col = log.channels.col(kNumInputs + ch);
        CHECK(col.cwiseAbs().maxCoeff() <= c.nu_cap(ch));
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        CHECK(var > 0.0);
    }
}

TEST_CASE("step_plant validates dt") {
    const PlantCoefficients c;
    CHECK_THROWS_AS(step_plant(c, PlantState{}, ControlInput{}, 0.0),
                    ConfigError);
    CHECK_THROWS_AS(step_plant(c, PlantState{}, ControlInput{}, -0.1),
                    ConfigError);
}

TEST_CASE("coefficient validation rejects unphysical sets") {
    PlantCoefficients c;
    c.Xud = 100.0;
    CHECK_THROWS_AS(validate_coefficients(c), ConfigError);

    c = PlantCoefficients{};
    c.B = 0.0;
    CHECK_THROWS_AS(validate_coefficients(c), ConfigError);

    c = PlantCoefficients{};
    c.d_quad(3) = -1.0;
    CHECK_THROWS_AS(validate_coefficients(c), ConfigError);

    c = PlantCoefficients{};
    c.fin_max = 0.0;
    CHECK_THROWS_AS(validate_coefficients(c), ConfigError);
}

TEST_CASE("coefficient files round-trip every field") {
    PlantCoefficients c;
    c.mass = 31.25;
    c.Yuv = -14.75;
    c.r_g = Vec3(0.001, -0.002, 0.0214);
    c.d_quad(5) = 9.125;
    c.nu_cap(0) = 2.875;

    const auto path = temp_file("auvgp_coeffs_roundtrip.txt");
    save_coefficients(c, path.string());
    const PlantCoefficients back = load_coefficients(path.string());

    CHECK(coefficients_to_json(back) == coefficients_to_json(c));
    std::filesystem::remove(path);
}

TEST_CASE("coefficient parsing rejects malformed input") {
    const auto path = temp_file("auvgp_coeffs_bad.txt");

    SUBCASE("unknown key") {
        std::FILE* f = std::fopen(path.string().c_str(), "w");
        std::fputs("no_such_key = 1.0\n", f);
        std::fclose(f);
        CHECK_THROWS_AS(load_coefficients(path.string()), ConfigError);
    }

    SUBCASE("wrong arity") {
        std::FILE* f = std::fopen(path.string().c_str(), "w");
        std::fputs("r_g = 1.0 2.0\n", f);
        std::fclose(f);
        CHECK_THROWS_AS(load_coefficients(path.string()), ConfigError);
    }

    SUBCASE("missing equals") {
        std::FILE* f = std::fopen(path.string().c_str(), "w");
        std::fputs("mass 30.0\n", f);
        std::fclose(f);
        CHECK_THROWS_AS(load_coefficients(path.string()), ConfigError);
    }

    std::filesystem::remove(path);
}

TEST_CASE("coefficient JSON honours defaults and rejects unknown keys") {
    nlohmann::json j;
    j["mass"] = 29.5;
    j["r_b"] = {0.0, 0.0, 0.001};

    const PlantCoefficients c = coefficients_from_json(j);
    CHECK(c.mass == doctest::Approx(29.5));
    CHECK(c.r_b.z() == doctest::Approx(0.001));
    CHECK(c.W == doctest::Approx(299.0));

    j["bogus"] = 1.0;
    CHECK_THROWS_AS(coefficients_from_json(j), ConfigError);
}
