#pragma once

#include <string>

#include "auvgp/signals.hpp"
#include "auvgp/trajectory.hpp"
#include "auvgp/types.hpp"

#include "json.hpp"

namespace auvgp {

/// Earth-frame pose eta = (x, y, z, roll, pitch, yaw) and body-frame
/// velocity nu = (u, v, w, p, q, r).
struct PlantState {
    Vec6 eta = Vec6::Zero();
    Vec6 nu = Vec6::Zero();
};

/// Commanded actuator values: propeller speed (rev/s), rudder and
/// elevator/stern angles (rad). Clamped to saturation bounds before use.
struct ControlInput {
    double n = 0.0;
    double delta_rudder = 0.0;
    double delta_elevator = 0.0;
};

/// Hydrodynamic coefficient set for a torpedo-shaped vehicle.
///
/// Reduced standard parametrization: rigid-body inertia plus diagonal added
/// mass, diagonal linear+quadratic damping, a small set of signed cross-flow
/// (body/fin lift) coupling coefficients, W/B restoring with CG/CB offsets,
/// and quadratic propeller/fin actuator gains. All values are editable
/// through a flat key-value file, see load_coefficients().
struct PlantCoefficients {
    // rigid body; roll inertia includes the ballast ring, which brings the
    // roll mode into the same frequency band as the other rigid-body modes
    double mass = 30.48;
    double Ixx = 6.5, Iyy = 3.45, Izz = 3.45;
    // diagonal added mass, standard negative-coefficient convention
    double Xud = -0.93, Yvd = -35.5, Zwd = -35.5;
    double Kpd = -0.0704, Mqd = -4.88, Nrd = -4.88;
    // diagonal damping, stored as positive dissipative magnitudes
    Vec6 d_lin = (Vec6() << 0.5, 8.0, 8.0, 14.0, 1.0, 1.0).finished();
    Vec6 d_quad = (Vec6() << 3.87, 131.0, 131.0, 0.13, 9.40, 9.40).finished();
    // cross-flow / body-lift coupling (signed, force = coeff * u * <axis>).
    // The off-diagonal pairs are equal and opposite (Yur = -Nuv,
    // Zuq = -Muw), so their power contribution cancels and dissipativity
    // rests on the diagonal terms alone. Nuv and Muw slightly exceed the
    // Munk moment (Yvd - Xud) u v of the added-mass Coriolis terms, so
    // straight-and-level flight is a stable equilibrium in both planes
    // with mode frequencies well inside the 1.5 s sampling band.
    double Yuv = -5.0, Yur = -35.6;
    double Zuw = -5.0, Zuq = 35.6;
    double Muw = -35.6, Muq = -2.0;
    double Nuv = 35.6, Nur = -2.0;
    // restoring
    double W = 299.0, B = 306.0;
    Vec3 r_g = Vec3(0.0, 0.0, 0.0196);
    Vec3 r_b = Vec3::Zero();
    // actuators; the propeller torque and the rudder roll arm give the
    // off-plane channels a deterministic drive in single-input experiments
    double K_fprop = 0.01513, K_mprop = 1.2e-3;
    double Y_uudr = 9.64, N_uudr = -6.15, K_uudr = 1.0;
    double Z_uuds = -9.64, M_uuds = -6.15;
    // saturation bounds
    double n_max = 45.0;
    double fin_max = 0.5;
    // physical caps used by boundedness checks, ordered as nu
    Vec6 nu_cap = (Vec6() << 3.0, 1.5, 1.5, 2.0, 1.5, 1.5).finished();
};

/// Assembles M = M_RB + M_A (symmetric; CG offset fills the off-diagonal
/// rigid-body blocks).
Mat6 mass_matrix(const PlantCoefficients& c);

/// Throws ConfigError unless M is symmetric positive definite, W and B are
/// positive, and the diagonal damping magnitudes are non-negative.
void validate_coefficients(const PlantCoefficients& c);

/// Reads a flat `key = value` file (one scalar or one 3-vector per line,
/// '#' comments). Unlisted keys keep their defaults; unknown keys throw
/// ConfigError. The result is validated before returning.
PlantCoefficients load_coefficients(const std::string& path);

/// Writes every coefficient of `c` in the same key-value format.
void save_coefficients(const PlantCoefficients& c, const std::string& path);

/// Same key set as the coefficient file, as a JSON object (vectors become
/// arrays). Used for config echo in report manifests.
nlohmann::json coefficients_to_json(const PlantCoefficients& c);

/// Applies the keys present in `j` over the defaults, then validates.
PlantCoefficients coefficients_from_json(const nlohmann::json& j);

ControlInput clamp_input(const PlantCoefficients& c, const ControlInput& in);

/// Body-frame acceleration nu_dot = M^-1 (tau - C(nu) nu - D(nu) nu - g(eta)).
/// Pure function; throws NonFiniteState if anything goes non-finite.
Vec6 assemble_dynamics(const PlantCoefficients& c, const PlantState& s,
                       const ControlInput& in);

/// eta_dot = J(eta) nu with the Z-Y-X Euler kinematic map.
/// Throws GimbalLock when |pitch| >= pi/2 - 1e-3.
Vec6 kinematics(const Vec6& eta, const Vec6& nu);

/// One fixed-step RK4 step of the coupled pose/velocity ODE with the input
/// held constant over the step.
PlantState step_plant(const PlantCoefficients& c, const PlantState& s,
                      const ControlInput& in, double dt);

/// Straight-and-level start at the given surge speed.
PlantState cruise_state(double surge = 1.5);

struct ExperimentOptions {
    double duration = 2000.0;
    double sample_dt = 1.5;
    double integrator_dt = 0.05;
    double initial_surge = 1.5;
};

/// Simulates the program from the cruise condition and records
/// (t, commanded input, nu) every sample_dt seconds. sample_dt must be an
/// integer multiple of integrator_dt.
TrajectoryLog run_experiment(const PlantCoefficients& c,
                             const ExperimentProgram& program,
                             const ExperimentOptions& opt);

}  // namespace auvgp
