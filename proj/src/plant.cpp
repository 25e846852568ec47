#include "auvgp/plant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace auvgp {

namespace {

Mat3 skew(const Vec3& a) {
    Mat3 s;
    s << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
    return s;
}

bool finite(const Vec6& v) { return v.allFinite(); }

}  // namespace

Mat6 mass_matrix(const PlantCoefficients& c) {
    Mat6 m = Mat6::Zero();
    m.topLeftCorner<3, 3>() = c.mass * Mat3::Identity();
    m.topRightCorner<3, 3>() = -c.mass * skew(c.r_g);
    m.bottomLeftCorner<3, 3>() = c.mass * skew(c.r_g);
    m.bottomRightCorner<3, 3>() = Vec3(c.Ixx, c.Iyy, c.Izz).asDiagonal();
    Vec6 added;
    added << c.Xud, c.Yvd, c.Zwd, c.Kpd, c.Mqd, c.Nrd;
    m -= added.asDiagonal();
    return m;
}

void validate_coefficients(const PlantCoefficients& c) {
    const Mat6 m = mass_matrix(c);
    if ((m - m.transpose()).norm() > 1e-12 * m.norm())
        throw ConfigError("mass matrix not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat6> es(m);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ConfigError("mass matrix not positive definite");
    if (!(c.W > 0.0) || !(c.B > 0.0))
        throw ConfigError("weight and buoyancy must be positive");
    if (c.d_lin.minCoeff() < 0.0 || c.d_quad.minCoeff() < 0.0)
        throw ConfigError("diagonal damping magnitudes must be >= 0");
    if (!(c.n_max > 0.0) || !(c.fin_max > 0.0))
        throw ConfigError("saturation bounds must be positive");
}

ControlInput clamp_input(const PlantCoefficients& c, const ControlInput& in) {
    ControlInput out;
    out.n = std::clamp(in.n, -c.n_max, c.n_max);
    out.delta_rudder = std::clamp(in.delta_rudder, -c.fin_max, c.fin_max);
    out.delta_elevator = std::clamp(in.delta_elevator, -c.fin_max, c.fin_max);
    return out;
}

Vec6 assemble_dynamics(const PlantCoefficients& c, const PlantState& s,
                       const ControlInput& raw) {
    if (!finite(s.eta) || !finite(s.nu)) throw NonFiniteState("state not finite");
    const ControlInput in = clamp_input(c, raw);
    const Vec6& nu = s.nu;
    const double u = nu(0), v = nu(1), w = nu(2);
    const double p = nu(3), q = nu(4), r = nu(5);

    const Mat6 m = mass_matrix(c);

    // Coriolis/centripetal from the full (rigid-body + added) mass matrix,
    // written so that C(nu) nu is exactly energy-conserving.
    const Vec3 nu1 = nu.head<3>(), nu2 = nu.tail<3>();
    const Vec3 p1 = m.topLeftCorner<3, 3>() * nu1 + m.topRightCorner<3, 3>() * nu2;
    const Vec3 p2 = m.bottomLeftCorner<3, 3>() * nu1 + m.bottomRightCorner<3, 3>() * nu2;
    Vec6 coriolis;
    coriolis.head<3>() = nu2.cross(p1);
    coriolis.tail<3>() = nu1.cross(p1) + nu2.cross(p2);

    // Restoring forces and moments, NED convention (z down).
    const double phi = s.eta(3), theta = s.eta(4);
    const double sphi = std::sin(phi), cphi = std::cos(phi);
    const double sth = std::sin(theta), cth = std::cos(theta);
    const double dW = c.W - c.B;
    const Vec3 gW = c.r_g * c.W, gB = c.r_b * c.B;
    Vec6 g;
    g << dW * sth, -dW * cth * sphi, -dW * cth * cphi,
        -(gW.y() - gB.y()) * cth * cphi + (gW.z() - gB.z()) * cth * sphi,
        (gW.z() - gB.z()) * sth + (gW.x() - gB.x()) * cth * cphi,
        -(gW.x() - gB.x()) * cth * sphi - (gW.y() - gB.y()) * sth;

    // Diagonal drag plus signed cross-flow coupling, as body-frame forces.
    Vec6 f_hydro;
    for (int i = 0; i < 6; ++i)
        f_hydro(i) = -(c.d_lin(i) + c.d_quad(i) * std::abs(nu(i))) * nu(i);
    f_hydro(1) += c.Yuv * u * v + c.Yur * u * r;
    f_hydro(2) += c.Zuw * u * w + c.Zuq * u * q;
    f_hydro(4) += c.Muw * u * w + c.Muq * u * q;
    f_hydro(5) += c.Nuv * u * v + c.Nur * u * r;

    // Propeller thrust/torque and fin lift at effective speed v_e = u.
    Vec6 tau = Vec6::Zero();
    const double uu = u * u;
    tau(0) = c.K_fprop * std::abs(in.n) * in.n;
    tau(3) = c.K_mprop * std::abs(in.n) * in.n + c.K_uudr * in.delta_rudder * uu;
    tau(1) = c.Y_uudr * in.delta_rudder * uu;
    tau(5) = c.N_uudr * in.delta_rudder * uu;
    tau(2) = c.Z_uuds * in.delta_elevator * uu;
    tau(4) = c.M_uuds * in.delta_elevator * uu;

    const Vec6 rhs = tau + f_hydro - coriolis - g;
    const Vec6 acc = m.llt().solve(rhs);
    if (!finite(acc)) throw NonFiniteState("acceleration not finite");
    return acc;
}

Vec6 kinematics(const Vec6& eta, const Vec6& nu) {
    const double phi = eta(3), theta = eta(4), psi = eta(5);
    if (std::abs(theta) >= M_PI / 2.0 - 1e-3)
        throw GimbalLock("pitch too close to +/-pi/2");
    const double sphi = std::sin(phi), cphi = std::cos(phi);
    const double sth = std::sin(theta), cth = std::cos(theta);
    const double spsi = std::sin(psi), cpsi = std::cos(psi);

    Mat3 rot;
    rot << cpsi * cth, -spsi * cphi + cpsi * sth * sphi,
        spsi * sphi + cpsi * cphi * sth,
        spsi * cth, cpsi * cphi + sphi * sth * spsi,
        -cpsi * sphi + sth * spsi * cphi,
        -sth, cth * sphi, cth * cphi;

    const double tth = sth / cth;
    Mat3 trans;
    trans << 1, sphi * tth, cphi * tth,
        0, cphi, -sphi,
        0, sphi / cth, cphi / cth;

    Vec6 eta_dot;
    eta_dot.head<3>() = rot * nu.head<3>();
    eta_dot.tail<3>() = trans * nu.tail<3>();
    return eta_dot;
}

namespace {

struct StateDeriv {
    Vec6 eta_dot;
    Vec6 nu_dot;
};

StateDeriv deriv(const PlantCoefficients& c, const PlantState& s,
                 const ControlInput& in) {
    return {kinematics(s.eta, s.nu), assemble_dynamics(c, s, in)};
}

PlantState advanced(const PlantState& s, const StateDeriv& d, double h) {
    PlantState out;
    out.eta = s.eta + h * d.eta_dot;
    out.nu = s.nu + h * d.nu_dot;
    return out;
}

}  // namespace

PlantState step_plant(const PlantCoefficients& c, const PlantState& s,
                      const ControlInput& in, double dt) {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    const StateDeriv k1 = deriv(c, s, in);
    const StateDeriv k2 = deriv(c, advanced(s, k1, dt / 2), in);
    const StateDeriv k3 = deriv(c, advanced(s, k2, dt / 2), in);
    const StateDeriv k4 = deriv(c, advanced(s, k3, dt), in);
    PlantState out;
    out.eta = s.eta + (dt / 6.0) * (k1.eta_dot + 2 * k2.eta_dot +
                                    2 * k3.eta_dot + k4.eta_dot);
    out.nu = s.nu + (dt / 6.0) * (k1.nu_dot + 2 * k2.nu_dot +
                                  2 * k3.nu_dot + k4.nu_dot);
    if (!finite(out.eta) || !finite(out.nu))
        throw NonFiniteState("state not finite after step");
    return out;
}

PlantState cruise_state(double surge) {
    PlantState s;
    s.nu(0) = surge;
    return s;
}

TrajectoryLog run_experiment(const PlantCoefficients& c,
                             const ExperimentProgram& program,
                             const ExperimentOptions& opt) {
    if (!(opt.duration > 0.0)) throw ConfigError("duration must be positive");
    if (!(opt.sample_dt > 0.0) || !(opt.integrator_dt > 0.0))
        throw ConfigError("time steps must be positive");
    const double ratio = opt.sample_dt / opt.integrator_dt;
    const long sub = std::lround(ratio);
    if (sub < 1 || std::abs(ratio - static_cast<double>(sub)) > 1e-9)
        throw ConfigError("sample_dt must be an integer multiple of integrator_dt");

    const int n_samples = static_cast<int>(std::floor(
                              opt.duration / opt.sample_dt + 1e-9)) + 1;
    TrajectoryLog log;
    log.t.resize(n_samples);
    log.channels.resize(n_samples, kNumChannels);

    auto command = [&](double t) {
        ControlInput in;
        in.n = program.propeller.eval(t);
        in.delta_rudder = program.rudder.eval(t);
        in.delta_elevator = program.stern.eval(t);
        return clamp_input(c, in);
    };

    PlantState s = cruise_state(opt.initial_surge);
    for (int k = 0; k < n_samples; ++k) {
        const double t_sample = k * opt.sample_dt;
        const ControlInput in = command(t_sample);
        log.t[k] = t_sample;
        log.channels(k, 0) = in.n;
        log.channels(k, 1) = in.delta_rudder;
        log.channels(k, 2) = in.delta_elevator;
        log.channels.row(k).tail(kNumOutputs) = s.nu.transpose();
        if (k + 1 == n_samples) break;
        for (long i = 0; i < sub; ++i) {
            const double t = t_sample + i * opt.integrator_dt;
            s = step_plant(c, s, command(t), opt.integrator_dt);
        }
    }
    return log;
}

namespace {

using KeyMap = std::map<std::string, std::vector<double>>;

KeyMap parse_key_value(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open coefficient file: " + path);
    KeyMap kv;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        std::string eq;
        ss >> eq;
        if (eq != "=")
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": expected 'key = value...'");
        std::vector<double> vals;
        double x;
        while (ss >> x) vals.push_back(x);
        if (vals.empty())
            throw ConfigError(path + ":" + std::to_string(lineno) +
                              ": no numeric value for " + key);
        kv[key] = vals;
    }
    return kv;
}

struct Binding {
    double* scalar = nullptr;
    Vec3* vec3 = nullptr;
    Vec6* vec6 = nullptr;
};

std::map<std::string, Binding> bindings(PlantCoefficients& c) {
    std::map<std::string, Binding> b;
    auto s = [&](const char* k, double& v) { b[k] = {&v, nullptr, nullptr}; };
    auto v3 = [&](const char* k, Vec3& v) { b[k] = {nullptr, &v, nullptr}; };
    auto v6 = [&](const char* k, Vec6& v) { b[k] = {nullptr, nullptr, &v}; };
    s("mass", c.mass);
    s("Ixx", c.Ixx), s("Iyy", c.Iyy), s("Izz", c.Izz);
    s("X_udot", c.Xud), s("Y_vdot", c.Yvd), s("Z_wdot", c.Zwd);
    s("K_pdot", c.Kpd), s("M_qdot", c.Mqd), s("N_rdot", c.Nrd);
    v6("d_lin", c.d_lin), v6("d_quad", c.d_quad);
    s("Y_uv", c.Yuv), s("Y_ur", c.Yur);
    s("Z_uw", c.Zuw), s("Z_uq", c.Zuq);
    s("M_uw", c.Muw), s("M_uq", c.Muq);
    s("N_uv", c.Nuv), s("N_ur", c.Nur);
    s("W", c.W), s("B", c.B);
    v3("r_g", c.r_g), v3("r_b", c.r_b);
    s("K_fprop", c.K_fprop), s("K_mprop", c.K_mprop);
    s("Y_uudr", c.Y_uudr), s("N_uudr", c.N_uudr), s("K_uudr", c.K_uudr);
    s("Z_uuds", c.Z_uuds), s("M_uuds", c.M_uuds);
    s("n_max", c.n_max), s("fin_max", c.fin_max);
    v6("nu_cap", c.nu_cap);
    return b;
}

}  // namespace

PlantCoefficients load_coefficients(const std::string& path) {
    PlantCoefficients c;
    auto b = bindings(c);
    for (const auto& [key, vals] : parse_key_value(path)) {
        auto it = b.find(key);
        if (it == b.end()) throw ConfigError("unknown coefficient key: " + key);
        const Binding& bind = it->second;
        if (bind.scalar) {
            if (vals.size() != 1)
                throw ConfigError(key + ": expected 1 value");
            *bind.scalar = vals[0];
        } else if (bind.vec3) {
            if (vals.size() != 3)
                throw ConfigError(key + ": expected 3 values");
            *bind.vec3 = Vec3(vals[0], vals[1], vals[2]);
        } else {
            if (vals.size() != 6)
                throw ConfigError(key + ": expected 6 values");
            for (int i = 0; i < 6; ++i) (*bind.vec6)(i) = vals[i];
        }
    }
    validate_coefficients(c);
    return c;
}

void save_coefficients(const PlantCoefficients& c, const std::string& path) {
    PlantCoefficients mut = c;
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write coefficient file: " + path);
    f << "# AUV plant coefficients (flat key = value, vectors space-separated)\n";
    for (const auto& [key, bind] : bindings(mut)) {
        f << key << " =";
        if (bind.scalar) {
            f << " " << format_full(*bind.scalar);
        } else if (bind.vec3) {
            for (int i = 0; i < 3; ++i) f << " " << format_full((*bind.vec3)(i));
        } else {
            for (int i = 0; i < 6; ++i) f << " " << format_full((*bind.vec6)(i));
        }
        f << "\n";
    }
}

nlohmann::json coefficients_to_json(const PlantCoefficients& c) {
    PlantCoefficients mut = c;
    nlohmann::json j;
    for (const auto& [key, bind] : bindings(mut)) {
        if (bind.scalar) {
            j[key] = *bind.scalar;
        } else if (bind.vec3) {
            j[key] = {(*bind.vec3)(0), (*bind.vec3)(1), (*bind.vec3)(2)};
        } else {
            nlohmann::json arr = nlohmann::json::array();
            for (int i = 0; i < 6; ++i) arr.push_back((*bind.vec6)(i));
            j[key] = std::move(arr);
        }
    }
    return j;
}

PlantCoefficients coefficients_from_json(const nlohmann::json& j) {
    PlantCoefficients c;
    auto b = bindings(c);
    for (const auto& [key, value] : j.items()) {
        auto it = b.find(key);
        if (it == b.end())
            throw ConfigError("unknown coefficient key: " + key);
        const Binding& bind = it->second;
        if (bind.scalar) {
            if (!value.is_number())
                throw ConfigError(key + ": expected a number");
            *bind.scalar = value.get<double>();
        } else if (bind.vec3) {
            if (!value.is_array() || value.size() != 3)
                throw ConfigError(key + ": expected 3 values");
            for (int i = 0; i < 3; ++i) (*bind.vec3)(i) = value[i].get<double>();
        } else {
            if (!value.is_array() || value.size() != 6)
                throw ConfigError(key + ": expected 6 values");
            for (int i = 0; i < 6; ++i) (*bind.vec6)(i) = value[i].get<double>();
        }
    }
    validate_coefficients(c);
    return c;
}

}  // namespace auvgp
