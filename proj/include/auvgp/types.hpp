#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace auvgp {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A configuration file, flag, or schema problem. CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// Euler-angle kinematics evaluated too close to |pitch| = pi/2.
struct GimbalLock : Error {
    using Error::Error;
};

/// A plant state or derivative stopped being finite.
struct NonFiniteState : Error {
    using Error::Error;
};

/// Signal evaluated outside its [start_time, end_time] window.
struct OutOfWindow : Error {
    using Error::Error;
};

/// Covariance could not be factorized even at the maximum jitter level.
struct NotPositiveDefinite : Error {
    int escalation_level;
    NotPositiveDefinite(const std::string& msg, int level)
        : Error(msg), escalation_level(level) {}
};

struct EmptyLog : Error {
    using Error::Error;
};

struct LogTooShort : Error {
    using Error::Error;
};

struct DegenerateSplit : Error {
    using Error::Error;
};

struct NormalizationMismatch : Error {
    using Error::Error;
};

struct AllRestartsFailed : Error {
    using Error::Error;
};

/// Raised when a closed-loop simulation leaves the trusted envelope.
struct DivergenceDetected : Error {
    int horizon_reached;  // completed prediction steps before the abort
    DivergenceDetected(const std::string& msg, int horizon)
        : Error(msg), horizon_reached(horizon) {}
};

/// SplitMix64 step, used to derive independent child seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace auvgp
