#pragma once

#include <array>
#include <string>
#include <vector>

#include "auvgp/types.hpp"

namespace auvgp {

/// Channel layout shared by logs, normalization maps, and regressors:
/// 3 command channels followed by the 6 velocity outputs.
constexpr int kNumInputs = 3;
constexpr int kNumOutputs = 6;
constexpr int kNumChannels = kNumInputs + kNumOutputs;

extern const std::array<const char*, kNumChannels> kChannelNames;
extern const std::array<const char*, kNumOutputs> kOutputNames;

/// Sampled record of one simulation run: time, commanded inputs, and
/// body-frame velocities, one row per sample.
struct TrajectoryLog {
    std::vector<double> t;
    // rows x 9, columns ordered as kChannelNames: n, delta_rudder,
    // delta_elevator, u, v, w, p, q, r
    Mat channels;

    int rows() const { return static_cast<int>(t.size()); }
    double input(int row, int ch) const { return channels(row, ch); }
    double output(int row, int ch) const {
        return channels(row, kNumInputs + ch);
    }
};

/// Writes `t,n,delta_rudder,delta_elevator,u,v,w,p,q,r` rows at full double
/// precision (17 significant digits).
void write_trajectory_csv(const TrajectoryLog& log, const std::string& path);

/// Reads a file produced by write_trajectory_csv. Throws ConfigError on a
/// malformed header or row.
TrajectoryLog read_trajectory_csv(const std::string& path);

/// Shortest-width decimal rendering that round-trips a double (%.17g).
std::string format_full(double v);

}  // namespace auvgp
