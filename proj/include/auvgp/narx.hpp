#pragma once

#include <array>
#include <utility>
#include <vector>

#include "auvgp/trajectory.hpp"
#include "auvgp/types.hpp"

#include "json.hpp"

namespace auvgp {

/// Per-channel affine map raw -> (raw - center) / half_range, fitted so the
/// fitting segment lands in [-1, 1]. A constant channel keeps half_range 1
/// so the map stays invertible.
struct AffineChannel {
    double center = 0;
    double half_range = 1;
};

struct NormalizationMap {
    std::array<AffineChannel, kNumChannels> channel{};
    double segment_t0 = 0, segment_t1 = 0;  // rows the statistics came from

    double normalize(int ch, double raw) const {
        return (raw - channel[ch].center) / channel[ch].half_range;
    }
    double denormalize(int ch, double value) const {
        return value * channel[ch].half_range + channel[ch].center;
    }

    bool operator==(const NormalizationMap& other) const;

    nlohmann::json to_json() const;
    static NormalizationMap from_json(const nlohmann::json& j);
};

/// Fits the map on the rows with t <= boundary_time. Statistics never touch
/// later rows, so validation data cannot leak into the scaling.
/// Throws EmptyLog when no rows qualify.
NormalizationMap build_normalization(const TrajectoryLog& log,
                                     double boundary_time);

/// Lagged regression dataset in normalized units. Row k of X stacks the
/// previous `lag` values of every channel, outputs first then inputs, each
/// channel contiguous with the most recent value first:
///   [u(k-1) ... u(k-lag), v(k-1) ..., r(k-lag),
///    n(k-1) ... n(k-lag), dr(k-1) ..., de(k-lag)].
/// Y holds the six normalized output channels at step k.
struct RegressionDataset {
    Mat X;                   // n x (kNumChannels * lag)
    Mat Y;                   // n x kNumOutputs
    std::vector<double> t;   // target times
    std::vector<int> row;    // source log row of each target
    NormalizationMap norm;
    int lag = 0;
};

int regressor_dim(int lag);

RegressionDataset embed(const TrajectoryLog& log, int lag,
                        const NormalizationMap& norm);

/// Builds one regressor row from normalized channel histories. history[ch]
/// must hold at least `lag` values ordered oldest first; the most recent of
/// each channel leads its block.
Vec assemble_regressor(const std::vector<std::vector<double>>& history,
                       int lag);

/// Targets at t <= boundary_time go to the first dataset, the rest to the
/// second. Throws DegenerateSplit when either side ends up empty.
std::pair<RegressionDataset, RegressionDataset> split_dataset(
    const RegressionDataset& data, double boundary_time);

/// Keeps every stride-th row with stride = ceil(n / n_max); returns the
/// dataset unchanged when it already fits.
RegressionDataset subsample(const RegressionDataset& data, int n_max);

}  // namespace auvgp
