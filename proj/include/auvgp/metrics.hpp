#pragma once

#include <array>
#include <limits>
#include <string>

#include "auvgp/trajectory.hpp"
#include "auvgp/types.hpp"

namespace auvgp {

enum class Horizon { one_step, free_run };

std::string horizon_name(Horizon h);

struct ChannelMetrics {
    double rmse = 0, mae = 0, press = 0;
};

/// Residual statistics in normalized units. press is the raw sum of squared
/// residuals per channel; rmse and mae derive from the same residual vector,
/// so press = count * rmse^2 per channel. Aggregates are means over the six
/// output channels.
struct MetricsReport {
    std::array<ChannelMetrics, kNumOutputs> channel{};
    double rmse = 0, mae = 0, press = 0;
    int count = 0;
    int experiment_id = 0;
    std::string model_id;
    Horizon horizon = Horizon::one_step;
    // One-step only: fraction of residuals inside the 2 sigma band.
    double coverage_2sigma = std::numeric_limits<double>::quiet_NaN();
};

/// residuals: rows are evaluation points, columns the six output channels.
MetricsReport compute_metrics(const Mat& residuals);

/// Fraction of |residual| <= 2 * sd entries, pooled over all channels.
double coverage_fraction(const Mat& residuals, const Mat& sd);

}  // namespace auvgp
