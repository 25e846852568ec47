#include "auvgp/narx.hpp"

#include <algorithm>
#include <cmath>

#include "auvgp/jsonio.hpp"

namespace auvgp {

bool NormalizationMap::operator==(const NormalizationMap& other) const {
    for (int ch = 0; ch < kNumChannels; ++ch)
        if (channel[ch].center != other.channel[ch].center ||
            channel[ch].half_range != other.channel[ch].half_range)
            return false;
    return segment_t0 == other.segment_t0 && segment_t1 == other.segment_t1;
}

nlohmann::json NormalizationMap::to_json() const {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["segment_t0"] = segment_t0;
    j["segment_t1"] = segment_t1;
    nlohmann::json chans = nlohmann::json::object();
    for (int ch = 0; ch < kNumChannels; ++ch)
        chans[kChannelNames[ch]] = {{"center", channel[ch].center},
                                    {"half_range", channel[ch].half_range}};
    j["channels"] = std::move(chans);
    return j;
}

NormalizationMap NormalizationMap::from_json(const nlohmann::json& j) {
    const std::string what = "normalization";
    const int version = require_field(j, "schema_version", what).get<int>();
    if (version != 1)
        throw ConfigError(what + ": unsupported schema_version " +
                          std::to_string(version));
    NormalizationMap map;
    map.segment_t0 = require_field(j, "segment_t0", what).get<double>();
    map.segment_t1 = require_field(j, "segment_t1", what).get<double>();
    const auto& chans = require_field(j, "channels", what);
    for (int ch = 0; ch < kNumChannels; ++ch) {
        const auto& c = require_field(chans, kChannelNames[ch], what);
        map.channel[ch].center =
            require_field(c, "center", what).get<double>();
        map.channel[ch].half_range =
            require_field(c, "half_range", what).get<double>();
        if (!(map.channel[ch].half_range > 0))
            throw ConfigError(what + ": non-positive half_range for " +
                              kChannelNames[ch]);
    }
    return map;
}

NormalizationMap build_normalization(const TrajectoryLog& log,
                                     double boundary_time) {
    if (log.rows() == 0) throw EmptyLog("build_normalization: empty log");
    int n_fit = 0;
    std::array<double, kNumChannels> lo{}, hi{};
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (int k = 0; k < log.rows(); ++k) {
        if (log.t[k] > boundary_time) continue;
        ++n_fit;
        for (int ch = 0; ch < kNumChannels; ++ch) {
            lo[ch] = std::min(lo[ch], log.channels(k, ch));
            hi[ch] = std::max(hi[ch], log.channels(k, ch));
        }
    }
    if (n_fit == 0)
        throw EmptyLog("build_normalization: no rows at or before t = " +
                       std::to_string(boundary_time));
    NormalizationMap map;
    map.segment_t0 = log.t.front();
    map.segment_t1 = std::min(boundary_time, log.t.back());
    for (int ch = 0; ch < kNumChannels; ++ch) {
        map.channel[ch].center = 0.5 * (hi[ch] + lo[ch]);
        const double half = 0.5 * (hi[ch] - lo[ch]);
        map.channel[ch].half_range = half > 0 ? half : 1.0;
    }
    return map;
}

int regressor_dim(int lag) { return kNumChannels * lag; }

RegressionDataset embed(const TrajectoryLog& log, int lag,
                        const NormalizationMap& norm) {
    if (lag < 1) throw ConfigError("embed: lag must be at least 1");
    if (log.rows() <= lag)
        throw LogTooShort("embed: need more than " + std::to_string(lag) +
                          " rows, got " + std::to_string(log.rows()));
    const int n = log.rows() - lag;
    const int dim = regressor_dim(lag);
    RegressionDataset data;
    data.X.resize(n, dim);
    data.Y.resize(n, kNumOutputs);
    data.t.resize(n);
    data.row.resize(n);
    data.norm = norm;
    data.lag = lag;
    // Channel order in the regressor: the six outputs, then the three
    // inputs, matching assemble_regressor.
    constexpr std::array<int, kNumChannels> order = {3, 4, 5, 6, 7, 8,
                                                     0, 1, 2};
    for (int k = lag; k < log.rows(); ++k) {
        const int i = k - lag;
        int col = 0;
        for (int ch : order)
            for (int back = 1; back <= lag; ++back)
                data.X(i, col++) = norm.normalize(ch, log.channels(k - back, ch));
        for (int out = 0; out < kNumOutputs; ++out)
            data.Y(i, out) =
                norm.normalize(kNumInputs + out, log.output(k, out));
        data.t[i] = log.t[k];
        data.row[i] = k;
    }
    return data;
}

Vec assemble_regressor(const std::vector<std::vector<double>>& history,
                       int lag) {
    if (static_cast<int>(history.size()) != kNumChannels)
        throw ConfigError("assemble_regressor: need " +
                          std::to_string(kNumChannels) + " channel histories");
    Vec x(regressor_dim(lag));
    constexpr std::array<int, kNumChannels> order = {3, 4, 5, 6, 7, 8,
                                                     0, 1, 2};
    int col = 0;
    for (int ch : order) {
        const auto& h = history[ch];
        if (static_cast<int>(h.size()) < lag)
            throw LogTooShort("assemble_regressor: channel history shorter "
                              "than the lag");
        for (int back = 1; back <= lag; ++back)
            x(col++) = h[h.size() - back];
    }
    return x;
}

std::pair<RegressionDataset, RegressionDataset> split_dataset(
    const RegressionDataset& data, double boundary_time) {
    std::vector<int> train_rows, val_rows;
    for (std::size_t i = 0; i < data.t.size(); ++i)
        (data.t[i] <= boundary_time ? train_rows : val_rows)
            .push_back(static_cast<int>(i));
    if (train_rows.empty() || val_rows.empty())
        throw DegenerateSplit(
            "split_dataset: boundary t = " + std::to_string(boundary_time) +
            " leaves " + std::to_string(train_rows.size()) + " training and " +
            std::to_string(val_rows.size()) + " validation targets");
    auto take = [&data](const std::vector<int>& rows) {
        RegressionDataset out;
        out.X.resize(rows.size(), data.X.cols());
        out.Y.resize(rows.size(), data.Y.cols());
        out.t.resize(rows.size());
        out.row.resize(rows.size());
        out.norm = data.norm;
        out.lag = data.lag;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.X.row(i) = data.X.row(rows[i]);
            out.Y.row(i) = data.Y.row(rows[i]);
            out.t[i] = data.t[rows[i]];
            out.row[i] = data.row[rows[i]];
        }
        return out;
    };
    return {take(train_rows), take(val_rows)};
}

RegressionDataset subsample(const RegressionDataset& data, int n_max) {
    if (n_max < 1) throw ConfigError("subsample: n_max must be positive");
    const int n = static_cast<int>(data.t.size());
    if (n <= n_max) return data;
    const int stride = (n + n_max - 1) / n_max;
    std::vector<int> keep;
    for (int i = 0; i < n; i += stride) keep.push_back(i);
    RegressionDataset out;
    out.X.resize(keep.size(), data.X.cols());
    out.Y.resize(keep.size(), data.Y.cols());
    out.t.resize(keep.size());
    out.row.resize(keep.size());
    out.norm = data.norm;
    out.lag = data.lag;
    for (std::size_t i = 0; i < keep.size(); ++i) {
        out.X.row(i) = data.X.row(keep[i]);
        out.Y.row(i) = data.Y.row(keep[i]);
        out.t[i] = data.t[keep[i]];
        out.row[i] = data.row[keep[i]];
    }
    return out;
}

}  // namespace auvgp
