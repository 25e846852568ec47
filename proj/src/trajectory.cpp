#include "auvgp/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace auvgp {

const std::array<const char*, kNumChannels> kChannelNames = {
    "n", "delta_rudder", "delta_elevator", "u", "v", "w", "p", "q", "r"};

const std::array<const char*, kNumOutputs> kOutputNames = {"u", "v", "w",
                                                           "p", "q", "r"};

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot write: " + path);
    f << "t";
    for (const char* name : kChannelNames) f << "," << name;
    f << "\n";
    for (int i = 0; i < log.rows(); ++i) {
        f << format_full(log.t[i]);
        for (int c = 0; c < kNumChannels; ++c)
            f << "," << format_full(log.channels(i, c));
        f << "\n";
    }
}

TrajectoryLog read_trajectory_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw ConfigError(path + ": empty file");
    {
        std::string expect = "t";
        for (const char* name : kChannelNames) expect += std::string(",") + name;
        if (line != expect)
            throw ConfigError(path + ": unexpected header '" + line + "'");
    }
    std::vector<std::array<double, 1 + kNumChannels>> rows;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<double, 1 + kNumChannels> row{};
        std::istringstream ss(line);
        std::string cell;
        for (int c = 0; c < 1 + kNumChannels; ++c) {
            if (!std::getline(ss, cell, ','))
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": short row");
            try {
                row[c] = std::stod(cell);
            } catch (const std::exception&) {
                throw ConfigError(path + ":" + std::to_string(lineno) +
                                  ": bad number '" + cell + "'");
            }
        }
        rows.push_back(row);
    }
    TrajectoryLog log;
    log.t.resize(rows.size());
    log.channels.resize(static_cast<int>(rows.size()), kNumChannels);
    for (size_t i = 0; i < rows.size(); ++i) {
        log.t[i] = rows[i][0];
        for (int c = 0; c < kNumChannels; ++c)
            log.channels(static_cast<int>(i), c) = rows[i][1 + c];
    }
    return log;
}

}  // namespace auvgp
