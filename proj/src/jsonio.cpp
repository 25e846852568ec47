#include "auvgp/jsonio.hpp"

#include <fstream>

namespace auvgp {

nlohmann::json vec_to_json(const Vec& v) {
    nlohmann::json a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

nlohmann::json mat_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Vec json_to_vec(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array())
        throw ConfigError(what + ": expected an array of numbers");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number())
            throw ConfigError(what + ": element " + std::to_string(i) +
                              " is not a number");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Mat json_to_mat(const nlohmann::json& j, const std::string& what) {
    if (!j.is_array())
        throw ConfigError(what + ": expected an array of rows");
    if (j.empty()) return Mat(0, 0);
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Mat m(static_cast<Eigen::Index>(j.size()),
          static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ConfigError(what + ": row " + std::to_string(i) +
                              " is ragged or not an array");
        for (std::size_t k = 0; k < cols; ++k) {
            if (!j[i][k].is_number())
                throw ConfigError(what + ": entry (" + std::to_string(i) +
                                  "," + std::to_string(k) +
                                  ") is not a number");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
                j[i][k].get<double>();
        }
    }
    return m;
}

const nlohmann::json& require_field(const nlohmann::json& j,
                                    const std::string& key,
                                    const std::string& what) {
    auto it = j.find(key);
    if (it == j.end())
        throw ConfigError(what + ": missing required field '" + key + "'");
    return *it;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open JSON file: " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("failed to parse " + path + ": " + e.what());
    }
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write JSON file: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw Error("short write on JSON file: " + path);
}

}  // namespace auvgp
