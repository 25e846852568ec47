#pragma once

#include <string>

#include "auvgp/types.hpp"

#include "json.hpp"

namespace auvgp {

nlohmann::json vec_to_json(const Vec& v);
nlohmann::json mat_to_json(const Mat& m);
Vec json_to_vec(const nlohmann::json& j, const std::string& what);
Mat json_to_mat(const nlohmann::json& j, const std::string& what);

/// j.at(key) with nlohmann's exceptions rethrown as ConfigError naming the key.
const nlohmann::json& require_field(const nlohmann::json& j,
                                    const std::string& key,
                                    const std::string& what);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace auvgp
