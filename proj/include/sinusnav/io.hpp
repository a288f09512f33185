#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "sinusnav/geometry.hpp"

namespace sinusnav {

/// Shortest decimal text that round-trips the double ("%.17g").
std::string format_double(double v);

/// Opens for writing, creating parent directories; throws on failure.
std::ofstream open_output(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::ordered_json& j);

nlohmann::json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const nlohmann::json& j);

}  // namespace sinusnav
