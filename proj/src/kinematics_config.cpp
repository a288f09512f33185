#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sinusnav/errors.hpp"
#include "sinusnav/kinematics.hpp"

namespace sinusnav {
namespace {

constexpr double kDeg = EIGEN_PI / 180.0;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<double> parse_numbers(const std::string& key, const std::string& value,
                                  std::size_t expected) {
  std::istringstream in(value);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size() || !std::isfinite(v)) {
      throw Error(Errc::config_error, "key '" + key + "': bad number '" + tok + "'");
    }
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw Error(Errc::config_error, "key '" + key + "' expects " + std::to_string(expected) +
                                        " values, got " + std::to_string(out.size()));
  }
  return out;
}

template <typename Vec>
void assign(Vec& dst, const std::vector<double>& src, double scale) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[static_cast<int>(i)] = src[i] * scale;
}

}  // namespace

RobotModel parse_robot_model(const std::string& text) {
  RobotModel model;
  Vec3 mount_translation = model.geometry.mount.translation();
  Vec3 mount_rpy = Vec3::Zero();

  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(Errc::config_error, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "notch_pairs") {
      const double n = parse_numbers(key, value, 1)[0];
      if (n != std::floor(n)) throw Error(Errc::config_error, "notch_pairs must be an integer");
      model.geometry.notch_pairs = static_cast<int>(n);
    } else if (key == "flexible_length_mm") {
      model.geometry.flexible_length = parse_numbers(key, value, 1)[0];
    } else if (key == "wrist_dc_mm") {
      model.geometry.wrist_dc = parse_numbers(key, value, 1)[0];
    } else if (key == "wrist_df_mm") {
      model.geometry.wrist_df = parse_numbers(key, value, 1)[0];
    } else if (key == "mount_translation_mm") {
      assign(mount_translation, parse_numbers(key, value, 3), 1.0);
    } else if (key == "mount_rpy_deg") {
      assign(mount_rpy, parse_numbers(key, value, 3), kDeg);
    } else if (key == "theta_rz_rad") {
      model.calibration.theta_rz = parse_numbers(key, value, 1)[0];
    } else if (key == "theta_rz_deg") {
      model.calibration.theta_rz = parse_numbers(key, value, 1)[0] * kDeg;
    } else if (key == "kc") {
      assign(model.calibration.kc, parse_numbers(key, value, 4), 1.0);
    } else if (key.size() == 3 && key.rfind("dh", 0) == 0 && key[2] >= '1' && key[2] <= '7') {
      // a_mm alpha_deg d_mm theta_offset_deg
      const auto v = parse_numbers(key, value, 4);
      model.dh[static_cast<std::size_t>(key[2] - '1')] = {v[0], v[1] * kDeg, v[2], v[3] * kDeg};
    } else if (key == "arm_min_rad") {
      assign(model.limits.arm_min, parse_numbers(key, value, 7), 1.0);
    } else if (key == "arm_max_rad") {
      assign(model.limits.arm_max, parse_numbers(key, value, 7), 1.0);
    } else if (key == "arm_min_deg") {
      assign(model.limits.arm_min, parse_numbers(key, value, 7), kDeg);
    } else if (key == "arm_max_deg") {
      assign(model.limits.arm_max, parse_numbers(key, value, 7), kDeg);
    } else if (key == "endo_min_rad") {
      assign(model.limits.endo_min, parse_numbers(key, value, 4), 1.0);
    } else if (key == "endo_max_rad") {
      assign(model.limits.endo_max, parse_numbers(key, value, 4), 1.0);
    } else if (key == "endo_min_deg") {
      assign(model.limits.endo_min, parse_numbers(key, value, 4), kDeg);
    } else if (key == "endo_max_deg") {
      assign(model.limits.endo_max, parse_numbers(key, value, 4), kDeg);
    } else {
      throw Error(Errc::config_error, "unknown key '" + key + "'");
    }
  }

  model.geometry.mount = RigidTransform::translation(mount_translation) *
                         RigidTransform::rot_z(mount_rpy[2]) * RigidTransform::rot_y(mount_rpy[1]) *
                         RigidTransform::rot_x(mount_rpy[0]);
  model.geometry.validate();
  return model;
}

RobotModel load_robot_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::file_not_found, path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_robot_model(ss.str());
}

}  // namespace sinusnav
