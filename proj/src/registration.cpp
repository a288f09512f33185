#include "sinusnav/registration.hpp"

#include <cmath>
#include <vector>

#include "sinusnav/errors.hpp"
#include "sinusnav/io.hpp"

namespace sinusnav {

MarkerSet load_marker_set(const std::string& path) {
  const nlohmann::json j = read_json(path);
  MarkerSet set;
  try {
    set.frame = j.at("frame").get<std::string>();
    for (const auto& [label, value] : j.at("markers").items()) set.markers[label] = vec3_from_json(value);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, path + ": " + e.what());
  }
  return set;
}

void write_marker_set(const std::string& path, const MarkerSet& set) {
  nlohmann::ordered_json j;
  j["frame"] = set.frame;
  nlohmann::ordered_json markers = nlohmann::ordered_json::object();
  for (const auto& [label, p] : set.markers) markers[label] = vec3_to_json(p);
  j["markers"] = markers;
  write_json(path, j);
}

RigidFit estimate_rigid(const MarkerSet& src, const MarkerSet& dst) {
  if (src.markers.size() < 3 || dst.markers.size() < 3) {
    throw Error(Errc::too_few_markers, "registration needs at least three markers per set");
  }
  if (src.markers.size() != dst.markers.size()) {
    throw Error(Errc::label_mismatch, "marker sets differ in size");
  }
  std::vector<Vec3> a;
  std::vector<Vec3> b;
  for (const auto& [label, p] : src.markers) {
    const auto it = dst.markers.find(label);
    if (it == dst.markers.end()) throw Error(Errc::label_mismatch, "marker '" + label + "' missing in target set");
    a.push_back(p);
    b.push_back(it->second);
  }
  const double n = static_cast<double>(a.size());
  Vec3 ca = Vec3::Zero();
  Vec3 cb = Vec3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
  }
  ca /= n;
  cb /= n;

  Mat3 h = Mat3::Zero();
  Mat3 spread = Mat3::Zero();
  for (std::size_t i = 0; i < a.size(); ++i) {
    h += (a[i] - ca) * (b[i] - cb).transpose();
    spread += (a[i] - ca) * (a[i] - ca).transpose();
  }
  // Second principal extent of the source set must be non-trivial.
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(spread);
  const double largest = eig.eigenvalues()[2];
  if (!(largest > 0.0) || eig.eigenvalues()[1] <= 1e-12 * largest) {
    throw Error(Errc::collinear_markers, "source markers are collinear");
  }

  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = v * d * u.transpose();
  const Vec3 t = cb - r * ca;

  RigidFit fit{RigidTransform(r, t), 0.0};
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (fit.transform.apply(a[i]) - b[i]).squaredNorm();
  fit.rms_residual = std::sqrt(sq / n);
  return fit;
}

RegistrationSet compose_chain(const RigidTransform& t_a_p, const RigidTransform& t_p_e,
                              const RigidTransform& t_e_b) {
  return RegistrationSet(t_a_p, t_p_e, t_e_b);
}

Vec3 to_base(const RegistrationSet& reg, const Vec3& p_p) {
  return reg.t_p_b().apply(p_p);
}

}  // namespace sinusnav
