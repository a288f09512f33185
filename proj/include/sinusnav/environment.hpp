#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sinusnav/geometry.hpp"

namespace sinusnav {

struct PointCloud {
  std::vector<Vec3> points;  // mm
  std::string frame_tag = "O_P";
};

/// Reads "x,y,z" rows (mm). Blank lines and '#' comments are skipped.
PointCloud load_cloud(const std::string& path);
void write_cloud(const std::string& path, const PointCloud& cloud);

struct Landmarks {
  Vec3 ostium = Vec3::Zero();
  Vec3 nostril = Vec3::Zero();
  Vec3 target = Vec3::Zero();
  Vec3 start = Vec3::Zero();
};

Landmarks load_landmarks(const std::string& path);
void write_landmarks(const std::string& path, const Landmarks& landmarks);

/// Plane n.x = offset with a right-handed chart (axis_u x axis_v = normal)
/// anchored at origin.
struct PlaneModel {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
  Vec3 axis_u = Vec3::UnitX();
  Vec3 axis_v = Vec3::UnitY();
  Vec3 origin = Vec3::Zero();

  double residual(const Vec3& p) const { return normal.dot(p) - offset; }
  Vec3 project(const Vec3& p) const { return p - residual(p) * normal; }
  Eigen::Vector2d to_chart(const Vec3& p) const {
    const Vec3 d = p - origin;
    return {axis_u.dot(d), axis_v.dot(d)};
  }
  Vec3 from_chart(const Eigen::Vector2d& uv) const { return origin + uv[0] * axis_u + uv[1] * axis_v; }
  PlaneModel transformed(const RigidTransform& t) const;
};

PlaneModel plane_through(const Vec3& a, const Vec3& b, const Vec3& c);

/// Plane through ostium, nostril and target; throws on collinear landmarks.
PlaneModel fit_plane(const Landmarks& landmarks);

/// Uniform voxel grid over a point set. Queries return exactly the brute-force
/// minimum: candidate cells are scanned with the same distance kernel and the
/// search only stops once no unvisited cell can hold a closer point.
class VoxelIndex {
 public:
  VoxelIndex() = default;
  VoxelIndex(const std::vector<Vec3>& points, double cell_size);

  double min_sq_distance(const Vec3& p) const;
  double min_distance(const Vec3& p) const;
  std::size_t size() const { return xs_.size(); }
  double cell_size() const { return cell_; }

 private:
  double cell_ = 1.0;
  Vec3 origin_ = Vec3::Zero();
  std::array<std::int64_t, 3> dims_{0, 0, 0};
  std::vector<std::uint32_t> cell_start_;
  std::vector<double> xs_, ys_, zs_;

  double scan_cell(std::int64_t ix, std::int64_t iy, std::int64_t iz, const Vec3& p, double best) const;
};

/// Linear scan over the whole cloud through the SIMD kernel.
double min_distance(const PointCloud& cloud, const Vec3& p);

/// Obstacle cloud plus the containment rule restricting the endoscope tip to
/// the cavity.
class Environment {
 public:
  using Containment = std::function<bool(const Vec3&)>;

  /// Without a containment solid, the cavity is the cloud's bounding box
  /// shrunk by the clearance tolerance.
  Environment(PointCloud cloud, double d_o, Containment solid = {});

  const PointCloud& cloud() const { return cloud_; }
  const VoxelIndex& index() const { return index_; }
  double min_distance(const Vec3& p) const { return index_.min_distance(p); }
  bool in_cavity(const Vec3& p, double d_o) const;
  bool has_solid() const { return static_cast<bool>(solid_); }

 private:
  PointCloud cloud_;
  VoxelIndex index_;
  Containment solid_;
  Vec3 box_min_ = Vec3::Zero();
  Vec3 box_max_ = Vec3::Zero();
};

}  // namespace sinusnav
