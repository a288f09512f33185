#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sinusnav/environment.hpp"
#include "sinusnav/geometry.hpp"

namespace sinusnav {

/// Affine (orthographic) base-to-image map: [u v 1]^T = K [X Y Z 1]^T, third
/// row fixed to (0 0 0 1).
struct ProjectionModel {
  Eigen::Matrix<double, 3, 4> K = Eigen::Matrix<double, 3, 4>::Zero();
  int width = 256;
  int height = 192;
  double pixel_pitch = 0.42;  // mm per pixel

  void validate() const;
};

/// Orthographic view looking along -z of `camera_to_base` (a C-arm pose in
/// the base frame), with (u0, v0) the pixel of the camera origin.
ProjectionModel orthographic_view(const RigidTransform& camera_to_base, double pixel_pitch,
                                  int width, int height, double u0, double v0);

/// u to the right, v down, origin at the top-left pixel centre.
struct PixelPoint {
  double u = 0.0;
  double v = 0.0;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int w, int h, std::uint8_t fill = 0);
  std::uint8_t at(int u, int v) const { return pixels[static_cast<std::size_t>(v) * width + u]; }
  std::uint8_t& at(int u, int v) { return pixels[static_cast<std::size_t>(v) * width + u]; }
};

struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1, row-major

  BinaryMask() = default;
  BinaryMask(int w, int h);
  bool at(int u, int v) const { return bits[static_cast<std::size_t>(v) * width + u] != 0; }
  void set(int u, int v, bool on) { bits[static_cast<std::size_t>(v) * width + u] = on ? 1 : 0; }
  bool in_bounds(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
  std::size_t count() const;
  bool operator==(const BinaryMask& o) const = default;
};

struct RenderNoise {
  std::uint64_t seed = 0;
  double sigma = 10.0;  // intensity units
};

PixelPoint project(const ProjectionModel& pm, const Vec3& p_b);

/// Paints every pixel centre within half_width of the projected polyline at
/// 255 on a black frame; optional Gaussian intensity noise is clipped to [0, 255].
GrayImage render_endoscope(const ProjectionModel& pm, const std::vector<Vec3>& body, double half_width,
                           const std::optional<RenderNoise>& noise = std::nullopt);

BinaryMask segment(const GrayImage& img, std::uint8_t threshold);

/// Topology-preserving thinning: alternating north-west / south-east border
/// passes of the classic two-subiteration scheme, with deletions applied in
/// raster order against the current image so no component can vanish.
BinaryMask skeletonize(const BinaryMask& mask);

/// 8-neighbour count of a set pixel.
int skeleton_neighbors(const BinaryMask& skel, int u, int v);

/// Endpoint of the skeleton furthest from the reference pixel.
PixelPoint find_tip(const BinaryMask& skel, const PixelPoint& reference);

/// Point of the plane (base frame) whose projection is px.
Vec3 tip_to_base(const ProjectionModel& pm, const PlaneModel& plane_b, const PixelPoint& px);

void write_pgm(const std::string& path, const GrayImage& img);
void write_pbm(const std::string& path, const BinaryMask& mask);
GrayImage read_pgm(const std::string& path);

}  // namespace sinusnav
