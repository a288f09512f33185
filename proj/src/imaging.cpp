#include "sinusnav/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>

#include "sinusnav/errors.hpp"
#include "sinusnav/io.hpp"
#include "sinusnav/simd/kernels.hpp"

namespace sinusnav {
namespace {

// Clockwise from north: P2..P9 in the usual thinning notation.
constexpr std::array<int, 8> kDu = {0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDv = {-1, -1, 0, 1, 1, 1, 0, -1};

std::array<int, 8> ring(const BinaryMask& m, int u, int v) {
  std::array<int, 8> p{};
  for (int k = 0; k < 8; ++k) {
    const int uu = u + kDu[k];
    const int vv = v + kDv[k];
    p[k] = m.in_bounds(uu, vv) && m.at(uu, vv) ? 1 : 0;
  }
  return p;
}

// Guo-Hall deletion test; ring entries map to P2..P9 in order.
bool deletable(const std::array<int, 8>& p, int pass) {
  const int p2 = p[0], p3 = p[1], p4 = p[2], p5 = p[3], p6 = p[4], p7 = p[5], p8 = p[6], p9 = p[7];
  const int c = ((1 - p2) & (p3 | p4)) + ((1 - p4) & (p5 | p6)) + ((1 - p6) & (p7 | p8)) + ((1 - p8) & (p9 | p2));
  const int n1 = (p9 | p2) + (p3 | p4) + (p5 | p6) + (p7 | p8);
  const int n2 = (p2 | p3) + (p4 | p5) + (p6 | p7) + (p8 | p9);
  const int n = std::min(n1, n2);
  const int m = pass == 0 ? ((p6 | p7 | (1 - p9)) & p8) : ((p2 | p3 | (1 - p5)) & p4);
  return c == 1 && n >= 2 && n <= 3 && m == 0;
}

// Yokoi connectivity number under 8-connectivity; 1 means deleting the pixel keeps topology.
int connectivity8(const std::array<int, 8>& p) {
  int n = 0;
  for (int k = 0; k < 8; k += 2) {
    const int a = 1 - p[k];
    const int b = 1 - p[(k + 1) % 8];
    const int c = 1 - p[(k + 2) % 8];
    n += a - a * b * c;
  }
  return n;
}

double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((px - ax) * dx + (py - ay) * dy) / len2, 0.0, 1.0);
  const double cx = ax + t * dx - px;
  const double cy = ay + t * dy - py;
  return std::sqrt(cx * cx + cy * cy);
}

}  // namespace

void ProjectionModel::validate() const {
  if (!(pixel_pitch > 0.0)) throw Error(Errc::invalid_argument, "pixel pitch must be positive");
  if (width <= 0 || height <= 0) throw Error(Errc::invalid_argument, "image size must be positive");
  if (!K.allFinite()) throw Error(Errc::invalid_argument, "projection matrix must be finite");
}

ProjectionModel orthographic_view(const RigidTransform& camera_to_base, double pixel_pitch, int width,
                                  int height, double u0, double v0) {
  Eigen::Matrix<double, 3, 4> intrinsic;
  intrinsic << 1.0 / pixel_pitch, 0, 0, u0,
               0, 1.0 / pixel_pitch, 0, v0,
               0, 0, 0, 1;
  ProjectionModel pm;
  pm.K = intrinsic * camera_to_base.inverse().matrix();
  pm.width = width;
  pm.height = height;
  pm.pixel_pitch = pixel_pitch;
  pm.validate();
  return pm;
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

BinaryMask::BinaryMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

PixelPoint project(const ProjectionModel& pm, const Vec3& p) {
  const Eigen::Vector4d h(p.x(), p.y(), p.z(), 1.0);
  return {pm.K.row(0).dot(h), pm.K.row(1).dot(h)};
}

GrayImage render_endoscope(const ProjectionModel& pm, const std::vector<Vec3>& body, double half_width,
                           const std::optional<RenderNoise>& noise) {
  if (body.size() < 2) throw Error(Errc::invalid_argument, "need at least two body points");
  if (!(half_width > 0.0)) throw Error(Errc::invalid_argument, "half width must be positive");
  GrayImage img(pm.width, pm.height, 0);
  std::vector<PixelPoint> px;
  px.reserve(body.size());
  for (const Vec3& p : body) px.push_back(project(pm, p));

  bool drawn = false;
  for (std::size_t s = 1; s < px.size(); ++s) {
    const PixelPoint& a = px[s - 1];
    const PixelPoint& b = px[s];
    const int u_lo = std::max(0, static_cast<int>(std::floor(std::min(a.u, b.u) - half_width)));
    const int u_hi = std::min(pm.width - 1, static_cast<int>(std::ceil(std::max(a.u, b.u) + half_width)));
    const int v_lo = std::max(0, static_cast<int>(std::floor(std::min(a.v, b.v) - half_width)));
    const int v_hi = std::min(pm.height - 1, static_cast<int>(std::ceil(std::max(a.v, b.v) + half_width)));
    for (int v = v_lo; v <= v_hi; ++v) {
      for (int u = u_lo; u <= u_hi; ++u) {
        if (point_segment_distance(u, v, a.u, a.v, b.u, b.v) <= half_width) {
          img.at(u, v) = 255;
          drawn = true;
        }
      }
    }
  }
  if (!drawn) throw Error(Errc::empty_frame, "endoscope projects entirely outside the image");

  if (noise) {
    std::mt19937_64 rng(noise->seed);
    std::normal_distribution<double> gauss(0.0, noise->sigma);
    for (std::uint8_t& value : img.pixels) {
      const double noisy = std::round(value + gauss(rng));
      value = static_cast<std::uint8_t>(std::clamp(noisy, 0.0, 255.0));
    }
  }
  return img;
}

BinaryMask segment(const GrayImage& img, std::uint8_t threshold) {
  BinaryMask mask(img.width, img.height);
  simd::threshold_u8(img.pixels.data(), mask.bits.data(), img.pixels.size(), threshold);
  return mask;
}

BinaryMask skeletonize(const BinaryMask& mask) {
  BinaryMask img = mask;
  std::vector<std::size_t> marked;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      marked.clear();
      for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
          if (img.at(u, v) && deletable(ring(img, u, v), pass)) {
            marked.push_back(static_cast<std::size_t>(v) * img.width + u);
          }
        }
      }
      for (const std::size_t idx : marked) img.bits[idx] = 0;
      changed = changed || !marked.empty();
    }
  }
  // Drop staircase corners left behind by 4-directional thinning.
  changed = true;
  while (changed) {
    changed = false;
    for (int v = 0; v < img.height; ++v) {
      for (int u = 0; u < img.width; ++u) {
        if (!img.at(u, v)) continue;
        const auto p = ring(img, u, v);
        const int b = p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
        if (b >= 2 && connectivity8(p) == 1) {
          img.set(u, v, false);
          changed = true;
        }
      }
    }
  }
  return img;
}

int skeleton_neighbors(const BinaryMask& skel, int u, int v) {
  const auto p = ring(skel, u, v);
  return p[0] + p[1] + p[2] + p[3] + p[4] + p[5] + p[6] + p[7];
}

PixelPoint find_tip(const BinaryMask& skel, const PixelPoint& reference) {
  struct Candidate {
    int u, v, neighbors;
    double distance;
  };
  std::vector<Candidate> endpoints;
  bool any = false;
  for (int v = 0; v < skel.height; ++v) {
    for (int u = 0; u < skel.width; ++u) {
      if (!skel.at(u, v)) continue;
      any = true;
      const int n = skeleton_neighbors(skel, u, v);
      if (n <= 1) endpoints.push_back({u, v, n, std::hypot(u - reference.u, v - reference.v)});
    }
  }
  if (!any) throw Error(Errc::no_skeleton, "skeleton is empty");
  if (endpoints.empty()) throw Error(Errc::no_endpoint, "skeleton has no endpoint (closed curve)");

  double far = 0.0;
  for (const Candidate& c : endpoints) far = std::max(far, c.distance);
  // Endpoints within a pixel and a half of the furthest one compete on
  // neighbour count.
  constexpr double kBand = 1.5;
  const Candidate* best = nullptr;
  for (const Candidate& c : endpoints) {
    if (c.distance < far - kBand) continue;
    if (best == nullptr || c.neighbors < best->neighbors ||
        (c.neighbors == best->neighbors &&
         (c.distance > best->distance ||
          (c.distance == best->distance && (c.v < best->v || (c.v == best->v && c.u < best->u)))))) {
      best = &c;
    }
  }
  return {static_cast<double>(best->u), static_cast<double>(best->v)};
}

Vec3 tip_to_base(const ProjectionModel& pm, const PlaneModel& plane, const PixelPoint& px) {
  const Eigen::Matrix<double, 2, 3> k = pm.K.topLeftCorner<2, 3>();
  Eigen::Matrix2d m;
  m.col(0) = k * plane.axis_u;
  m.col(1) = k * plane.axis_v;
  const Eigen::JacobiSVD<Eigen::Matrix2d> svd(m);
  const double smax = svd.singularValues()[0];
  const double smin = svd.singularValues()[1];
  if (!(smin > 0.0) || smax / smin >= 1e8) {
    throw Error(Errc::degenerate_view, "image plane is (nearly) edge-on to the path plane");
  }
  const Eigen::Vector2d rhs = Eigen::Vector2d(px.u, px.v) - k * plane.origin - pm.K.block<2, 1>(0, 3);
  const Eigen::Vector2d ab = m.fullPivLu().solve(rhs);
  return plane.from_chart(ab);
}

void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out = open_output(path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
}

void write_pbm(const std::string& path, const BinaryMask& mask) {
  std::ofstream out = open_output(path);
  out << "P4\n" << mask.width << ' ' << mask.height << '\n';
  const int row_bytes = (mask.width + 7) / 8;
  std::vector<char> row(static_cast<std::size_t>(row_bytes));
  for (int v = 0; v < mask.height; ++v) {
    std::fill(row.begin(), row.end(), 0);
    for (int u = 0; u < mask.width; ++u) {
      if (mask.at(u, v)) row[static_cast<std::size_t>(u / 8)] |= static_cast<char>(0x80 >> (u % 8));
    }
    out.write(row.data(), row_bytes);
  }
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_not_found, path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255) {
    throw Error(Errc::malformed_row, path + ": unsupported PGM header");
  }
  in.get();
  GrayImage img(w, h);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw Error(Errc::malformed_row, path + ": truncated PGM");
  return img;
}

}  // namespace sinusnav
