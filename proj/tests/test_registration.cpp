#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sinusnav/errors.hpp"
#include "sinusnav/registration.hpp"

using namespace sinusnav;

namespace {

MarkerSet random_markers(std::mt19937_64& rng, int n, const std::string& frame = "O_P") {
  std::uniform_real_distribution<double> u(-50, 50);
  MarkerSet s;
  s.frame = frame;
  for (int k = 0; k < n; ++k) s.markers["m" + std::to_string(k)] = Vec3(u(rng), u(rng), u(rng));
  return s;
}

MarkerSet apply(const RigidTransform& t, const MarkerSet& src) {
  MarkerSet out;
  out.frame = "dst";
  for (const auto& [k, p] : src.markers) out.markers[k] = t.apply(p);
  return out;
}

RigidTransform random_rigid(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-200, 200);
  return {oracle::random_rotation(rng), Vec3(u(rng), u(rng), u(rng))};
}

Errc fit_error(const MarkerSet& a, const MarkerSet& b) {
  try {
    estimate_rigid(a, b);
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::invalid_state;
}

}  // namespace

TEST(EstimateRigid, IdentityOnSameSet) {
  std::mt19937_64 rng(1);
  const MarkerSet s = random_markers(rng, 5);
  const RigidFit f = estimate_rigid(s, s);
  EXPECT_LT((f.transform.matrix() - Mat4::Identity()).norm(), 1e-12);
  EXPECT_LT(f.rms_residual, 1e-12);
}

TEST(EstimateRigid, RecoversRandomTransforms) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const MarkerSet s = random_markers(rng, 3 + i % 8);
    const RigidTransform t = random_rigid(rng);
    const RigidFit f = estimate_rigid(s, apply(t, s));
    EXPECT_LT((f.transform.translation() - t.translation()).norm(), 1e-9);
    EXPECT_LT((f.transform.rotation() - t.rotation()).norm(), 1e-9);
    EXPECT_LT(f.rms_residual, 1e-9);
  }
}

TEST(EstimateRigid, NoisyMarkers) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.1);
  for (int i = 0; i < 100; ++i) {
    const MarkerSet s = random_markers(rng, 10);
    const RigidTransform t = random_rigid(rng);
    MarkerSet d = apply(t, s);
    for (auto& [k, p] : d.markers) p += Vec3(noise(rng), noise(rng), noise(rng));
    const RigidFit f = estimate_rigid(s, d);
    EXPECT_LE(f.rms_residual, 0.3);
    EXPECT_LE((f.transform.translation() - t.translation()).norm(), 0.2);
    EXPECT_NEAR(f.transform.rotation().determinant(), 1.0, 1e-9);
  }
}

TEST(EstimateRigid, RejectsReflection) {
  std::mt19937_64 rng(4);
  const MarkerSet s = random_markers(rng, 6);
  MarkerSet mirrored;
  for (const auto& [k, p] : s.markers) mirrored.markers[k] = Vec3(-p.x(), p.y(), p.z());
  const RigidFit f = estimate_rigid(s, mirrored);
  EXPECT_NEAR(f.transform.rotation().determinant(), 1.0, 1e-9);
  EXPECT_GT(f.rms_residual, 1.0);
}

TEST(EstimateRigid, ResidualInvariantUnderCommonRotation) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.5);
  const MarkerSet s = random_markers(rng, 8);
  MarkerSet d = apply(random_rigid(rng), s);
  for (auto& [k, p] : d.markers) p += Vec3(noise(rng), noise(rng), noise(rng));
  const RigidTransform r(oracle::random_rotation(rng), Vec3::Zero());
  EXPECT_NEAR(estimate_rigid(s, d).rms_residual, estimate_rigid(apply(r, s), apply(r, d)).rms_residual, 1e-9);
}

TEST(EstimateRigid, DistinctErrors) {
  std::mt19937_64 rng(6);
  const MarkerSet two = random_markers(rng, 2);
  EXPECT_EQ(fit_error(two, two), Errc::too_few_markers);

  const MarkerSet s = random_markers(rng, 4);
  MarkerSet renamed = s;
  renamed.markers.erase(renamed.markers.begin());
  renamed.markers["zz"] = Vec3(1, 2, 3);
  EXPECT_EQ(fit_error(s, renamed), Errc::label_mismatch);

  MarkerSet line;
  for (int k = 0; k < 5; ++k) line.markers["m" + std::to_string(k)] = Vec3(k, 2.0 * k, -k);
  EXPECT_EQ(fit_error(line, line), Errc::collinear_markers);
}

TEST(MarkerSetFile, RoundTrip) {
  std::mt19937_64 rng(7);
  const MarkerSet s = random_markers(rng, 4, "O_E");
  const std::string path = (std::filesystem::temp_directory_path() / "sinusnav_markers.json").string();
  write_marker_set(path, s);
  const MarkerSet back = load_marker_set(path);
  EXPECT_EQ(back.frame, "O_E");
  EXPECT_EQ(back.markers, s.markers);
}

TEST(ComposeChain, IdentityChain) {
  const RegistrationSet r = compose_chain({}, {}, {});
  EXPECT_EQ(r.t_a_b().matrix(), Mat4::Identity());
  EXPECT_EQ(r.t_p_b().matrix(), Mat4::Identity());
  EXPECT_EQ(to_base(r, Vec3(1, 2, 3)), Vec3(1, 2, 3));
}

TEST(ComposeChain, ConsistencyAndStepwiseMapping) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const RigidTransform ap = random_rigid(rng), pe = random_rigid(rng), eb = random_rigid(rng);
    const RegistrationSet r = compose_chain(ap, pe, eb);
    const Mat4 loop = (r.t_a_b() * ap.inverse() * pe.inverse() * eb.inverse()).matrix();
    EXPECT_LT((loop - Mat4::Identity()).norm(), 1e-9);
    const Vec3 pa = Vec3::Random() * 50;
    EXPECT_LT((r.t_a_b().apply(pa) - eb.apply(pe.apply(ap.apply(pa)))).norm(), 1e-9);
    const Vec3 pp = Vec3::Random() * 50;
    const Eigen::Vector4d h = eb.matrix() * pe.matrix() * Eigen::Vector4d(pp.x(), pp.y(), pp.z(), 1.0);
    EXPECT_LT((to_base(r, pp) - h.head<3>()).norm(), 1e-9);
  }
}

TEST(ToBase, PureTranslation) {
  const RegistrationSet r = compose_chain({}, RigidTransform::translation(Vec3(1, -2, 3)), {});
  EXPECT_EQ(to_base(r, Vec3(10, 10, 10)), Vec3(11, 8, 13));
}
