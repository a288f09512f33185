#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sinusnav/environment.hpp"
#include "sinusnav/errors.hpp"
#include "sinusnav/imaging.hpp"
#include "sinusnav/kinematics.hpp"

namespace sinusnav {

using WeightMatrix = Eigen::Matrix<double, kTotalDof, kTotalDof>;

struct ControllerConfig {
  WeightMatrix A = WeightMatrix::Identity();
  double dt = 0.1;                  // s
  double d_o = 1.5;                 // mm
  int delta = 20;                   // body points
  double waypoint_tol = 1.0;        // mm
  int max_steps_per_waypoint = 200;
  double step_clip = 0.05;          // rad per step, per joint
  double max_tip_step = 0.5;        // mm per step

  void validate() const;
};

struct ControlState {
  ArmConfig q_r = ArmConfig::Zero();
  EndoConfig q_e = EndoConfig::Zero();  // raw, before compensation
  int waypoint_index = 0;
  Vec3 tip_estimate = Vec3::Zero();      // mm, robot base frame
};

struct StepResult {
  JointVector dq = JointVector::Zero();  // already scaled by alpha
  bool feasible = true;
  double alpha = 1.0;
  std::vector<std::string> active_constraints;
  Vec3 predicted_tip = Vec3::Zero();
};

// Robot model plus the rigid map taking base-frame points into the frame the
// obstacle environment is stored in.
struct KinContext {
  RobotModel model;
  RigidTransform env_from_base;
};

struct RateQpResult {
  Eigen::VectorXd dq;
  std::vector<std::string> active_constraints;
};

// Displacement QP: min 0.5 dq^T A dq  s.t.  J dq = dx,  lower - q <= dq <= upper - q,
// |dq_k| <= clip. A rank-deficient J gets dx projected onto its range.
RateQpResult solve_rate_qp(const Eigen::MatrixXd& J, const Eigen::VectorXd& dx, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                           const Eigen::MatrixXd& A, double clip);

StepResult qp_step(const ControlState& state, const Vec3& target_b, const KinContext& kin,
                   const Environment& env, const ControllerConfig& cfg);

std::vector<double> obstacle_margins(const ControlState& state, const Environment& env,
                                     const KinContext& kin, const ControllerConfig& cfg);

struct TrajectoryRow {
  int step = 0;
  int waypoint_index = 0;
  double u = 0.0;
  double v = 0.0;
  Vec3 tip_est = Vec3::Zero();   // base frame
  Vec3 tip_true = Vec3::Zero();  // base frame
  ArmConfig q_r = ArmConfig::Zero();
  EndoConfig q_e = EndoConfig::Zero();
  double min_margin = 0.0;
  double alpha = 0.0;            // 0 on the terminal row
  std::string active_constraints;
};

struct TrajectoryLog {
  std::vector<TrajectoryRow> rows;
  bool completed = false;

  // QP steps actually applied; the terminal row records the final pose only.
  int steps_taken() const;
};

void write_trajectory_csv(const std::string& path, const TrajectoryLog& log);
TrajectoryLog load_trajectory_csv(const std::string& path);
/// One tip detection per logged frame: frame_index, u, v.
void write_detections_csv(const std::string& path, const TrajectoryLog& log);

struct ImagingLoop {
  ProjectionModel render_view;   // how the scene is actually imaged
  ProjectionModel model_view;    // the controller's estimate of the same projection
  PlaneModel plane_b;            // path plane in the base frame
  double half_width = 2.0;       // px
  std::uint8_t threshold = 128;
  std::optional<RenderNoise> noise;
  // Called with every acquired frame; optional.
  std::function<void(int step, const GrayImage&, const BinaryMask&)> on_frame;
};

// Thrown by follow_path. Carries the log up to the failure and, for imaging
// failures, the offending frame.
class ControlAbort : public Error {
 public:
  ControlAbort(Errc code, const std::string& what, TrajectoryLog log, std::optional<GrayImage> frame = {})
      : Error(code, what), log_(std::move(log)), frame_(std::move(frame)) {}
  const TrajectoryLog& log() const { return log_; }
  const std::optional<GrayImage>& frame() const { return frame_; }

 private:
  TrajectoryLog log_;
  std::optional<GrayImage> frame_;
};

struct Measurement {
  PixelPoint pixel;
  Vec3 tip_b = Vec3::Zero();
  GrayImage frame;
  BinaryMask skeleton;
};

// Image the current pose and back-project the detected tip. Throws
// imaging_failure (as a plain Error) on any pipeline failure.
Measurement measure_tip(const ControlState& state, const KinContext& kin, const ImagingLoop& imaging,
                        int frame_index);

TrajectoryLog follow_path(const ControlState& initial, const std::vector<Vec3>& path_b, const KinContext& kin,
                          const Environment& env, const ImagingLoop& imaging, const ControllerConfig& cfg);

}  // namespace sinusnav
