#pragma once

#include "cinetransfer/body.h"
#include "cinetransfer/raster.h"
#include "cinetransfer/retarget.h"

#include <optional>
#include <span>
#include <vector>

namespace cinetransfer {

/// Shared intrinsics of one shot.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  bool operator==(const CameraIntrinsics&) const = default;
};

/// Per-frame world-to-camera extrinsics with fixed intrinsics.
struct CameraTrajectory {
  CameraIntrinsics intrinsics;
  std::vector<RigidTransform> extrinsics;

  int num_frames() const {
    return static_cast<int>(extrinsics.size());
  }
  PinholeCamera camera(int t) const;
};

/// Supervision extracted from the original shot for one frame.
struct EvidenceFrame {
  Mask mask;
  Keypoints2D keypoints;
  /// Flow to the next frame; absent on the last frame.
  std::optional<FlowField> flow;
};

struct EvidenceTrack {
  std::vector<EvidenceFrame> frames;

  int num_frames() const {
    return static_cast<int>(frames.size());
  }
  /// Frame count and resolution must match; flow sizes must match masks.
  void validate(int numFrames, int width, int height) const;
};

struct LossValue {
  double value = 0.0;
  /// Nothing to compare (empty masks, no valid pairs, empty overlap).
  bool degenerate = false;
};

/// Silhouette loss against a fixed reference mask. The reference boundary
/// distance map is built once so repeated evaluations stay cheap.
class InstanceLoss {
 public:
  explicit InstanceLoss(const Mask& reference);

  /// 0.5 * (1 - IoU) + 0.5 * symmetric mean boundary distance / diagonal.
  LossValue operator()(const Mask& rendered) const;

 private:
  Mask reference_;
  std::vector<int> referenceBoundary_; // pixel indices
  std::vector<double> distanceToReference_;
};

LossValue loss_instance(const Mask& rendered, const Mask& reference);

/// Confidence-weighted mean squared pixel distance over pairs with a visible
/// projection and confidence >= 0.3, divided by the squared image diagonal.
/// `projected` is aligned with `reference` point by point.
LossValue loss_semantic(
    std::span<const ProjectedJoint> projected,
    const Keypoints2D& reference,
    double imageDiagonal);

/// Mean endpoint error over pixels valid in both fields and inside `region`,
/// divided by the image diagonal.
LossValue loss_motion(const FlowField& rendered, const FlowField& reference, const Mask& region);

/// Pixel indices of mask pixels with a 4-neighbour outside the mask (image
/// borders count as outside).
std::vector<int> mask_boundary(const Mask& mask);

/// Exact Euclidean distance from every pixel of a width x height grid to the
/// nearest listed site; +inf everywhere when there are no sites.
std::vector<double> distance_transform(int width, int height, std::span<const int> sites);

struct CamOptConfig {
  double lambda_instance = 1.0;
  double lambda_semantic = 1.0;
  double lambda_motion = 0.5;
  /// Weight of the squared second-difference penalty of the smoothing pass.
  double lambda_temporal = 0.0;
  /// Central-difference steps: radians, and a fraction of the scene diameter.
  double fd_rotation = 1e-3;
  double fd_translation = 1e-3;
  /// First line-search step length, in the same normalized units.
  double initial_step = 0.02;
  double min_step = 1e-6;
  int max_iterations = 200;
  /// Stop once an accepted step improves the loss by less than this.
  double tolerance = 1e-7;
  bool warm_start = true;
  int smoothing_sweeps = 100;
  int jobs = 1;

  void validate() const;
};

/// What the optimizer renders for one frame.
struct FrameScene {
  const Vertices* mesh = nullptr;
  const Faces* faces = nullptr;
  /// 3D points aligned with the evidence keypoints.
  std::span<const Vec3> keypoint_points;
  /// Mesh and camera at t+1, for the flow term.
  const Vertices* next_mesh = nullptr;
  std::optional<PinholeCamera> next_camera;
};

struct LossBreakdown {
  double instance = 0.0;
  double semantic = 0.0;
  double motion = 0.0;
  double total = 0.0;
};

/// Weighted loss of one frame rendered from `cam`.
LossBreakdown frame_loss(
    const PinholeCamera& cam,
    const FrameScene& scene,
    const EvidenceFrame& evidence,
    const CamOptConfig& cfg);

struct FrameResult {
  RigidTransform extrinsics;
  LossBreakdown initial;
  LossBreakdown final;
  int iterations = 0;
  bool skipped = false;
  /// Loss after every accepted step, starting with the initial loss.
  std::vector<double> history;
};

/// Refines the extrinsics of one frame. The search runs over a 6-vector
/// perturbation: a rotation of the scene about its center and a camera-frame
/// translation scaled by the scene diameter. Never returns a worse loss than
/// the initial camera's.
FrameResult optimize_frame(
    const PinholeCamera& init,
    const FrameScene& scene,
    const EvidenceFrame& evidence,
    const CamOptConfig& cfg,
    const std::optional<RigidTransform>& warmStart = std::nullopt);

/// Everything the trajectory optimizer renders: posed meshes sharing one face
/// list, and per-frame 3D points matching the evidence keypoints.
struct AnimatedScene {
  Faces faces;
  std::vector<Vertices> meshes;
  std::vector<std::vector<Vec3>> keypoint_points;
};

struct TrajectoryResult {
  CameraTrajectory cameras;
  std::vector<FrameResult> frames;
};

/// Frame-by-frame refinement with warm starts, then optional temporal
/// smoothing when lambda_temporal > 0.
TrajectoryResult optimize_trajectory(
    const CameraTrajectory& init,
    const AnimatedScene& scene,
    const EvidenceTrack& evidence,
    const CamOptConfig& cfg);

/// Minimizes sum |x_t - y_t|^2 + lambda * sum |x_{t-1} - 2 x_t + x_{t+1}|^2
/// over camera 6-vectors by Gauss-Seidel sweeps.
CameraTrajectory smooth_trajectory(const CameraTrajectory& traj, double lambda, int sweeps);

/// Sum of squared second differences of the trajectory 6-vectors.
double trajectory_roughness(const CameraTrajectory& traj);

/// Mean pixel distance between projected points and keypoints, over points
/// visible in both.
double mean_reprojection_error(
    const PinholeCamera& cam,
    std::span<const Vec3> points,
    const Keypoints2D& reference);

} // namespace cinetransfer
