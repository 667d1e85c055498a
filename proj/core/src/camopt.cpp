#include "cinetransfer/camopt.h"

#include "cinetransfer/error.h"
#include "cinetransfer/log.h"
#include "cinetransfer/parallel.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace cinetransfer {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1D squared distance transform (Felzenszwalb & Huttenlocher) over f, in place.
void squaredDistance1d(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = 0;
  int first = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] < kInf) {
      first = q;
      break;
    }
  }
  if (first < 0) {
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (int q = first + 1; q < n; ++q) {
    if (f[q] == kInf) {
      continue;
    }
    double s;
    for (;;) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {
      // only reachable with k == 0: q dominates the first site everywhere
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) {
      ++k;
    }
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
  f.swap(d);
}

// Squared distances from every cell of a w x h grid to the nearest site.
std::vector<double> squaredDistanceGrid(int w, int h, const std::vector<double>& init) {
  std::vector<double> grid = init;
  const int n = std::max(w, h);
  std::vector<double> f;
  std::vector<double> d(static_cast<size_t>(n));
  std::vector<int> v(static_cast<size_t>(n));
  std::vector<double> z(static_cast<size_t>(n) + 1);
  for (int x = 0; x < w; ++x) {
    f.assign(static_cast<size_t>(h), kInf);
    for (int y = 0; y < h; ++y) {
      f[y] = grid[static_cast<size_t>(y) * w + x];
    }
    d.assign(static_cast<size_t>(h), kInf);
    squaredDistance1d(f, d, v, z);
    for (int y = 0; y < h; ++y) {
      grid[static_cast<size_t>(y) * w + x] = f[y];
    }
  }
  for (int y = 0; y < h; ++y) {
    f.assign(grid.begin() + static_cast<long>(y) * w, grid.begin() + static_cast<long>(y + 1) * w);
    d.assign(static_cast<size_t>(w), kInf);
    squaredDistance1d(f, d, v, z);
    std::copy(f.begin(), f.end(), grid.begin() + static_cast<long>(y) * w);
  }
  return grid;
}

struct Box {
  int x0 = std::numeric_limits<int>::max();
  int y0 = std::numeric_limits<int>::max();
  int x1 = -1;
  int y1 = -1;

  void add(int x, int y) {
    x0 = std::min(x0, x);
    y0 = std::min(y0, y);
    x1 = std::max(x1, x);
    y1 = std::max(y1, y);
  }
};

// Distances from each query pixel to the nearest site, on the cropped grid
// spanning both sets; exact because Euclidean distance does not depend on
// the grid extent.
std::vector<double> nearestSiteDistances(int width, std::span<const int> sites, std::span<const int> queries) {
  Box box;
  for (int i : sites) {
    box.add(i % width, i / width);
  }
  for (int i : queries) {
    box.add(i % width, i / width);
  }
  const int w = box.x1 - box.x0 + 1;
  const int h = box.y1 - box.y0 + 1;
  std::vector<double> init(static_cast<size_t>(w) * h, kInf);
  for (int i : sites) {
    init[static_cast<size_t>(i / width - box.y0) * w + (i % width - box.x0)] = 0.0;
  }
  const std::vector<double> sq = squaredDistanceGrid(w, h, init);
  std::vector<double> out;
  out.reserve(queries.size());
  for (int i : queries) {
    out.push_back(std::sqrt(sq[static_cast<size_t>(i / width - box.y0) * w + (i % width - box.x0)]));
  }
  return out;
}

double meanOf(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) {
    s += x;
  }
  return s / static_cast<double>(v.size());
}

double sceneDiameter(const Vertices& mesh) {
  Vec3 lo = mesh.front();
  Vec3 hi = mesh.front();
  for (const Vec3& p : mesh) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return std::max((hi - lo).norm(), 1e-6);
}

Vec3 sceneCenter(const Vertices& mesh) {
  Vec3 lo = mesh.front();
  Vec3 hi = mesh.front();
  for (const Vec3& p : mesh) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return 0.5 * (lo + hi);
}

// Object-centric perturbation of a world-to-camera transform.
RigidTransform perturb(const RigidTransform& base, const Vec6& delta, const Vec3& center, double diameter) {
  const Mat3 e = rotation_to_matrix(Vec3(delta.head<3>()));
  RigidTransform out;
  out.rotation = base.rotation * e;
  out.translation = base.rotation * (center - e * center) + base.translation + diameter * delta.tail<3>();
  return out;
}

bool hasEvidence(const EvidenceFrame& ev) {
  if (!ev.mask.empty()) {
    return true;
  }
  for (const Keypoint& k : ev.keypoints.points) {
    if (k.confidence >= kMinKeypointConfidence) {
      return true;
    }
  }
  if (ev.flow) {
    for (auto v : ev.flow->valid) {
      if (v != 0) {
        return true;
      }
    }
  }
  return false;
}

PinholeCamera withExtrinsics(const PinholeCamera& cam, const RigidTransform& e) {
  PinholeCamera out = cam;
  out.world_to_camera = e;
  return out;
}

LossBreakdown evaluateLoss(
    const PinholeCamera& cam,
    const FrameScene& scene,
    const EvidenceFrame& evidence,
    const CamOptConfig& cfg,
    const InstanceLoss& instance) {
  LossBreakdown out;
  const bool wantFlow = cfg.lambda_motion > 0.0 && evidence.flow && scene.next_mesh != nullptr &&
      scene.next_camera.has_value();
  if (cfg.lambda_instance > 0.0 || wantFlow) {
    const Fragments frags = rasterize(*scene.mesh, *scene.faces, cam);
    if (cfg.lambda_instance > 0.0) {
      out.instance = instance(frags.mask()).value;
    }
    if (wantFlow) {
      const FlowField flow = flow_from_fragments(frags, *scene.faces, *scene.next_mesh, *scene.next_camera);
      out.motion = loss_motion(flow, *evidence.flow, evidence.mask).value;
    }
  }
  if (cfg.lambda_semantic > 0.0 && !scene.keypoint_points.empty()) {
    const auto projected = project_joints(scene.keypoint_points, cam);
    out.semantic = loss_semantic(projected, evidence.keypoints, cam.diagonal()).value;
  }
  out.total = cfg.lambda_instance * out.instance + cfg.lambda_semantic * out.semantic +
      cfg.lambda_motion * out.motion;
  return out;
}

} // namespace

PinholeCamera CameraTrajectory::camera(int t) const {
  PinholeCamera cam;
  cam.fx = intrinsics.fx;
  cam.fy = intrinsics.fy;
  cam.cx = intrinsics.cx;
  cam.cy = intrinsics.cy;
  cam.width = intrinsics.width;
  cam.height = intrinsics.height;
  cam.world_to_camera = extrinsics.at(static_cast<size_t>(t));
  return cam;
}

void EvidenceTrack::validate(int numFrames, int width, int height) const {
  CT_CHECK_INPUT(num_frames() == numFrames, "evidence frame count does not match the motion");
  for (size_t t = 0; t < frames.size(); ++t) {
    const EvidenceFrame& f = frames[t];
    CT_CHECK_INPUT(
        f.mask.width == width && f.mask.height == height,
        "evidence mask " + std::to_string(t) + " resolution does not match the camera");
    if (f.flow) {
      CT_CHECK_INPUT(
          f.flow->width == width && f.flow->height == height,
          "evidence flow " + std::to_string(t) + " resolution does not match the camera");
    }
    for (const Keypoint& k : f.keypoints.points) {
      CT_CHECK_INPUT(
          k.confidence >= 0.0 && k.confidence <= 1.0, "keypoint confidence outside [0, 1]");
    }
  }
}

std::vector<int> mask_boundary(const Mask& mask) {
  std::vector<int> out;
  const int w = mask.width;
  const int h = mask.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask.at(x, y)) {
        continue;
      }
      const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || !mask.at(x - 1, y) ||
          !mask.at(x + 1, y) || !mask.at(x, y - 1) || !mask.at(x, y + 1);
      if (edge) {
        out.push_back(y * w + x);
      }
    }
  }
  return out;
}

std::vector<double> distance_transform(int width, int height, std::span<const int> sites) {
  std::vector<double> init(static_cast<size_t>(width) * height, kInf);
  for (int i : sites) {
    init[static_cast<size_t>(i)] = 0.0;
  }
  if (sites.empty()) {
    return init;
  }
  std::vector<double> sq = squaredDistanceGrid(width, height, init);
  for (double& d : sq) {
    d = std::sqrt(d);
  }
  return sq;
}

InstanceLoss::InstanceLoss(const Mask& reference)
    : reference_(reference),
      referenceBoundary_(mask_boundary(reference)) {
  distanceToReference_ = distance_transform(reference.width, reference.height, referenceBoundary_);
}

LossValue InstanceLoss::operator()(const Mask& rendered) const {
  CT_CHECK_INPUT(
      rendered.width == reference_.width && rendered.height == reference_.height,
      "mask sizes differ");
  long inter = 0;
  long uni = 0;
  for (size_t i = 0; i < rendered.bits.size(); ++i) {
    const bool a = rendered.bits[i] != 0;
    const bool b = reference_.bits[i] != 0;
    inter += (a && b) ? 1 : 0;
    uni += (a || b) ? 1 : 0;
  }
  if (uni == 0) {
    return {0.0, true};
  }
  const double iouTerm = 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
  if (inter == uni) {
    return {0.0, false};
  }

  const std::vector<int> renderedBoundary = mask_boundary(rendered);
  double boundaryTerm = 1.0;
  if (!renderedBoundary.empty() && !referenceBoundary_.empty()) {
    std::vector<double> toReference;
    toReference.reserve(renderedBoundary.size());
    for (int i : renderedBoundary) {
      toReference.push_back(distanceToReference_[static_cast<size_t>(i)]);
    }
    const std::vector<double> toRendered =
        nearestSiteDistances(rendered.width, renderedBoundary, referenceBoundary_);
    const double diag = std::hypot(static_cast<double>(rendered.width), static_cast<double>(rendered.height));
    boundaryTerm = 0.5 * (meanOf(toReference) + meanOf(toRendered)) / diag;
  }
  return {0.5 * iouTerm + 0.5 * boundaryTerm, false};
}

LossValue loss_instance(const Mask& rendered, const Mask& reference) {
  CT_CHECK_INPUT(
      rendered.width == reference.width && rendered.height == reference.height,
      "mask sizes differ");
  const LossValue v = InstanceLoss(reference)(rendered);
  if (v.degenerate) {
    log_warn("camopt", "instance loss on two empty masks; frame treated as degenerate");
  }
  return v;
}

LossValue loss_semantic(
    std::span<const ProjectedJoint> projected,
    const Keypoints2D& reference,
    double imageDiagonal) {
  CT_CHECK_INPUT(
      projected.size() == reference.points.size(),
      "projected joint count does not match the keypoint count");
  CT_CHECK_INPUT(imageDiagonal > 0.0, "image diagonal must be positive");
  double weighted = 0.0;
  double weights = 0.0;
  for (size_t i = 0; i < projected.size(); ++i) {
    const Keypoint& k = reference.points[i];
    if (!projected[i].visible || k.confidence < kMinKeypointConfidence) {
      continue;
    }
    const Vec2 d = projected[i].uv - Vec2(k.u, k.v);
    weighted += k.confidence * d.squaredNorm();
    weights += k.confidence;
  }
  if (weights == 0.0) {
    return {0.0, true};
  }
  return {weighted / weights / (imageDiagonal * imageDiagonal), false};
}

LossValue loss_motion(const FlowField& rendered, const FlowField& reference, const Mask& region) {
  CT_CHECK_INPUT(
      rendered.width == reference.width && rendered.height == reference.height &&
          region.width == rendered.width && region.height == rendered.height,
      "flow and region sizes differ");
  double sum = 0.0;
  long n = 0;
  for (size_t i = 0; i < rendered.vectors.size(); ++i) {
    if (rendered.valid[i] == 0 || reference.valid[i] == 0 || region.bits[i] == 0) {
      continue;
    }
    sum += (rendered.vectors[i] - reference.vectors[i]).norm();
    ++n;
  }
  if (n == 0) {
    return {0.0, true};
  }
  const double diag = std::hypot(static_cast<double>(rendered.width), static_cast<double>(rendered.height));
  return {sum / static_cast<double>(n) / diag, false};
}

void CamOptConfig::validate() const {
  CT_CHECK_INPUT(
      lambda_instance >= 0.0 && lambda_semantic >= 0.0 && lambda_motion >= 0.0 &&
          lambda_temporal >= 0.0,
      "loss weights must be non-negative");
  CT_CHECK_INPUT(
      lambda_instance > 0.0 || lambda_semantic > 0.0 || lambda_motion > 0.0,
      "at least one loss weight must be positive");
  CT_CHECK_INPUT(max_iterations >= 1, "max iterations must be at least 1");
  CT_CHECK_INPUT(fd_rotation > 0.0 && fd_translation > 0.0, "finite-difference steps must be positive");
  CT_CHECK_INPUT(initial_step > 0.0 && min_step > 0.0, "step sizes must be positive");
  CT_CHECK_INPUT(tolerance >= 0.0, "tolerance must be non-negative");
  CT_CHECK_INPUT(smoothing_sweeps >= 0, "smoothing sweeps must be non-negative");
}

LossBreakdown frame_loss(
    const PinholeCamera& cam,
    const FrameScene& scene,
    const EvidenceFrame& evidence,
    const CamOptConfig& cfg) {
  CT_CHECK_INPUT(scene.mesh != nullptr && scene.faces != nullptr, "frame scene has no mesh");
  return evaluateLoss(cam, scene, evidence, cfg, InstanceLoss(evidence.mask));
}

namespace {

struct Descent {
  RigidTransform extrinsics;
  LossBreakdown loss;
  int iterations = 0;
};

// Normalized-gradient descent with a halving/doubling line search. Central
// differences that fail to give a descent direction fall back to a compass
// poll on shrinking axis steps.
template <typename Eval>
Descent descend(
    const RigidTransform& start,
    const LossBreakdown& startLoss,
    const Eval& eval,
    const CamOptConfig& cfg,
    const Vec3& center,
    double diameter,
    std::vector<double>* history) {
  Descent d{start, startLoss, 0};
  double step = cfg.initial_step;
  auto probe = [&](size_t i, const std::array<double, 6>& scale) {
    Vec6 delta = Vec6::Zero();
    const size_t axis = i / 2;
    delta[static_cast<Eigen::Index>(axis)] = (i % 2 == 0 ? 1.0 : -1.0) * scale[axis];
    return perturb(d.extrinsics, delta, center, diameter);
  };
  auto accept = [&](const RigidTransform& candidate, const LossBreakdown& loss) {
    const double improvement = d.loss.total - loss.total;
    d.extrinsics = candidate;
    d.loss = loss;
    if (history != nullptr) {
      history->push_back(loss.total);
    }
    return improvement;
  };
  auto lower = [](const LossBreakdown& a, const LossBreakdown& b) { return a.total < b.total; };

  for (int iter = 0; iter < cfg.max_iterations && d.loss.total > 0.0; ++iter) {
    d.iterations = iter + 1;
    // probes never go below the configured steps, and widen with the line
    // search so pixel-quantized plateaus still yield a usable slope
    const double rotH = std::max(cfg.fd_rotation, 0.5 * step);
    const double transH = std::max(cfg.fd_translation, 0.5 * step);
    const std::array<double, 6> h = {rotH, rotH, rotH, transH, transH, transH};
    std::array<LossBreakdown, 12> probes{};
    parallel_for(12, cfg.jobs, [&](size_t i) { probes[i] = eval(probe(i, h)); });
    Vec6 grad;
    for (int a = 0; a < 6; ++a) {
      grad[a] = (probes[2 * a].total - probes[2 * a + 1].total) / (2.0 * h[static_cast<size_t>(a)]);
    }
    const double norm = grad.norm();

    double improvement = -1.0;
    const double searchStart = step;
    if (norm > 0.0 && std::isfinite(norm)) {
      const Vec6 dir = -grad / norm;
      while (step >= cfg.min_step) {
        const RigidTransform candidate = perturb(d.extrinsics, step * dir, center, diameter);
        const LossBreakdown trial = eval(candidate);
        if (trial.total < d.loss.total) {
          improvement = accept(candidate, trial);
          step = std::min(2.0 * step, 0.5);
          break;
        }
        step *= 0.5;
      }
    }
    if (improvement < 0.0) {
      const auto best = std::min_element(probes.begin(), probes.end(), lower);
      if (best->total < d.loss.total) {
        improvement = accept(probe(static_cast<size_t>(best - probes.begin()), h), *best);
      }
      for (double scale = searchStart; improvement < 0.0 && scale >= cfg.min_step; scale *= 0.5) {
        const std::array<double, 6> sc = {scale, scale, scale, scale, scale, scale};
        std::array<LossBreakdown, 12> poll{};
        parallel_for(12, cfg.jobs, [&](size_t i) { poll[i] = eval(probe(i, sc)); });
        const auto it = std::min_element(poll.begin(), poll.end(), lower);
        if (it->total < d.loss.total) {
          improvement = accept(probe(static_cast<size_t>(it - poll.begin()), sc), *it);
          step = scale;
        }
      }
    }
    if (improvement < 0.0 || improvement <= cfg.tolerance * d.loss.total) {
      break;
    }
  }
  return d;
}

} // namespace

FrameResult optimize_frame(
    const PinholeCamera& init,
    const FrameScene& scene,
    const EvidenceFrame& evidence,
    const CamOptConfig& cfg,
    const std::optional<RigidTransform>& warmStart) {
  cfg.validate();
  init.validate();
  CT_CHECK_INPUT(scene.mesh != nullptr && scene.faces != nullptr, "frame scene has no mesh");
  CT_CHECK_INPUT(!scene.mesh->empty(), "frame scene mesh is empty");
  CT_CHECK_INPUT(
      evidence.mask.width == init.width && evidence.mask.height == init.height,
      "evidence resolution does not match the camera");

  FrameResult result;
  result.extrinsics = init.world_to_camera;
  if (!hasEvidence(evidence)) {
    result.skipped = true;
    log_warn("camopt", "frame has no usable evidence; keeping the initial camera");
    return result;
  }

  const InstanceLoss instance(evidence.mask);
  const Vec3 center = sceneCenter(*scene.mesh);
  const double diameter = sceneDiameter(*scene.mesh);

  // the next-frame camera follows the same camera-frame correction
  auto sceneFor = [&](const RigidTransform& extrinsics) {
    FrameScene s = scene;
    if (scene.next_camera) {
      const RigidTransform correction = extrinsics * init.world_to_camera.inverse();
      s.next_camera = withExtrinsics(*scene.next_camera, correction * scene.next_camera->world_to_camera);
    }
    return s;
  };
  auto lossAt = [&](const RigidTransform& extrinsics) {
    return evaluateLoss(withExtrinsics(init, extrinsics), sceneFor(extrinsics), evidence, cfg, instance);
  };

  result.initial = lossAt(init.world_to_camera);
  result.history.push_back(result.initial.total);
  RigidTransform start = init.world_to_camera;
  LossBreakdown startLoss = result.initial;
  auto consider = [&](const RigidTransform& candidate) {
    const LossBreakdown loss = lossAt(candidate);
    if (loss.total < startLoss.total) {
      start = candidate;
      startLoss = loss;
      result.history.push_back(loss.total);
    }
  };
  if (warmStart) {
    consider(*warmStart);
  }
  // Keypoint residuals are smooth and have no spurious basins, unlike the
  // silhouette overlap; a keypoint-only fit gives one more starting point.
  if (cfg.lambda_semantic > 0.0 && startLoss.total > 0.0 && !scene.keypoint_points.empty()) {
    CamOptConfig semanticOnly = cfg;
    semanticOnly.lambda_instance = 0.0;
    semanticOnly.lambda_motion = 0.0;
    auto keypointLoss = [&](const RigidTransform& extrinsics) {
      LossBreakdown l;
      const auto projected = project_joints(scene.keypoint_points, withExtrinsics(init, extrinsics));
      const LossValue v = loss_semantic(projected, evidence.keypoints, init.diagonal());
      l.semantic = v.value;
      l.total = v.degenerate ? kInf : v.value;
      return l;
    };
    const LossBreakdown from = keypointLoss(start);
    if (std::isfinite(from.total) && from.total > 0.0) {
      consider(descend(start, from, keypointLoss, semanticOnly, center, diameter, nullptr).extrinsics);
    }
  }

  const Descent d = descend(start, startLoss, lossAt, cfg, center, diameter, &result.history);
  result.extrinsics = d.extrinsics;
  result.final = d.loss;
  result.iterations = d.iterations;
  return result;
}

TrajectoryResult optimize_trajectory(
    const CameraTrajectory& init,
    const AnimatedScene& scene,
    const EvidenceTrack& evidence,
    const CamOptConfig& cfg) {
  cfg.validate();
  const int n = init.num_frames();
  CT_CHECK_INPUT(n >= 1, "camera trajectory is empty");
  CT_CHECK_INPUT(static_cast<int>(scene.meshes.size()) == n, "scene frame count does not match the trajectory");
  CT_CHECK_INPUT(
      scene.keypoint_points.empty() || static_cast<int>(scene.keypoint_points.size()) == n,
      "scene keypoint frame count does not match the trajectory");
  evidence.validate(n, init.intrinsics.width, init.intrinsics.height);

  TrajectoryResult out;
  out.cameras = init;
  out.frames.resize(static_cast<size_t>(n));
  std::optional<RigidTransform> correction;
  for (int t = 0; t < n; ++t) {
    FrameScene fs;
    fs.mesh = &scene.meshes[t];
    fs.faces = &scene.faces;
    if (!scene.keypoint_points.empty()) {
      fs.keypoint_points = scene.keypoint_points[t];
    }
    if (t + 1 < n) {
      fs.next_mesh = &scene.meshes[t + 1];
      fs.next_camera = init.camera(t + 1);
    }
    const PinholeCamera cam = init.camera(t);
    std::optional<RigidTransform> warm;
    if (cfg.warm_start && correction) {
      warm = *correction * cam.world_to_camera;
    }
    FrameResult r = optimize_frame(cam, fs, evidence.frames[t], cfg, warm);
    if (!r.skipped) {
      correction = r.extrinsics * cam.world_to_camera.inverse();
    }
    out.cameras.extrinsics[t] = r.extrinsics;
    out.frames[t] = std::move(r);
  }

  if (cfg.lambda_temporal > 0.0 && n >= 3) {
    out.cameras = smooth_trajectory(out.cameras, cfg.lambda_temporal, cfg.smoothing_sweeps);
    for (int t = 0; t < n; ++t) {
      FrameScene fs;
      fs.mesh = &scene.meshes[t];
      fs.faces = &scene.faces;
      if (!scene.keypoint_points.empty()) {
        fs.keypoint_points = scene.keypoint_points[t];
      }
      if (t + 1 < n) {
        fs.next_mesh = &scene.meshes[t + 1];
        fs.next_camera = out.cameras.camera(t + 1);
      }
      out.frames[t].extrinsics = out.cameras.extrinsics[t];
      out.frames[t].final = frame_loss(out.cameras.camera(t), fs, evidence.frames[t], cfg);
    }
  }
  return out;
}

namespace {

std::vector<Vec6> toVectors(const CameraTrajectory& traj) {
  std::vector<Vec6> out;
  const Mat3 ref = traj.extrinsics.front().rotation;
  for (const RigidTransform& e : traj.extrinsics) {
    Vec6 x;
    x.head<3>() = matrix_to_axis_angle(e.rotation * ref.transpose());
    x.tail<3>() = e.translation;
    out.push_back(x);
  }
  return out;
}

} // namespace

CameraTrajectory smooth_trajectory(const CameraTrajectory& traj, double lambda, int sweeps) {
  const int n = traj.num_frames();
  if (n < 3 || lambda <= 0.0) {
    return traj;
  }
  const std::vector<Vec6> y = toVectors(traj);
  std::vector<Vec6> x = y;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (int t = 0; t < n; ++t) {
      // second differences s in [1, n-2] that involve x_t, with coefficient c
      double diag = 1.0;
      Vec6 rhs = y[t];
      for (int s = std::max(1, t - 1); s <= std::min(n - 2, t + 1); ++s) {
        const double c = s == t ? -2.0 : 1.0;
        const Vec6 rest = x[s - 1] - 2.0 * x[s] + x[s + 1] - c * x[t];
        diag += lambda * c * c;
        rhs -= lambda * c * rest;
      }
      x[t] = rhs / diag;
    }
  }
  CameraTrajectory out = traj;
  const Mat3 ref = traj.extrinsics.front().rotation;
  for (int t = 0; t < n; ++t) {
    out.extrinsics[t].rotation = rotation_to_matrix(Vec3(x[t].head<3>())) * ref;
    out.extrinsics[t].translation = x[t].tail<3>();
  }
  return out;
}

double trajectory_roughness(const CameraTrajectory& traj) {
  const int n = traj.num_frames();
  if (n < 3) {
    return 0.0;
  }
  const std::vector<Vec6> x = toVectors(traj);
  double sum = 0.0;
  for (int t = 1; t + 1 < n; ++t) {
    sum += (x[t - 1] - 2.0 * x[t] + x[t + 1]).squaredNorm();
  }
  return sum;
}

double mean_reprojection_error(
    const PinholeCamera& cam,
    std::span<const Vec3> points,
    const Keypoints2D& reference) {
  CT_CHECK_INPUT(points.size() == reference.points.size(), "point count does not match keypoints");
  double sum = 0.0;
  int n = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    const Keypoint& k = reference.points[i];
    if (k.confidence < kMinKeypointConfidence) {
      continue;
    }
    const auto uv = project(cam, points[i]);
    if (!uv) {
      continue;
    }
    sum += (*uv - Vec2(k.u, k.v)).norm();
    ++n;
  }
  return n == 0 ? 0.0 : sum / n;
}

} // namespace cinetransfer
