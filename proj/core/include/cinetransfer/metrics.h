#pragma once

#include "cinetransfer/geom.h"
#include "cinetransfer/raster.h"

#include <span>
#include <vector>

namespace cinetransfer {

/// 3D joint positions in millimeters.
struct JointSet {
  std::vector<Vec3> positions;
};

/// Mean Euclidean joint distance, millimeters. With rootAligned, each set is
/// first translated so its joint 0 sits at the origin.
double mpjpe(const JointSet& pred, const JointSet& gt, bool rootAligned = false);

enum class PixelAccuracyMode {
  /// (TP + TN) / total pixels.
  Global,
  /// TP / |gt|.
  Recall,
};

double pixel_accuracy(const Mask& pred, const Mask& gt, PixelAccuracyMode mode = PixelAccuracyMode::Global);

/// |A and B| / |A or B|; 1.0 (with a warning) when both masks are empty.
double iou(const Mask& pred, const Mask& gt);

struct FrameMetrics {
  int frame = 0;
  double mpjpe = 0.0;
  double pa = 0.0;
  double iou = 0.0;
};

struct MetricsReport {
  std::vector<FrameMetrics> per_frame;
  FrameMetrics mean;
};

/// Evaluates every frame and averages. Sizes must match.
MetricsReport evaluate(
    std::span<const JointSet> predJoints,
    std::span<const JointSet> gtJoints,
    std::span<const Mask> predMasks,
    std::span<const Mask> gtMasks,
    PixelAccuracyMode mode = PixelAccuracyMode::Global);

} // namespace cinetransfer
