#include "cinetransfer/metrics.h"

#include "cinetransfer/error.h"
#include "cinetransfer/log.h"

namespace cinetransfer {

namespace {

void checkSameSize(const Mask& a, const Mask& b) {
  CT_CHECK_INPUT(
      a.width == b.width && a.height == b.height && a.bits.size() == b.bits.size(),
      "mask sizes differ");
}

} // namespace

double mpjpe(const JointSet& pred, const JointSet& gt, bool rootAligned) {
  CT_CHECK_INPUT(pred.positions.size() == gt.positions.size(), "joint counts differ");
  CT_CHECK_INPUT(!pred.positions.empty(), "joint sets are empty");
  const Vec3 predRoot = rootAligned ? pred.positions[0] : Vec3::Zero();
  const Vec3 gtRoot = rootAligned ? gt.positions[0] : Vec3::Zero();
  double sum = 0.0;
  for (size_t i = 0; i < pred.positions.size(); ++i) {
    sum += ((pred.positions[i] - predRoot) - (gt.positions[i] - gtRoot)).norm();
  }
  return sum / static_cast<double>(pred.positions.size());
}

double pixel_accuracy(const Mask& pred, const Mask& gt, PixelAccuracyMode mode) {
  checkSameSize(pred, gt);
  CT_CHECK_INPUT(!pred.bits.empty(), "masks are empty images");
  long agree = 0;
  long truePositive = 0;
  long gtCount = 0;
  for (size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    agree += p == g ? 1 : 0;
    truePositive += (p && g) ? 1 : 0;
    gtCount += g ? 1 : 0;
  }
  if (mode == PixelAccuracyMode::Recall) {
    if (gtCount == 0) {
      log_warn("metrics", "recall pixel accuracy on an empty ground-truth mask; reporting 1");
      return 1.0;
    }
    return static_cast<double>(truePositive) / static_cast<double>(gtCount);
  }
  return static_cast<double>(agree) / static_cast<double>(pred.bits.size());
}

double iou(const Mask& pred, const Mask& gt) {
  checkSameSize(pred, gt);
  long inter = 0;
  long uni = 0;
  for (size_t i = 0; i < pred.bits.size(); ++i) {
    const bool p = pred.bits[i] != 0;
    const bool g = gt.bits[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  if (uni == 0) {
    log_warn("metrics", "IoU of two empty masks; reporting 1");
    return 1.0;
  }
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MetricsReport evaluate(
    std::span<const JointSet> predJoints,
    std::span<const JointSet> gtJoints,
    std::span<const Mask> predMasks,
    std::span<const Mask> gtMasks,
    PixelAccuracyMode mode) {
  CT_CHECK_INPUT(predJoints.size() == gtJoints.size(), "joint frame counts differ");
  CT_CHECK_INPUT(predMasks.size() == gtMasks.size(), "mask frame counts differ");
  CT_CHECK_INPUT(predJoints.size() == predMasks.size(), "joint and mask frame counts differ");
  CT_CHECK_INPUT(!predJoints.empty(), "nothing to evaluate");

  MetricsReport report;
  const double n = static_cast<double>(predJoints.size());
  for (size_t t = 0; t < predJoints.size(); ++t) {
    FrameMetrics m;
    m.frame = static_cast<int>(t);
    m.mpjpe = mpjpe(predJoints[t], gtJoints[t]);
    m.pa = pixel_accuracy(predMasks[t], gtMasks[t], mode);
    m.iou = iou(predMasks[t], gtMasks[t]);
    report.mean.mpjpe += m.mpjpe;
    report.mean.pa += m.pa;
    report.mean.iou += m.iou;
    report.per_frame.push_back(m);
  }
  report.mean.mpjpe /= n;
  report.mean.pa /= n;
  report.mean.iou /= n;
  report.mean.frame = -1;
  return report;
}

} // namespace cinetransfer
