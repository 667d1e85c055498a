#pragma once

#include "cinetransfer/body.h"
#include "cinetransfer/geom.h"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace cinetransfer {

/// Row-major binary image.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), bits(static_cast<size_t>(w) * h, 0) {}

  bool at(int x, int y) const {
    return bits[static_cast<size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool on = true) {
    bits[static_cast<size_t>(y) * width + x] = on ? 1 : 0;
  }
  size_t size() const {
    return bits.size();
  }
  int count() const;
  bool empty() const {
    return count() == 0;
  }
  bool operator==(const Mask&) const = default;
};

/// Dense per-pixel flow in pixels. Invalid pixels hold (0, 0).
struct FlowField {
  int width = 0;
  int height = 0;
  std::vector<Vec2> vectors;
  std::vector<std::uint8_t> valid;

  FlowField() = default;
  FlowField(int w, int h)
      : width(w),
        height(h),
        vectors(static_cast<size_t>(w) * h, Vec2::Zero()),
        valid(static_cast<size_t>(w) * h, 0) {}

  size_t size() const {
    return vectors.size();
  }
  bool operator==(const FlowField&) const = default;
};

/// Visible-surface buffer: nearest triangle per pixel with perspective-correct
/// barycentric coordinates on the original (unclipped) triangle.
struct Fragments {
  int width = 0;
  int height = 0;
  std::vector<int> triangle; // -1 where nothing covers the pixel
  std::vector<std::array<double, 3>> barycentric;
  std::vector<double> depth;

  Mask mask() const;
};

/// Z-buffered fill with pixel centers at (x + 0.5, y + 0.5) and a top-left
/// rule on shared edges. Triangles are clipped against a near plane; no
/// back-face culling.
Fragments rasterize(const Vertices& vertices, const Faces& faces, const PinholeCamera& cam);

Mask rasterize_silhouette(const Vertices& vertices, const Faces& faces, const PinholeCamera& cam);

struct ProjectedJoint {
  Vec2 uv = Vec2::Zero();
  bool visible = false;
};

/// Projects joints; a joint is visible when in front of the camera and inside
/// [0, width) x [0, height).
std::vector<ProjectedJoint> project_joints(std::span<const Vec3> joints, const PinholeCamera& cam);

/// Flow of the surface seen at each pixel in frame t: its projection at t+1
/// minus the pixel center. Both meshes share `faces`.
FlowField render_flow(
    const Vertices& meshT,
    const Vertices& meshNext,
    const Faces& faces,
    const PinholeCamera& camT,
    const PinholeCamera& camNext);

/// render_flow() reusing an existing rasterization of frame t.
FlowField flow_from_fragments(
    const Fragments& fragments,
    const Faces& faces,
    const Vertices& meshNext,
    const PinholeCamera& camNext);

} // namespace cinetransfer
