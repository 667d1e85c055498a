#include "cinetransfer/raster.h"

#include "cinetransfer/error.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cinetransfer {

namespace {

constexpr double kNearPlane = 1e-4;

struct ClipVertex {
  Vec3 cam;
  std::array<double, 3> bary;
};

// Sutherland-Hodgman against z >= kNearPlane; at most 4 output vertices.
int clipNear(const std::array<ClipVertex, 3>& in, std::array<ClipVertex, 4>& out) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool aIn = a.cam.z() >= kNearPlane;
    const bool bIn = b.cam.z() >= kNearPlane;
    if (aIn) {
      out[n++] = a;
    }
    if (aIn != bIn) {
      const double s = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
      ClipVertex c;
      c.cam = a.cam + s * (b.cam - a.cam);
      c.cam.z() = kNearPlane;
      for (int k = 0; k < 3; ++k) {
        c.bary[k] = a.bary[k] + s * (b.bary[k] - a.bary[k]);
      }
      out[n++] = c;
    }
  }
  return n;
}

bool isTopLeft(const Vec2& a, const Vec2& b) {
  const double dy = b.y() - a.y();
  const double dx = b.x() - a.x();
  return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

double edge(const Vec2& a, const Vec2& b, double px, double py) {
  return (b.x() - a.x()) * (py - a.y()) - (b.y() - a.y()) * (px - a.x());
}

void rasterTriangle(
    const PinholeCamera& cam,
    int faceIndex,
    ClipVertex v0,
    ClipVertex v1,
    ClipVertex v2,
    Fragments& frags) {
  Vec2 s0(cam.fx * v0.cam.x() / v0.cam.z() + cam.cx, cam.fy * v0.cam.y() / v0.cam.z() + cam.cy);
  Vec2 s1(cam.fx * v1.cam.x() / v1.cam.z() + cam.cx, cam.fy * v1.cam.y() / v1.cam.z() + cam.cy);
  Vec2 s2(cam.fx * v2.cam.x() / v2.cam.z() + cam.cx, cam.fy * v2.cam.y() / v2.cam.z() + cam.cy);

  double area = edge(s0, s1, s2.x(), s2.y());
  if (area == 0.0 || !std::isfinite(area)) {
    return;
  }
  if (area < 0.0) {
    std::swap(s1, s2);
    std::swap(v1, v2);
    area = -area;
  }

  const double minX = std::min({s0.x(), s1.x(), s2.x()});
  const double maxX = std::max({s0.x(), s1.x(), s2.x()});
  const double minY = std::min({s0.y(), s1.y(), s2.y()});
  const double maxY = std::max({s0.y(), s1.y(), s2.y()});
  // pixel x covers [x, x+1) with its center at x + 0.5
  const int x0 = std::max(0, static_cast<int>(std::ceil(minX - 0.5)));
  const int x1 = std::min(frags.width - 1, static_cast<int>(std::floor(maxX - 0.5)));
  const int y0 = std::max(0, static_cast<int>(std::ceil(minY - 0.5)));
  const int y1 = std::min(frags.height - 1, static_cast<int>(std::floor(maxY - 0.5)));
  if (x0 > x1 || y0 > y1) {
    return;
  }

  const bool tl0 = isTopLeft(s1, s2);
  const bool tl1 = isTopLeft(s2, s0);
  const bool tl2 = isTopLeft(s0, s1);
  const double invZ0 = 1.0 / v0.cam.z();
  const double invZ1 = 1.0 / v1.cam.z();
  const double invZ2 = 1.0 / v2.cam.z();

  for (int y = y0; y <= y1; ++y) {
    const double py = y + 0.5;
    for (int x = x0; x <= x1; ++x) {
      const double px = x + 0.5;
      const double w0 = edge(s1, s2, px, py);
      const double w1 = edge(s2, s0, px, py);
      const double w2 = edge(s0, s1, px, py);
      if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) {
        continue;
      }
      if ((w0 == 0.0 && !tl0) || (w1 == 0.0 && !tl1) || (w2 == 0.0 && !tl2)) {
        continue;
      }
      const double l0 = w0 / area;
      const double l1 = w1 / area;
      const double l2 = w2 / area;
      const double invZ = l0 * invZ0 + l1 * invZ1 + l2 * invZ2;
      const double z = 1.0 / invZ;
      const size_t idx = static_cast<size_t>(y) * frags.width + x;
      if (frags.triangle[idx] >= 0 && !(z < frags.depth[idx])) {
        continue;
      }
      const double p0 = l0 * invZ0 * z;
      const double p1 = l1 * invZ1 * z;
      const double p2 = l2 * invZ2 * z;
      std::array<double, 3> bary{};
      for (int k = 0; k < 3; ++k) {
        bary[k] = p0 * v0.bary[k] + p1 * v1.bary[k] + p2 * v2.bary[k];
      }
      frags.triangle[idx] = faceIndex;
      frags.depth[idx] = z;
      frags.barycentric[idx] = bary;
    }
  }
}

} // namespace

int Mask::count() const {
  return static_cast<int>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

Mask Fragments::mask() const {
  Mask m(width, height);
  for (size_t i = 0; i < triangle.size(); ++i) {
    m.bits[i] = triangle[i] >= 0 ? 1 : 0;
  }
  return m;
}

Fragments rasterize(const Vertices& vertices, const Faces& faces, const PinholeCamera& cam) {
  cam.validate();
  Fragments frags;
  frags.width = cam.width;
  frags.height = cam.height;
  const size_t n = static_cast<size_t>(cam.width) * cam.height;
  frags.triangle.assign(n, -1);
  frags.barycentric.assign(n, {0.0, 0.0, 0.0});
  frags.depth.assign(n, std::numeric_limits<double>::infinity());

  std::vector<Vec3> camPoints(vertices.size());
  for (size_t i = 0; i < vertices.size(); ++i) {
    camPoints[i] = cam.world_to_camera.apply(vertices[i]);
  }

  for (size_t f = 0; f < faces.size(); ++f) {
    const Face& face = faces[f];
    for (int idx : face) {
      CT_CHECK_INPUT(
          idx >= 0 && idx < static_cast<int>(vertices.size()), "face index out of range");
    }
    const std::array<ClipVertex, 3> tri = {{
        {camPoints[face[0]], {1.0, 0.0, 0.0}},
        {camPoints[face[1]], {0.0, 1.0, 0.0}},
        {camPoints[face[2]], {0.0, 0.0, 1.0}},
    }};
    const int fi = static_cast<int>(f);
    if (tri[0].cam.z() >= kNearPlane && tri[1].cam.z() >= kNearPlane &&
        tri[2].cam.z() >= kNearPlane) {
      rasterTriangle(cam, fi, tri[0], tri[1], tri[2], frags);
      continue;
    }
    std::array<ClipVertex, 4> poly;
    const int count = clipNear(tri, poly);
    for (int k = 1; k + 1 < count; ++k) {
      rasterTriangle(cam, fi, poly[0], poly[k], poly[k + 1], frags);
    }
  }
  return frags;
}

Mask rasterize_silhouette(const Vertices& vertices, const Faces& faces, const PinholeCamera& cam) {
  return rasterize(vertices, faces, cam).mask();
}

std::vector<ProjectedJoint> project_joints(std::span<const Vec3> joints, const PinholeCamera& cam) {
  std::vector<ProjectedJoint> out(joints.size());
  for (size_t i = 0; i < joints.size(); ++i) {
    const auto uv = project(cam, joints[i]);
    if (!uv) {
      continue;
    }
    out[i].uv = *uv;
    out[i].visible = uv->x() >= 0.0 && uv->x() < cam.width && uv->y() >= 0.0 &&
        uv->y() < cam.height;
  }
  return out;
}

FlowField flow_from_fragments(
    const Fragments& fragments,
    const Faces& faces,
    const Vertices& meshNext,
    const PinholeCamera& camNext) {
  FlowField flow(fragments.width, fragments.height);
  for (int y = 0; y < fragments.height; ++y) {
    for (int x = 0; x < fragments.width; ++x) {
      const size_t idx = static_cast<size_t>(y) * fragments.width + x;
      const int f = fragments.triangle[idx];
      if (f < 0) {
        continue;
      }
      const Face& face = faces[static_cast<size_t>(f)];
      const auto& b = fragments.barycentric[idx];
      const Vec3 p = b[0] * meshNext[face[0]] + b[1] * meshNext[face[1]] + b[2] * meshNext[face[2]];
      const auto uv = project(camNext, p);
      if (!uv) {
        continue;
      }
      flow.vectors[idx] = *uv - Vec2(x + 0.5, y + 0.5);
      flow.valid[idx] = 1;
    }
  }
  return flow;
}

FlowField render_flow(
    const Vertices& meshT,
    const Vertices& meshNext,
    const Faces& faces,
    const PinholeCamera& camT,
    const PinholeCamera& camNext) {
  CT_CHECK_INPUT(meshT.size() == meshNext.size(), "flow meshes must share vertex topology");
  return flow_from_fragments(rasterize(meshT, faces, camT), faces, meshNext, camNext);
}

} // namespace cinetransfer
