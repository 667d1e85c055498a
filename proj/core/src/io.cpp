#include "cinetransfer/io.h"

#include "cinetransfer/capsule_man.h"
#include "cinetransfer/error.h"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cinetransfer {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr float kFloMagic = 202021.25f;
constexpr float kFloUnknown = 1e10f;

std::string readFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  CT_CHECK_INPUT(in.good(), "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFile(const fs::path& path, const std::string& bytes) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out.good()) {
    throw std::runtime_error("cannot write " + path.string());
  }
}

json readJson(const fs::path& path) {
  const std::string text = readFile(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void writeJson(const fs::path& path, const json& j) {
  writeFile(path, j.dump(1) + "\n");
}

// Runs a JSON accessor, converting nlohmann type errors into input errors.
template <typename F>
auto parsing(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

Vec3 vec3(const json& j) {
  CT_CHECK_INPUT(j.is_array() && j.size() == 3, "expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json toJson(const Vec3& v) {
  return json::array({v.x(), v.y(), v.z()});
}

json triplets(const Eigen::SparseMatrix<double, Eigen::RowMajor>& m) {
  json t = json::array();
  for (int r = 0; r < m.outerSize(); ++r) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(m, r); it; ++it) {
      t.push_back(json::array({it.row(), it.col(), it.value()}));
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"triplets", t}};
}

json triplets(const Eigen::MatrixXd& m) {
  json t = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != 0.0) {
        t.push_back(json::array({r, c, m(r, c)}));
      }
    }
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"triplets", t}};
}

std::vector<Eigen::Triplet<double>> readTriplets(const json& j, long& rows, long& cols) {
  rows = j.at("rows").get<long>();
  cols = j.at("cols").get<long>();
  CT_CHECK_INPUT(rows >= 0 && cols >= 0, "negative sparse matrix size");
  std::vector<Eigen::Triplet<double>> out;
  for (const json& t : j.at("triplets")) {
    CT_CHECK_INPUT(t.is_array() && t.size() == 3, "sparse triplet must be [row, col, value]");
    const long r = t[0].get<long>();
    const long c = t[1].get<long>();
    CT_CHECK_INPUT(r >= 0 && r < rows && c >= 0 && c < cols, "sparse triplet index out of range");
    out.emplace_back(static_cast<int>(r), static_cast<int>(c), t[2].get<double>());
  }
  return out;
}

// Basis stored as [vertex][axis][component]; the in-memory layout is
// (3 * vertex + axis, component).
Eigen::MatrixXd readBasis(const json& j, int numVertices) {
  CT_CHECK_INPUT(j.is_array() && static_cast<int>(j.size()) == numVertices, "basis must have one entry per vertex");
  const size_t cols = j.empty() ? 0 : j[0].at(0).size();
  Eigen::MatrixXd m(3 * numVertices, static_cast<Eigen::Index>(cols));
  for (int v = 0; v < numVertices; ++v) {
    CT_CHECK_INPUT(j[v].is_array() && j[v].size() == 3, "basis entries must be 3 x K");
    for (int a = 0; a < 3; ++a) {
      const json& row = j[v][a];
      CT_CHECK_INPUT(row.size() == cols, "basis rows must share one width");
      for (size_t c = 0; c < cols; ++c) {
        m(3 * v + a, static_cast<Eigen::Index>(c)) = row[c].get<double>();
      }
    }
  }
  return m;
}

json writeBasis(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index v = 0; v < m.rows() / 3; ++v) {
    json axes = json::array();
    for (int a = 0; a < 3; ++a) {
      json row = json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        row.push_back(m(3 * v + a, c));
      }
      axes.push_back(row);
    }
    out.push_back(axes);
  }
  return out;
}

// Netpbm header: magic, width, height, maxval, then one whitespace byte.
struct Netpbm {
  int width = 0;
  int height = 0;
  int maxval = 0;
  size_t offset = 0;
};

Netpbm readNetpbmHeader(const std::string& bytes, const char* magic, const fs::path& path) {
  CT_CHECK_INPUT(bytes.size() >= 2 && bytes.compare(0, 2, magic) == 0, path.string() + ": expected " + magic);
  size_t pos = 2;
  int values[3] = {0, 0, 0};
  for (int& value : values) {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      }
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') {
          ++pos;
        }
        continue;
      }
      break;
    }
    CT_CHECK_INPUT(
        pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos])),
        path.string() + ": malformed header");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      CT_CHECK_INPUT(v < (1L << 24), path.string() + ": header value too large");
      ++pos;
    }
    value = static_cast<int>(v);
  }
  CT_CHECK_INPUT(pos < bytes.size(), path.string() + ": truncated header");
  ++pos;
  Netpbm h{values[0], values[1], values[2], pos};
  CT_CHECK_INPUT(h.width > 0 && h.height > 0, path.string() + ": empty image");
  CT_CHECK_INPUT(h.maxval > 0 && h.maxval < 256, path.string() + ": only 8-bit samples are supported");
  return h;
}

std::string netpbmHeader(const char* magic, int width, int height) {
  return std::string(magic) + "\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
}

void putFloat(std::string& out, float f) {
  std::uint32_t u = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
  }
}

void putInt(std::string& out, std::int32_t v) {
  putFloat(out, std::bit_cast<float>(v));
}

std::uint32_t getWord(const std::string& in, size_t pos) {
  std::uint32_t u = 0;
  for (int i = 0; i < 4; ++i) {
    u |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  return u;
}

} // namespace

BodyModel load_body_model(const std::string& pathOrBuiltin) {
  if (pathOrBuiltin == "builtin:capsule-man") {
    return make_capsule_man().model;
  }
  const fs::path path(pathOrBuiltin);
  const json j = readJson(path);
  BodyModel m = parsing(path, [&] {
    BodyModel b;
    for (const json& v : j.at("template_vertices")) {
      b.template_vertices.push_back(vec3(v));
    }
    for (const json& f : j.at("faces")) {
      CT_CHECK_INPUT(f.is_array() && f.size() == 3, "faces must be triangles");
      b.faces.push_back({f[0].get<int>(), f[1].get<int>(), f[2].get<int>()});
    }
    const int nv = static_cast<int>(b.template_vertices.size());
    b.shape_dirs = readBasis(j.at("shape_dirs"), nv);
    if (j.contains("pose_dirs")) {
      b.pose_dirs = readBasis(j.at("pose_dirs"), nv);
    }
    if (j.contains("expr_dirs")) {
      b.expr_dirs = readBasis(j.at("expr_dirs"), nv);
    }
    b.parents = j.at("parents").get<std::vector<int>>();
    long rows = 0;
    long cols = 0;
    auto reg = readTriplets(j.at("joint_regressor"), rows, cols);
    b.joint_regressor.resize(rows, cols);
    b.joint_regressor.setFromTriplets(reg.begin(), reg.end());
    auto sw = readTriplets(j.at("skin_weights"), rows, cols);
    b.skin_weights = SkinWeights::Zero(rows, cols);
    for (const auto& t : sw) {
      b.skin_weights(t.row(), t.col()) += t.value();
    }
    if (j.contains("joint_names")) {
      b.joint_names = j.at("joint_names").get<std::vector<std::string>>();
    }
    return b;
  });
  m.validate();
  return m;
}

void save_body_model(const fs::path& path, const BodyModel& model) {
  json j;
  json verts = json::array();
  for (const Vec3& v : model.template_vertices) {
    verts.push_back(toJson(v));
  }
  j["template_vertices"] = verts;
  j["faces"] = model.faces;
  j["shape_dirs"] = writeBasis(model.shape_dirs);
  if (model.pose_dirs.size() > 0) {
    j["pose_dirs"] = writeBasis(model.pose_dirs);
  }
  if (model.expr_dirs.size() > 0) {
    j["expr_dirs"] = writeBasis(model.expr_dirs);
  }
  j["joint_regressor"] = triplets(model.joint_regressor);
  j["parents"] = model.parents;
  j["skin_weights"] = triplets(Eigen::MatrixXd(model.skin_weights));
  if (!model.joint_names.empty()) {
    j["joint_names"] = model.joint_names;
  }
  writeJson(path, j);
}

CharacterMesh load_obj(const fs::path& path) {
  std::istringstream in(readFile(path));
  CharacterMesh mesh;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "v") {
      double x = 0.0;
      double y = 0.0;
      double z = 0.0;
      CT_CHECK_INPUT(static_cast<bool>(ls >> x >> y >> z), path.string() + ":" + std::to_string(lineNo) + ": bad vertex");
      mesh.vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        const int i = std::stoi(tok.substr(0, tok.find('/')));
        idx.push_back(i > 0 ? i - 1 : static_cast<int>(mesh.vertices.size()) + i);
      }
      CT_CHECK_INPUT(idx.size() == 3, path.string() + ":" + std::to_string(lineNo) + ": only triangles are supported");
      mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
  }
  mesh.validate();
  return mesh;
}

void save_obj(const fs::path& path, const Vertices& vertices, const Faces& faces) {
  std::string out;
  out.reserve(vertices.size() * 48 + faces.size() * 24);
  char buf[128];
  for (const Vec3& v : vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const Face& f : faces) {
    std::snprintf(buf, sizeof(buf), "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out += buf;
  }
  writeFile(path, out);
}

Keypoints2D load_keypoints(const fs::path& path) {
  const json j = readJson(path);
  return parsing(path, [&] {
    Keypoints2D k;
    for (const json& p : j.at("points")) {
      CT_CHECK_INPUT(p.is_array() && p.size() == 3, "keypoints must be [u, v, confidence]");
      const Keypoint kp{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
      CT_CHECK_INPUT(kp.confidence >= 0.0 && kp.confidence <= 1.0, "keypoint confidence outside [0, 1]");
      k.points.push_back(kp);
    }
    return k;
  });
}

void save_keypoints(const fs::path& path, const Keypoints2D& keypoints) {
  json pts = json::array();
  for (const Keypoint& k : keypoints.points) {
    pts.push_back(json::array({k.u, k.v, k.confidence}));
  }
  writeJson(path, {{"points", pts}});
}

BoneMap load_bone_map(const fs::path& path) {
  const json j = readJson(path);
  return parsing(path, [&] {
    BoneMap map;
    for (const json& e : j) {
      map.entries.push_back(
          {e.at("keypoint").get<int>(), e.at("joint").get<int>(), e.value("parent_joint", -1)});
    }
    return map;
  });
}

void save_bone_map(const fs::path& path, const BoneMap& map) {
  json j = json::array();
  for (const BoneMapEntry& e : map.entries) {
    j.push_back({{"keypoint", e.keypoint}, {"joint", e.joint}, {"parent_joint", e.parent_joint}});
  }
  writeJson(path, j);
}

CameraTrajectory load_cameras(const fs::path& path) {
  const json j = readJson(path);
  CameraTrajectory traj = parsing(path, [&] {
    CameraTrajectory t;
    const json& in = j.at("intrinsics");
    t.intrinsics.fx = in.at("fx").get<double>();
    t.intrinsics.fy = in.at("fy").get<double>();
    t.intrinsics.cx = in.at("cx").get<double>();
    t.intrinsics.cy = in.at("cy").get<double>();
    t.intrinsics.width = in.at("width").get<int>();
    t.intrinsics.height = in.at("height").get<int>();
    for (const json& f : j.at("frames")) {
      t.extrinsics.push_back(RigidTransform::from(Rotation{vec3(f.at("rotation"))}, vec3(f.at("translation"))));
    }
    return t;
  });
  CT_CHECK_INPUT(traj.num_frames() > 0, path.string() + ": camera file has no frames");
  traj.camera(0).validate();
  return traj;
}

void save_cameras(const fs::path& path, const CameraTrajectory& cameras) {
  const CameraIntrinsics& in = cameras.intrinsics;
  json frames = json::array();
  for (const RigidTransform& e : cameras.extrinsics) {
    frames.push_back({{"rotation", toJson(matrix_to_axis_angle(e.rotation))}, {"translation", toJson(e.translation)}});
  }
  writeJson(
      path,
      {{"intrinsics",
        {{"fx", in.fx}, {"fy", in.fy}, {"cx", in.cx}, {"cy", in.cy}, {"width", in.width}, {"height", in.height}}},
       {"frames", frames}});
}

MotionClip load_motion(const fs::path& path) {
  const json j = readJson(path);
  return parsing(path, [&] {
    MotionClip clip;
    clip.fps = j.value("fps", 30.0);
    Eigen::VectorXd shape;
    if (j.contains("shape")) {
      const auto s = j.at("shape").get<std::vector<double>>();
      shape = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
    }
    for (const json& f : j.at("frames")) {
      PoseFrame p;
      p.root_translation = vec3(f.at("root_translation"));
      for (const json& r : f.at("rotations")) {
        p.local_rotations.push_back(Rotation{vec3(r)});
      }
      p.shape = shape;
      clip.frames.push_back(std::move(p));
    }
    CT_CHECK_INPUT(!clip.frames.empty(), "motion file has no frames");
    return clip;
  });
}

void save_motion(const fs::path& path, const MotionClip& motion) {
  json frames = json::array();
  for (const PoseFrame& p : motion.frames) {
    json rots = json::array();
    for (const Rotation& r : p.local_rotations) {
      rots.push_back(toJson(r.axis_angle));
    }
    frames.push_back({{"root_translation", toJson(p.root_translation)}, {"rotations", rots}});
  }
  json j = {{"fps", motion.fps}, {"frames", frames}};
  if (!motion.frames.empty() && motion.frames.front().shape.size() > 0) {
    const Eigen::VectorXd& s = motion.frames.front().shape;
    j["shape"] = std::vector<double>(s.data(), s.data() + s.size());
  }
  writeJson(path, j);
}

std::vector<JointSet> load_joints(const fs::path& path) {
  const json j = readJson(path);
  return parsing(path, [&] {
    std::vector<JointSet> out;
    for (const json& f : j.at("frames")) {
      JointSet s;
      for (const json& p : f) {
        s.positions.push_back(vec3(p));
      }
      out.push_back(std::move(s));
    }
    return out;
  });
}

void save_joints(const fs::path& path, const std::vector<JointSet>& joints) {
  json frames = json::array();
  for (const JointSet& s : joints) {
    json f = json::array();
    for (const Vec3& p : s.positions) {
      f.push_back(toJson(p));
    }
    frames.push_back(f);
  }
  writeJson(path, {{"units", "mm"}, {"frames", frames}});
}

Mask load_pgm(const fs::path& path) {
  const std::string bytes = readFile(path);
  const Netpbm h = readNetpbmHeader(bytes, "P5", path);
  const size_t n = static_cast<size_t>(h.width) * h.height;
  CT_CHECK_INPUT(bytes.size() >= h.offset + n, path.string() + ": truncated pixel data");
  Mask m(h.width, h.height);
  for (size_t i = 0; i < n; ++i) {
    m.bits[i] = bytes[h.offset + i] != 0 ? 1 : 0;
  }
  return m;
}

void save_pgm(const fs::path& path, const Mask& mask) {
  std::string out = netpbmHeader("P5", mask.width, mask.height);
  for (std::uint8_t b : mask.bits) {
    out.push_back(b != 0 ? static_cast<char>(255) : 0);
  }
  writeFile(path, out);
}

Frame load_ppm(const fs::path& path) {
  const std::string bytes = readFile(path);
  const Netpbm h = readNetpbmHeader(bytes, "P6", path);
  const size_t n = static_cast<size_t>(h.width) * h.height * 3;
  CT_CHECK_INPUT(bytes.size() >= h.offset + n, path.string() + ": truncated pixel data");
  Frame f(h.width, h.height);
  for (size_t i = 0; i < n; ++i) {
    const double b = static_cast<unsigned char>(bytes[h.offset + i]);
    f.samples[i] = 2.0 * b / h.maxval - 1.0;
  }
  return f;
}

void save_ppm(const fs::path& path, const Frame& frame) {
  std::string out = netpbmHeader("P6", frame.width, frame.height);
  for (double s : frame.samples) {
    const double b = std::round((std::clamp(s, -1.0, 1.0) + 1.0) * 127.5);
    out.push_back(static_cast<char>(static_cast<unsigned char>(b)));
  }
  writeFile(path, out);
}

FlowField load_flo(const fs::path& path) {
  const std::string bytes = readFile(path);
  CT_CHECK_INPUT(bytes.size() >= 12, path.string() + ": truncated flow header");
  CT_CHECK_INPUT(std::bit_cast<float>(getWord(bytes, 0)) == kFloMagic, path.string() + ": bad flow magic");
  const auto w = std::bit_cast<std::int32_t>(getWord(bytes, 4));
  const auto h = std::bit_cast<std::int32_t>(getWord(bytes, 8));
  CT_CHECK_INPUT(w > 0 && h > 0 && w < (1 << 16) && h < (1 << 16), path.string() + ": bad flow size");
  const size_t n = static_cast<size_t>(w) * h;
  CT_CHECK_INPUT(bytes.size() >= 12 + 8 * n, path.string() + ": truncated flow data");
  FlowField f(w, h);
  for (size_t i = 0; i < n; ++i) {
    const float u = std::bit_cast<float>(getWord(bytes, 12 + 8 * i));
    const float v = std::bit_cast<float>(getWord(bytes, 16 + 8 * i));
    if (std::isfinite(u) && std::isfinite(v) && std::abs(u) < 1e9f && std::abs(v) < 1e9f) {
      f.vectors[i] = Vec2(u, v);
      f.valid[i] = 1;
    }
  }
  return f;
}

void save_flo(const fs::path& path, const FlowField& flow) {
  std::string out;
  out.reserve(12 + 8 * flow.vectors.size());
  putFloat(out, kFloMagic);
  putInt(out, flow.width);
  putInt(out, flow.height);
  for (size_t i = 0; i < flow.vectors.size(); ++i) {
    if (flow.valid[i] != 0) {
      putFloat(out, static_cast<float>(flow.vectors[i].x()));
      putFloat(out, static_cast<float>(flow.vectors[i].y()));
    } else {
      putFloat(out, kFloUnknown);
      putFloat(out, kFloUnknown);
    }
  }
  writeFile(path, out);
}

std::string frame_file(const std::string& prefix, int index, const std::string& ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_%06d.", index);
  return prefix + buf + ext;
}

Video load_frames(const fs::path& dir) {
  Video video;
  for (int i = 0; fs::exists(dir / frame_file("frame", i, "ppm")); ++i) {
    video.push_back(load_ppm(dir / frame_file("frame", i, "ppm")));
  }
  CT_CHECK_INPUT(!video.empty(), dir.string() + ": no frame_000000.ppm");
  return video;
}

void save_frames(const fs::path& dir, const Video& video, const std::string& prefix) {
  for (size_t i = 0; i < video.size(); ++i) {
    save_ppm(dir / frame_file(prefix, static_cast<int>(i), "ppm"), video[i]);
  }
}

EvidenceTrack load_evidence(const fs::path& dir, int frames) {
  EvidenceTrack track;
  for (int t = 0; t < frames; ++t) {
    EvidenceFrame f;
    f.mask = load_pgm(dir / frame_file("mask", t, "pgm"));
    const fs::path kp = dir / frame_file("keypoints", t, "json");
    if (fs::exists(kp)) {
      f.keypoints = load_keypoints(kp);
    }
    const fs::path flo = dir / frame_file("flow", t, "flo");
    if (t + 1 < frames && fs::exists(flo)) {
      f.flow = load_flo(flo);
    }
    track.frames.push_back(std::move(f));
  }
  return track;
}

void save_evidence(const fs::path& dir, const EvidenceTrack& evidence) {
  for (int t = 0; t < evidence.num_frames(); ++t) {
    const EvidenceFrame& f = evidence.frames[static_cast<size_t>(t)];
    save_pgm(dir / frame_file("mask", t, "pgm"), f.mask);
    save_keypoints(dir / frame_file("keypoints", t, "json"), f.keypoints);
    if (f.flow) {
      save_flo(dir / frame_file("flow", t, "flo"), *f.flow);
    }
  }
}

std::vector<Mask> load_masks(const fs::path& dir) {
  std::vector<Mask> masks;
  for (int i = 0; fs::exists(dir / frame_file("mask", i, "pgm")); ++i) {
    masks.push_back(load_pgm(dir / frame_file("mask", i, "pgm")));
  }
  CT_CHECK_INPUT(!masks.empty(), dir.string() + ": no mask_000000.pgm");
  return masks;
}

void save_masks(const fs::path& dir, const std::vector<Mask>& masks) {
  for (size_t i = 0; i < masks.size(); ++i) {
    save_pgm(dir / frame_file("mask", static_cast<int>(i), "pgm"), masks[i]);
  }
}

void save_report(const fs::path& path, const MetricsReport& report) {
  json frames = json::array();
  for (const FrameMetrics& m : report.per_frame) {
    frames.push_back({{"frame", m.frame}, {"mpjpe", m.mpjpe}, {"pa", m.pa}, {"iou", m.iou}});
  }
  writeJson(
      path,
      {{"per_frame", frames},
       {"mean", {{"mpjpe", report.mean.mpjpe}, {"pa", report.mean.pa}, {"iou", report.mean.iou}}}});
}

} // namespace cinetransfer
