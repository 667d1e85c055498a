#pragma once

#include "cinetransfer/body.h"
#include "cinetransfer/camopt.h"
#include "cinetransfer/metrics.h"
#include "cinetransfer/raster.h"
#include "cinetransfer/refine.h"
#include "cinetransfer/retarget.h"

#include <filesystem>
#include <string>
#include <vector>

namespace cinetransfer {

// Readers throw InputError on missing files and malformed content. Writers
// create parent directories and throw std::runtime_error on I/O failure.

/// JSON body model. The name "builtin:capsule-man" loads the built-in body.
BodyModel load_body_model(const std::string& pathOrBuiltin);
void save_body_model(const std::filesystem::path& path, const BodyModel& model);

/// Wavefront OBJ subset: `v` and triangular `f` lines, 1-based indices.
/// `f a/b/c` index forms are accepted; only the position index is kept.
CharacterMesh load_obj(const std::filesystem::path& path);
void save_obj(const std::filesystem::path& path, const Vertices& vertices, const Faces& faces);

/// {"points": [[u, v, confidence], ...]}
Keypoints2D load_keypoints(const std::filesystem::path& path);
void save_keypoints(const std::filesystem::path& path, const Keypoints2D& keypoints);

/// [{"keypoint": k, "joint": j, "parent_joint": p}, ...]
BoneMap load_bone_map(const std::filesystem::path& path);
void save_bone_map(const std::filesystem::path& path, const BoneMap& map);

/// {"intrinsics": {...}, "frames": [{"rotation": [rx, ry, rz], "translation": [..]}]}
/// with world-to-camera axis-angle rotations.
CameraTrajectory load_cameras(const std::filesystem::path& path);
void save_cameras(const std::filesystem::path& path, const CameraTrajectory& cameras);

/// {"fps": f, "shape": [..], "frames": [{"root_translation": [..],
/// "rotations": [[rx, ry, rz], ...]}]}; "shape" is optional.
MotionClip load_motion(const std::filesystem::path& path);
void save_motion(const std::filesystem::path& path, const MotionClip& motion);

/// {"units": "mm", "frames": [[[x, y, z], ...], ...]}
std::vector<JointSet> load_joints(const std::filesystem::path& path);
void save_joints(const std::filesystem::path& path, const std::vector<JointSet>& joints);

/// Binary PGM (P5); any non-zero sample reads as set, set pixels write 255.
Mask load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const Mask& mask);

/// Binary 8-bit PPM (P6) mapped linearly to and from [-1, 1].
Frame load_ppm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const Frame& frame);

/// Middlebury .flo. Invalid pixels are written as the format's "unknown"
/// value (1e10) and read back as invalid.
FlowField load_flo(const std::filesystem::path& path);
void save_flo(const std::filesystem::path& path, const FlowField& flow);

/// "<prefix>_000123.<ext>"
std::string frame_file(const std::string& prefix, int index, const std::string& ext);

/// Consecutive frame_%06d.ppm files from index 0.
Video load_frames(const std::filesystem::path& dir);
void save_frames(const std::filesystem::path& dir, const Video& video, const std::string& prefix = "frame");

/// Masks mask_%06d.pgm, keypoints keypoints_%06d.json and flow_%06d.flo
/// (absent on the last frame) for `frames` frames.
EvidenceTrack load_evidence(const std::filesystem::path& dir, int frames);
void save_evidence(const std::filesystem::path& dir, const EvidenceTrack& evidence);

/// Consecutive mask_%06d.pgm files from index 0.
std::vector<Mask> load_masks(const std::filesystem::path& dir);
void save_masks(const std::filesystem::path& dir, const std::vector<Mask>& masks);

/// {"per_frame": [{frame, mpjpe, pa, iou}], "mean": {mpjpe, pa, iou}}
void save_report(const std::filesystem::path& path, const MetricsReport& report);

} // namespace cinetransfer
