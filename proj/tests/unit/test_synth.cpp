#include "cinetransfer/error.h"
#include "cinetransfer/random.h"
#include "cinetransfer/synth.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace cinetransfer;

namespace {

SceneSpec spec(ShotType shot, MotionPreset preset, int frames) {
  SceneSpec s;
  s.shot = shot;
  s.preset = preset;
  s.frames = frames;
  return s;
}

size_t area(const Mask& m) {
  return static_cast<size_t>(m.count());
}

double rotationAngle(const Mat3& r) {
  return matrix_to_axis_angle(r).norm();
}

} // namespace

TEST(Synth, NamesRoundTrip) {
  for (ShotType s : kAllShots) {
    EXPECT_EQ(parse_shot(shot_name(s)), s);
  }
  for (MotionPreset p : {MotionPreset::Walk, MotionPreset::ArmRaise, MotionPreset::Turn, MotionPreset::Idle}) {
    EXPECT_EQ(parse_preset(preset_name(p)), p);
  }
  EXPECT_EQ(shot_name(ShotType::PushIn), "PUSH-IN");
  EXPECT_EQ(preset_name(MotionPreset::ArmRaise), "arm-raise");
  EXPECT_THROW(parse_shot("DOLLY"), InputError);
  EXPECT_THROW(parse_preset("run"), InputError);
}

TEST(Synth, SpecValidation) {
  SceneSpec s;
  EXPECT_NO_THROW(s.validate());
  s.frames = 1;
  EXPECT_THROW(s.validate(), InputError);
  s = {};
  s.focal = 0.0;
  EXPECT_THROW(make_scene(s), InputError);
}

TEST(Synth, IdleJointsConstantForEveryShot) {
  for (ShotType shot : kAllShots) {
    const GroundTruthBundle b = make_scene(spec(shot, MotionPreset::Idle, 6));
    ASSERT_EQ(b.joints3d.size(), 6u);
    for (const JointSet& j : b.joints3d) {
      ASSERT_EQ(j.positions, b.joints3d.front().positions) << shot_name(shot);
    }
  }
}

TEST(Synth, PushInMaskAreaStrictlyIncreasing) {
  // a static silhouette isolates perspective scaling; swinging limbs would not
  for (MotionPreset preset : {MotionPreset::Idle}) {
    const GroundTruthBundle b = make_scene(spec(ShotType::PushIn, preset, 30));
    for (int t = 1; t < 30; ++t) {
      ASSERT_GT(area(b.evidence.frames[t].mask), area(b.evidence.frames[t - 1].mask))
          << preset_name(preset) << " frame " << t;
    }
  }
}

TEST(Synth, BundleIsSelfConsistent) {
  for (ShotType shot : kAllShots) {
    const GroundTruthBundle b = make_scene(spec(shot, MotionPreset::Walk, 8));
    const AnimatedScene scene = pose_scene(synth_body().model, b.motion, BoneMap::smpl_default());
    ASSERT_EQ(scene.meshes, b.scene.meshes);
    const EvidenceTrack ev = render_evidence(scene, b.cameras);
    ASSERT_EQ(ev.num_frames(), b.evidence.num_frames());
    for (int t = 0; t < ev.num_frames(); ++t) {
      const EvidenceFrame& x = ev.frames[t];
      const EvidenceFrame& y = b.evidence.frames[t];
      ASSERT_EQ(x.mask, y.mask) << shot_name(shot) << " frame " << t;
      ASSERT_EQ(x.flow, y.flow);
      ASSERT_EQ(x.keypoints.size(), y.keypoints.size());
      for (int k = 0; k < x.keypoints.size(); ++k) {
        ASSERT_EQ(x.keypoints.points[k].u, y.keypoints.points[k].u);
        ASSERT_EQ(x.keypoints.points[k].v, y.keypoints.points[k].v);
        ASSERT_EQ(x.keypoints.points[k].confidence, y.keypoints.points[k].confidence);
      }
    }
    EXPECT_FALSE(b.evidence.frames.back().flow.has_value());
    EXPECT_NO_THROW(b.evidence.validate(8, b.spec.width, b.spec.height));
  }
}

TEST(Synth, SceneIsDeterministicAcrossJobs) {
  const GroundTruthBundle a = make_scene(spec(ShotType::Arc, MotionPreset::Walk, 6), 1);
  const GroundTruthBundle b = make_scene(spec(ShotType::Arc, MotionPreset::Walk, 6), 3);
  EXPECT_EQ(a.scene.meshes, b.scene.meshes);
  for (int t = 0; t < 6; ++t) {
    EXPECT_EQ(a.evidence.frames[t].mask, b.evidence.frames[t].mask);
    EXPECT_EQ(a.evidence.frames[t].flow, b.evidence.frames[t].flow);
    EXPECT_EQ(a.joints3d[t].positions, b.joints3d[t].positions);
  }
}

TEST(Synth, CamerasFrameTheCharacter) {
  for (ShotType shot : kAllShots) {
    for (MotionPreset preset : {MotionPreset::Walk, MotionPreset::ArmRaise, MotionPreset::Turn}) {
      const GroundTruthBundle b = make_scene(spec(shot, preset, 30));
      for (int t = 0; t < 30; ++t) {
        const PinholeCamera cam = b.cameras.camera(t);
        const Vec3& root = b.scene.keypoint_points[t][0];
        const double distance = (cam.center() - Vec3(root.x(), 0.9, root.z())).norm();
        ASSERT_GE(distance, 4.0 - 1e-9) << shot_name(shot) << " frame " << t;
        ASSERT_LE(distance, 6.0 + 1e-9) << shot_name(shot) << " frame " << t;

        // every keypoint is visible and the silhouette never touches the border
        for (const Keypoint& k : b.evidence.frames[t].keypoints.points) {
          ASSERT_EQ(k.confidence, 1.0);
        }
        const Mask& m = b.evidence.frames[t].mask;
        ASSERT_GT(area(m), 0u);
        for (int x = 0; x < m.width; ++x) {
          ASSERT_FALSE(m.at(x, 0) || m.at(x, m.height - 1)) << shot_name(shot) << " frame " << t;
        }
        for (int y = 0; y < m.height; ++y) {
          ASSERT_FALSE(m.at(0, y) || m.at(m.width - 1, y)) << shot_name(shot) << " frame " << t;
        }
      }
    }
  }
}

TEST(Synth, ArcOrbitsAtConstantRadius) {
  const GroundTruthBundle b = make_scene(spec(ShotType::Arc, MotionPreset::Idle, 10));
  const Vec3 root = b.scene.keypoint_points[0][0];
  const Vec3 aim(root.x(), 0.9, root.z());
  for (int t = 0; t < 10; ++t) {
    EXPECT_NEAR((b.cameras.camera(t).center() - aim).norm(), 4.5, 1e-9);
    EXPECT_NEAR(b.cameras.camera(t).center().y(), b.cameras.camera(0).center().y(), 1e-9);
  }
}

TEST(Synth, PerturbMotionIdentityAndDeterminism) {
  const MotionClip clip = make_motion(MotionPreset::Walk, 5, 30.0);
  const MotionClip same = perturb_motion(clip, 0.0, 1.7, 9);
  for (size_t f = 0; f < clip.frames.size(); ++f) {
    EXPECT_EQ(same.frames[f].root_translation, clip.frames[f].root_translation);
    for (size_t j = 0; j < clip.frames[f].local_rotations.size(); ++j) {
      EXPECT_EQ(same.frames[f].local_rotations[j].axis_angle, clip.frames[f].local_rotations[j].axis_angle);
    }
  }
  const MotionClip a = perturb_motion(clip, 0.02, 1.7, 9);
  const MotionClip b = perturb_motion(clip, 0.02, 1.7, 9);
  const MotionClip c = perturb_motion(clip, 0.02, 1.7, 10);
  EXPECT_EQ(a.frames[2].root_translation, b.frames[2].root_translation);
  EXPECT_EQ(a.frames[2].local_rotations[5].axis_angle, b.frames[2].local_rotations[5].axis_angle);
  EXPECT_NE(a.frames[2].root_translation, c.frames[2].root_translation);
  EXPECT_THROW(perturb_motion(clip, -0.1, 1.7, 1), InputError);
}

TEST(Synth, PerturbMotionCalibration) {
  const CapsuleMan& body = synth_body();
  const MotionClip clip = make_motion(MotionPreset::Walk, 10, 30.0);
  std::vector<PosedBody> clean;
  for (const PoseFrame& f : clip.frames) {
    clean.push_back(pose_body(body.model, f));
  }
  double total = 0.0;
  int samples = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const MotionClip noisy = perturb_motion(clip, 0.02, body.height, seed);
    for (size_t f = 0; f < clip.frames.size(); ++f) {
      const PosedBody posed = pose_body(body.model, noisy.frames[f]);
      double sum = 0.0;
      for (size_t j = 0; j < posed.joints.size(); ++j) {
        sum += (posed.joints[j] - clean[f].joints[j]).norm();
      }
      total += sum / static_cast<double>(posed.joints.size());
      ++samples;
    }
  }
  ASSERT_EQ(samples, 1000);
  const double fraction = total / samples / body.height;
  EXPECT_GE(fraction, 0.01);
  EXPECT_LE(fraction, 0.03);
}

TEST(Synth, PerturbCameraIdentityAndDeterminism) {
  const GroundTruthBundle b = make_scene(spec(ShotType::Pan, MotionPreset::Idle, 4));
  const CameraTrajectory same = perturb_camera(b.cameras, 0.0, 0.0, b.scene_diameter, 5);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(same.extrinsics[t].rotation, b.cameras.extrinsics[t].rotation);
    EXPECT_EQ(same.extrinsics[t].translation, b.cameras.extrinsics[t].translation);
  }
  const CameraTrajectory x = perturb_camera(b.cameras, 5.0, 0.05, b.scene_diameter, 5);
  const CameraTrajectory y = perturb_camera(b.cameras, 5.0, 0.05, b.scene_diameter, 5);
  for (int t = 0; t < 4; ++t) {
    EXPECT_EQ(x.extrinsics[t].rotation, y.extrinsics[t].rotation);
    EXPECT_EQ(x.extrinsics[t].translation, y.extrinsics[t].translation);
  }
  EXPECT_THROW(perturb_camera(b.cameras, -1.0, 0.0, 1.0, 0), InputError);
}

TEST(Synth, PerturbCameraMagnitudesUniformWithinBounds) {
  const GroundTruthBundle b = make_scene(spec(ShotType::Arc, MotionPreset::Idle, 2));
  CameraTrajectory base;
  base.intrinsics = b.cameras.intrinsics;
  base.extrinsics.assign(1000, b.cameras.extrinsics[0]);
  const double maxDeg = 5.0;
  const double maxShift = 0.05 * b.scene_diameter;
  const CameraTrajectory p = perturb_camera(base, maxDeg, 0.05, b.scene_diameter, 17);
  const Vec3 c0 = base.camera(0).center();
  std::vector<double> angles;
  std::vector<double> shifts;
  for (int t = 0; t < 1000; ++t) {
    const Mat3 delta = p.extrinsics[t].rotation * base.extrinsics[t].rotation.transpose();
    angles.push_back(rotationAngle(delta) * 180.0 / std::numbers::pi / maxDeg);
    shifts.push_back((p.camera(t).center() - c0).norm() / maxShift);
  }
  for (const auto* values : {&angles, &shifts}) {
    std::vector<double> v = *values;
    std::sort(v.begin(), v.end());
    EXPECT_GE(v.front(), 0.0);
    EXPECT_LE(v.back(), 1.0 + 1e-9);
    // Kolmogorov-Smirnov distance to U(0, 1); 1.63 / sqrt(n) is the 1% critical value
    double ks = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
      ks = std::max({ks, std::abs(v[i] - static_cast<double>(i) / 1000.0),
                     std::abs(v[i] - static_cast<double>(i + 1) / 1000.0)});
    }
    EXPECT_LT(ks, 1.63 / std::sqrt(1000.0));
  }
}

TEST(Synth, EnvironmentBoundedAndSeeded) {
  const Video a = make_environment(32, 24, 3, 1);
  const Video b = make_environment(32, 24, 3, 1);
  const Video c = make_environment(32, 24, 3, 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_NE(a[0], a[2]);
  for (const Frame& f : a) {
    for (double s : f.samples) {
      ASSERT_GE(s, -1.0);
      ASSERT_LE(s, 1.0);
    }
  }
  EXPECT_THROW(make_environment(0, 4, 1, 0), InputError);
}

TEST(Synth, CharacterScalesAndCarriesKeypoints) {
  const SynthCharacter a = make_character(0.0, 1.0);
  const SynthCharacter b = make_character(0.6, 1.2);
  EXPECT_NEAR(measure_height(b.mesh.vertices), 1.2 * measure_height(a.mesh.vertices), 1e-9);
  EXPECT_EQ(a.mesh.faces, b.mesh.faces);
  const int entries = static_cast<int>(BoneMap::smpl_default().entries.size());
  EXPECT_EQ(a.keypoints.size(), entries);
  for (const Keypoint& k : a.keypoints.points) {
    EXPECT_EQ(k.confidence, 1.0);
  }
}

TEST(Synth, ProjectionDistance) {
  const GroundTruthBundle b = make_scene(spec(ShotType::Arc, MotionPreset::Idle, 2));
  PinholeCamera cam = b.cameras.camera(0);
  const std::vector<Vec3>& pts = b.scene.keypoint_points[0];
  EXPECT_EQ(mean_projection_distance(cam, cam, pts), 0.0);
  PinholeCamera shifted = cam;
  shifted.cx += 3.0;
  shifted.cy += 4.0;
  EXPECT_NEAR(mean_projection_distance(cam, shifted, pts), 5.0, 1e-9);
}

TEST(Synth, JointsInMillimetres) {
  const std::vector<std::vector<Vec3>> joints = {{Vec3(0.001, -0.5, 2.0)}};
  const std::vector<JointSet> mm = joints_mm(joints);
  ASSERT_EQ(mm.size(), 1u);
  EXPECT_NEAR((mm[0].positions[0] - Vec3(1.0, -500.0, 2000.0)).norm(), 0.0, 1e-12);
}
