#include "cinetransfer/body.h"
#include "cinetransfer/camopt.h"
#include "cinetransfer/raster.h"
#include "cinetransfer/refine.h"
#include "cinetransfer/synth.h"

#include <benchmark/benchmark.h>

#include <map>

using namespace cinetransfer;

namespace {

const GroundTruthBundle& scene(int size) {
  static std::map<int, GroundTruthBundle> cache;
  auto it = cache.find(size);
  if (it == cache.end()) {
    SceneSpec spec;
    spec.frames = 2;
    spec.width = size;
    spec.height = size;
    spec.focal = 340.0 * size / 256.0;
    it = cache.emplace(size, make_scene(spec)).first;
  }
  return it->second;
}

void BM_Rasterize(benchmark::State& state) {
  const GroundTruthBundle& b = scene(static_cast<int>(state.range(0)));
  const PinholeCamera cam = b.cameras.camera(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rasterize(b.scene.meshes[0], b.scene.faces, cam));
  }
}
BENCHMARK(BM_Rasterize)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_PoseBody(benchmark::State& state) {
  const BodyModel& body = synth_body().model;
  const MotionClip motion = make_motion(MotionPreset::Walk, 1, 30.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pose_body(body, motion.frames[0]));
  }
}
BENCHMARK(BM_PoseBody)->Unit(benchmark::kMicrosecond);

void BM_Lbs(benchmark::State& state) {
  const BodyModel& body = synth_body().model;
  const MotionClip motion = make_motion(MotionPreset::Walk, 1, 30.0);
  const Kinematics kin = forward_kinematics(synth_body().rest_joints, body.parents, motion.frames[0]);
  for (auto _ : state) {
    benchmark::DoNotOptimize(lbs(body.template_vertices, body.skin_weights, kin.skinning));
  }
}
BENCHMARK(BM_Lbs)->Unit(benchmark::kMicrosecond);

void BM_FrameLoss(benchmark::State& state) {
  const GroundTruthBundle& b = scene(static_cast<int>(state.range(0)));
  FrameScene fs;
  fs.mesh = &b.scene.meshes[0];
  fs.faces = &b.scene.faces;
  fs.keypoint_points = b.scene.keypoint_points[0];
  fs.next_mesh = &b.scene.meshes[1];
  fs.next_camera = b.cameras.camera(1);
  const CamOptConfig cfg;
  const PinholeCamera cam = b.cameras.camera(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(frame_loss(cam, fs, b.evidence.frames[0], cfg));
  }
}
BENCHMARK(BM_FrameLoss)->Arg(128)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_RefineVideo(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Video video = make_environment(size, size, 4, 1);
  const std::vector<Mask> masks(4, Mask(size, size));
  const BlurDenoiser denoiser;
  const RefineConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(refine_video(video, masks, denoiser, cfg));
  }
  state.SetItemsProcessed(state.iterations() * 4);
}
BENCHMARK(BM_RefineVideo)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
