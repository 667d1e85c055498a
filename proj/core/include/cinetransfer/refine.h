#pragma once

#include "cinetransfer/raster.h"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cinetransfer {

/// Linear-beta diffusion schedule. Steps are 1-based: alphas[t - 1] is
/// alpha_t and alpha_bars[t - 1] is the running product up to t.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;

  double alpha(int t) const {
    return alphas[static_cast<size_t>(t - 1)];
  }
  /// Cumulative product; alpha_bar(0) is 1.
  double alpha_bar(int t) const {
    return t == 0 ? 1.0 : alpha_bars[static_cast<size_t>(t - 1)];
  }
};

NoiseSchedule build_schedule(int steps, double betaStart, double betaEnd);

/// RGB frame, row-major, samples interleaved per pixel, nominally in [-1, 1].
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<double> samples;

  Frame() = default;
  Frame(int w, int h, double fill = 0.0)
      : width(w), height(h), samples(static_cast<size_t>(w) * h * 3, fill) {}

  size_t pixels() const {
    return static_cast<size_t>(width) * height;
  }
  bool operator==(const Frame&) const = default;
};

using Video = std::vector<Frame>;

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps, for 1 <= t <= steps.
Frame forward_noise(const Frame& x0, int t, const Frame& eps, const NoiseSchedule& schedule);

struct Composite {
  Video frames;
  std::vector<Mask> masks;
};

/// Per pixel: foreground where the coverage mask is set, environment elsewhere.
Composite composite(
    std::span<const Frame> foreground,
    std::span<const Mask> coverage,
    std::span<const Frame> environment);

/// Noise predictor used during refinement. Implementations must be
/// deterministic in (input, t) and safe to call concurrently.
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Video predict_noise(const Video& noisy, int t) const = 0;
  virtual std::string name() const = 0;
};

/// Predicts zero noise.
class ZeroDenoiser final : public Denoiser {
 public:
  Video predict_noise(const Video& noisy, int t) const override;
  std::string name() const override {
    return "zero";
  }
};

/// Predicts the high-frequency residual x - blur(x).
class BlurDenoiser final : public Denoiser {
 public:
  explicit BlurDenoiser(double sigma = 1.5) : sigma_(sigma) {}
  Video predict_noise(const Video& noisy, int t) const override;
  std::string name() const override {
    return "blur";
  }

 private:
  double sigma_;
};

/// Separable Gaussian blur with clamp-to-edge borders.
Frame gaussian_blur(const Frame& frame, double sigma);

std::unique_ptr<Denoiser> make_denoiser(const std::string& name);

struct RefineConfig {
  /// Noise strength s: refinement starts at step round(s * steps).
  double strength = 0.2;
  /// Latent update weight w inside the character mask.
  double latent_weight = 0.1;
  NoiseSchedule schedule = build_schedule(50, 1e-4, 0.02);
  std::uint64_t seed = 0;
  /// Adds the ancestral variance term at each step.
  bool stochastic = false;

  void validate() const;
};

/// Masked latent update: outside the mask the denoised value is kept; inside
/// it becomes w * denoised + (1 - w) * reference.
void latent_update(Frame& denoised, const Frame& reference, const Mask& mask, double w);

/// Seeded unit-normal noise for every frame of a video.
Video sample_noise(std::span<const Frame> like, std::uint64_t seed);

/// Partial denoising of the composite from step round(s * steps) with the
/// masked latent update applied after every step. Output clamped to [-1, 1].
Video refine_video(
    const Video& composite,
    std::span<const Mask> masks,
    const Denoiser& denoiser,
    const RefineConfig& cfg,
    int jobs = 1);

} // namespace cinetransfer
