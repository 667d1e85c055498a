#include "cinetransfer/refine.h"

#include "cinetransfer/error.h"
#include "cinetransfer/parallel.h"
#include "cinetransfer/random.h"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cinetransfer {

double Sampler::normal() {
  if (hasSpare_) {
    hasSpare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  hasSpare_ = true;
  return r * std::cos(phi);
}

namespace {

void checkSameShape(const Frame& a, const Frame& b, const char* what) {
  CT_CHECK_INPUT(
      a.width == b.width && a.height == b.height && a.samples.size() == b.samples.size(), what);
}

// Eq. 1 with abar(0) = 1 so that step 0 is the clean signal.
Frame noiseTo(const Frame& x0, int t, const Frame& eps, const NoiseSchedule& schedule) {
  if (t == 0) {
    return x0;
  }
  const double a = std::sqrt(schedule.alpha_bar(t));
  const double b = std::sqrt(1.0 - schedule.alpha_bar(t));
  Frame out(x0.width, x0.height);
  for (size_t i = 0; i < out.samples.size(); ++i) {
    out.samples[i] = a * x0.samples[i] + b * eps.samples[i];
  }
  return out;
}

} // namespace

NoiseSchedule build_schedule(int steps, double betaStart, double betaEnd) {
  CT_CHECK_INPUT(steps >= 1, "schedule needs at least one step");
  CT_CHECK_INPUT(
      betaStart > 0.0 && betaStart <= betaEnd && betaEnd < 1.0,
      "schedule betas must satisfy 0 < start <= end < 1");
  NoiseSchedule s;
  s.steps = steps;
  s.alphas.resize(static_cast<size_t>(steps));
  s.alpha_bars.resize(static_cast<size_t>(steps));
  double product = 1.0;
  for (int t = 0; t < steps; ++t) {
    const double beta =
        steps == 1 ? betaStart : betaStart + (betaEnd - betaStart) * t / (steps - 1);
    s.alphas[t] = 1.0 - beta;
    product *= s.alphas[t];
    s.alpha_bars[t] = product;
  }
  return s;
}

Frame forward_noise(const Frame& x0, int t, const Frame& eps, const NoiseSchedule& schedule) {
  CT_CHECK_INPUT(t >= 1 && t <= schedule.steps, "noise step out of range");
  checkSameShape(x0, eps, "noise frame size differs from the signal");
  return noiseTo(x0, t, eps, schedule);
}

Composite composite(
    std::span<const Frame> foreground,
    std::span<const Mask> coverage,
    std::span<const Frame> environment) {
  CT_CHECK_INPUT(
      foreground.size() == coverage.size() && foreground.size() == environment.size(),
      "composite inputs have different frame counts");
  Composite out;
  out.frames.reserve(foreground.size());
  out.masks.reserve(foreground.size());
  for (size_t t = 0; t < foreground.size(); ++t) {
    const Frame& fg = foreground[t];
    const Frame& env = environment[t];
    const Mask& m = coverage[t];
    checkSameShape(fg, env, "foreground and environment sizes differ");
    CT_CHECK_INPUT(
        m.width == fg.width && m.height == fg.height, "coverage mask size differs from the frame");
    Frame f = env;
    for (size_t p = 0; p < f.pixels(); ++p) {
      if (m.bits[p] != 0) {
        for (int c = 0; c < 3; ++c) {
          f.samples[3 * p + c] = fg.samples[3 * p + c];
        }
      }
    }
    out.frames.push_back(std::move(f));
    out.masks.push_back(m);
  }
  return out;
}

Video ZeroDenoiser::predict_noise(const Video& noisy, int) const {
  Video out;
  out.reserve(noisy.size());
  for (const Frame& f : noisy) {
    out.emplace_back(f.width, f.height, 0.0);
  }
  return out;
}

Frame gaussian_blur(const Frame& frame, double sigma) {
  if (sigma <= 0.0) {
    return frame;
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double total = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    total += kernel[i + radius];
  }
  for (double& k : kernel) {
    k /= total;
  }
  const int w = frame.width;
  const int h = frame.height;
  Frame tmp(w, h);
  Frame out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int xx = std::clamp(x + i, 0, w - 1);
          acc += kernel[i + radius] * frame.samples[3 * (static_cast<size_t>(y) * w + xx) + c];
        }
        tmp.samples[3 * (static_cast<size_t>(y) * w + x) + c] = acc;
      }
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          const int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[i + radius] * tmp.samples[3 * (static_cast<size_t>(yy) * w + x) + c];
        }
        out.samples[3 * (static_cast<size_t>(y) * w + x) + c] = acc;
      }
    }
  }
  return out;
}

Video BlurDenoiser::predict_noise(const Video& noisy, int) const {
  Video out;
  out.reserve(noisy.size());
  for (const Frame& f : noisy) {
    Frame blurred = gaussian_blur(f, sigma_);
    for (size_t i = 0; i < blurred.samples.size(); ++i) {
      blurred.samples[i] = f.samples[i] - blurred.samples[i];
    }
    out.push_back(std::move(blurred));
  }
  return out;
}

std::unique_ptr<Denoiser> make_denoiser(const std::string& name) {
  if (name == "zero") {
    return std::make_unique<ZeroDenoiser>();
  }
  if (name == "blur") {
    return std::make_unique<BlurDenoiser>();
  }
  throw InputError("unknown denoiser '" + name + "' (expected zero or blur)");
}

void RefineConfig::validate() const {
  CT_CHECK_INPUT(strength >= 0.0 && strength <= 1.0, "noise strength must lie in [0, 1]");
  CT_CHECK_INPUT(
      latent_weight >= 0.0 && latent_weight <= 1.0, "latent update weight must lie in [0, 1]");
  CT_CHECK_INPUT(
      schedule.steps >= 1 && schedule.alphas.size() == static_cast<size_t>(schedule.steps) &&
          schedule.alpha_bars.size() == static_cast<size_t>(schedule.steps),
      "noise schedule is malformed");
}

void latent_update(Frame& denoised, const Frame& reference, const Mask& mask, double w) {
  checkSameShape(denoised, reference, "reference frame size differs from the denoised frame");
  CT_CHECK_INPUT(
      mask.width == denoised.width && mask.height == denoised.height,
      "mask size differs from the frame");
  for (size_t p = 0; p < denoised.pixels(); ++p) {
    if (mask.bits[p] == 0) {
      continue;
    }
    for (int c = 0; c < 3; ++c) {
      double& a = denoised.samples[3 * p + c];
      a = w * a + (1.0 - w) * reference.samples[3 * p + c];
    }
  }
}

Video sample_noise(std::span<const Frame> like, std::uint64_t seed) {
  Sampler rng(seed);
  Video out;
  out.reserve(like.size());
  for (const Frame& f : like) {
    Frame e(f.width, f.height);
    for (double& s : e.samples) {
      s = rng.normal();
    }
    out.push_back(std::move(e));
  }
  return out;
}

Video refine_video(
    const Video& composite,
    std::span<const Mask> masks,
    const Denoiser& denoiser,
    const RefineConfig& cfg,
    int jobs) {
  cfg.validate();
  CT_CHECK_INPUT(masks.size() == composite.size(), "mask count differs from frame count");
  for (size_t i = 0; i < composite.size(); ++i) {
    CT_CHECK_INPUT(
        masks[i].width == composite[i].width && masks[i].height == composite[i].height,
        "mask size differs from the frame");
    for (double s : composite[i].samples) {
      CT_CHECK_INPUT(std::isfinite(s), "composite contains non-finite samples");
    }
  }

  const NoiseSchedule& sched = cfg.schedule;
  const int start = static_cast<int>(std::lround(cfg.strength * sched.steps));
  if (start == 0) {
    return composite;
  }

  const Video eps = sample_noise(composite, mix_seed(cfg.seed));
  Sampler stepNoise(mix_seed(cfg.seed ^ 0x5eedull));

  Video x(composite.size());
  parallel_for(composite.size(), jobs, [&](size_t i) {
    x[i] = noiseTo(composite[i], start, eps[i], sched);
  });

  for (int t = start; t >= 1; --t) {
    const Video predicted = denoiser.predict_noise(x, t);
    CT_CHECK_INPUT(predicted.size() == x.size(), "denoiser changed the frame count");
    const double alpha = sched.alpha(t);
    const double coef = (1.0 - alpha) / std::sqrt(1.0 - sched.alpha_bar(t));
    const double invSqrtAlpha = 1.0 / std::sqrt(alpha);
    double sigma = 0.0;
    if (cfg.stochastic && t > 1) {
      sigma = std::sqrt((1.0 - alpha) * (1.0 - sched.alpha_bar(t - 1)) / (1.0 - sched.alpha_bar(t)));
    }
    Video extra;
    if (sigma > 0.0) {
      extra.reserve(x.size());
      for (const Frame& f : x) {
        Frame z(f.width, f.height);
        for (double& s : z.samples) {
          s = stepNoise.normal();
        }
        extra.push_back(std::move(z));
      }
    }

    parallel_for(x.size(), jobs, [&](size_t i) {
      checkSameShape(predicted[i], x[i], "denoiser changed the frame size");
      Frame& xi = x[i];
      for (size_t s = 0; s < xi.samples.size(); ++s) {
        xi.samples[s] = (xi.samples[s] - coef * predicted[i].samples[s]) * invSqrtAlpha;
        if (sigma > 0.0) {
          xi.samples[s] += sigma * extra[i].samples[s];
        }
      }
      const Frame reference = noiseTo(composite[i], t - 1, eps[i], sched);
      latent_update(xi, reference, masks[i], cfg.latent_weight);
    });
  }

  for (Frame& f : x) {
    for (double& s : f.samples) {
      s = std::clamp(s, -1.0, 1.0);
    }
  }
  return x;
}

} // namespace cinetransfer
