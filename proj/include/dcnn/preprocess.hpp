#pragma once

#include <cstdint>
#include <utility>

#include "dcnn/rng.hpp"
#include "dcnn/tensor.hpp"

namespace dcnn {

struct AugmentConfig {
  double rotate_deg_max = 15.0;
  std::pair<double, double> zoom_range{0.9, 1.1};
  double hflip_prob = 0.5;
};

struct PreprocessConfig {
  int resize_h = 224;
  int resize_w = 224;
  bool equalize = true;
  double blur_sigma = 0.0;
  bool normalize01 = true;
  AugmentConfig augment;
  std::uint64_t seed = 0;

  void validate() const;
};

// All image ops take and return HxWxC float tensors (C=3, values 0..255
// until normalize01). They are pure: output depends only on the input,
// the config and the rng draws.

/// Bilinear with half-pixel centers: src = (dst + 0.5) * in/out - 0.5,
/// edge-clamped. Resizing to the same dims is a bitwise identity.
Tensor resize_bilinear(const Tensor& img, int out_h, int out_w);

/// Classic per-channel equalization on rounded 8-bit bins:
/// v -> round((cdf(v) - cdf_min) / (N - cdf_min) * 255). A constant
/// channel is returned unchanged.
Tensor histogram_equalize(const Tensor& img);

/// Separable Gaussian, radius ceil(3*sigma), weights normalized to sum 1,
/// reflect-101 padding. sigma = 0 is the identity.
Tensor gaussian_blur(const Tensor& img, double sigma);

Tensor normalize01(const Tensor& img);

Tensor hflip(const Tensor& img);
Tensor rotate_bilinear(const Tensor& img, double degrees);
Tensor zoom_bilinear(const Tensor& img, double factor);

/// Rotation by U(-max,+max) degrees, zoom by U(zoom_range), then a
/// horizontal flip with probability hflip_prob. Consumes exactly three
/// uniform draws per call regardless of configuration.
Tensor augment(const Tensor& img, Rng64& rng, const AugmentConfig& cfg);

Tensor hwc_to_chw(const Tensor& img);

/// Fixed pipeline: resize -> equalize -> blur -> augment (train only) ->
/// normalize -> CHW. `aug_rng` is required when train is set.
Tensor preprocess_image(const Tensor& decoded_hwc, const PreprocessConfig& cfg, bool train,
                        Rng64* aug_rng);

}  // namespace dcnn
