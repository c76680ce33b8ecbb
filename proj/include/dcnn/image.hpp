#pragma once

#include <stdexcept>
#include <string>

#include "dcnn/tensor.hpp"

namespace dcnn {

class ImageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Decode an 8-bit PNG or JPEG to an HxWx3 tensor of values in [0,255].
/// Grayscale images are promoted to three identical channels; an alpha
/// channel, if present, is dropped. Corrupt or truncated files raise
/// ImageError without producing a partial tensor.
Tensor decode_image(const std::string& path);

/// Write an HxWx3 tensor (values clamped/rounded to [0,255]) as RGB PNG.
void encode_png(const Tensor& hwc, const std::string& path);

}  // namespace dcnn
