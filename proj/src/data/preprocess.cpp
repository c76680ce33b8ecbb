#include "dcnn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dcnn/image.hpp"

namespace dcnn {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_hwc(const Tensor& img, const char* op) {
  if (img.rank() != 3) throw ImageError(std::string(op) + ": expected an HxWxC image tensor");
}

// reflect-101: ... 2 1 | 0 1 2 ... n-1 | n-2 n-3 ...
int reflect(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * n - 2 - i;
  }
  return i;
}

float bilinear_at(const Tensor& img, double sy, double sx, int c) {
  const int h = img.dim(0), w = img.dim(1), ch = img.dim(2);
  const int y0 = static_cast<int>(std::floor(sy));
  const int x0 = static_cast<int>(std::floor(sx));
  const double fy = sy - y0, fx = sx - x0;
  const int ys[2] = {reflect(y0, h), reflect(y0 + 1, h)};
  const int xs[2] = {reflect(x0, w), reflect(x0 + 1, w)};
  auto px = [&](int y, int x) {
    return static_cast<double>(img[(static_cast<std::size_t>(y) * w + x) * ch + c]);
  };
  const double v = (1 - fy) * ((1 - fx) * px(ys[0], xs[0]) + fx * px(ys[0], xs[1])) +
                   fy * ((1 - fx) * px(ys[1], xs[0]) + fx * px(ys[1], xs[1]));
  return static_cast<float>(v);
}

}  // namespace

void PreprocessConfig::validate() const {
  if (resize_h < 1 || resize_w < 1) throw ImageError("resize dims must be positive");
  if (blur_sigma < 0) throw ImageError("blur_sigma must be nonnegative");
  if (augment.rotate_deg_max < 0 || augment.rotate_deg_max > 180)
    throw ImageError("rotate_deg_max must be in [0, 180]");
  if (!(augment.zoom_range.first > 0) || augment.zoom_range.first > augment.zoom_range.second ||
      !(augment.zoom_range.second < 2))
    throw ImageError("zoom_range must be an interval inside (0, 2)");
  if (augment.hflip_prob < 0 || augment.hflip_prob > 1)
    throw ImageError("hflip_prob must be in [0, 1]");
}

Tensor resize_bilinear(const Tensor& img, int out_h, int out_w) {
  require_hwc(img, "resize");
  if (out_h < 1 || out_w < 1) throw ImageError("resize: output dims must be positive");
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  if (out_h == h && out_w == w) return img;
  Tensor out({out_h, out_w, c});
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    const double src_y = (oy + 0.5) * sy - 0.5;
    const int y0 = std::clamp(static_cast<int>(std::floor(src_y)), 0, h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = std::clamp(src_y - y0, 0.0, 1.0);
    for (int ox = 0; ox < out_w; ++ox) {
      const double src_x = (ox + 0.5) * sx - 0.5;
      const int x0 = std::clamp(static_cast<int>(std::floor(src_x)), 0, w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = std::clamp(src_x - x0, 0.0, 1.0);
      for (int k = 0; k < c; ++k) {
        auto px = [&](int y, int x) {
          return static_cast<double>(img[(static_cast<std::size_t>(y) * w + x) * c + k]);
        };
        const double v = (1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x1)) +
                         fy * ((1 - fx) * px(y1, x0) + fx * px(y1, x1));
        out[(static_cast<std::size_t>(oy) * out_w + ox) * c + k] = static_cast<float>(v);
      }
    }
  }
  return out;
}

Tensor histogram_equalize(const Tensor& img) {
  require_hwc(img, "equalize");
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  const std::int64_t n = static_cast<std::int64_t>(h) * w;
  Tensor out(img.shape());
  std::vector<std::int64_t> hist(256);
  for (int k = 0; k < c; ++k) {
    std::fill(hist.begin(), hist.end(), 0);
    for (std::int64_t i = 0; i < n; ++i) {
      const float v = img[static_cast<std::size_t>(i) * c + k];
      const int bin = std::clamp(static_cast<int>(std::lround(v)), 0, 255);
      hist[static_cast<std::size_t>(bin)]++;
    }
    std::int64_t cdf = 0, cdf_min = 0;
    std::int64_t cum[256];
    for (int b = 0; b < 256; ++b) {
      cdf += hist[static_cast<std::size_t>(b)];
      cum[b] = cdf;
      if (cdf_min == 0 && cdf > 0) cdf_min = cdf;
    }
    if (cdf_min == n) {
      // constant channel: the mapping is degenerate, keep values as-is
      for (std::int64_t i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i) * c + k] = img[static_cast<std::size_t>(i) * c + k];
      continue;
    }
    for (std::int64_t i = 0; i < n; ++i) {
      const float v = img[static_cast<std::size_t>(i) * c + k];
      const int bin = std::clamp(static_cast<int>(std::lround(v)), 0, 255);
      const double mapped = static_cast<double>(cum[bin] - cdf_min) /
                            static_cast<double>(n - cdf_min) * 255.0;
      out[static_cast<std::size_t>(i) * c + k] = static_cast<float>(std::lround(mapped));
    }
  }
  return out;
}

Tensor gaussian_blur(const Tensor& img, double sigma) {
  require_hwc(img, "blur");
  if (sigma < 0) throw ImageError("blur: sigma must be nonnegative");
  if (sigma == 0) return img;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] = std::exp(-(static_cast<double>(i) * i) /
                                                            (2.0 * sigma * sigma));
    sum += kernel[static_cast<std::size_t>(i + radius)];
  }
  for (auto& v : kernel) v /= sum;

  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  std::vector<double> tmp(img.size());
  // horizontal pass
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const int xi = reflect(x + i, w);
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 static_cast<double>(img[(static_cast<std::size_t>(y) * w + xi) * c + k]);
        }
        tmp[(static_cast<std::size_t>(y) * w + x) * c + k] = acc;
      }
  // vertical pass
  Tensor out(img.shape());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k) {
        double acc = 0;
        for (int i = -radius; i <= radius; ++i) {
          const int yi = reflect(y + i, h);
          acc += kernel[static_cast<std::size_t>(i + radius)] *
                 tmp[(static_cast<std::size_t>(yi) * w + x) * c + k];
        }
        out[(static_cast<std::size_t>(y) * w + x) * c + k] = static_cast<float>(acc);
      }
  return out;
}

Tensor normalize01(const Tensor& img) {
  Tensor out(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) out[i] = img[i] / 255.0f;
  return out;
}

Tensor hflip(const Tensor& img) {
  require_hwc(img, "hflip");
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  Tensor out(img.shape());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k)
        out[(static_cast<std::size_t>(y) * w + x) * c + k] =
            img[(static_cast<std::size_t>(y) * w + (w - 1 - x)) * c + k];
  return out;
}

Tensor rotate_bilinear(const Tensor& img, double degrees) {
  require_hwc(img, "rotate");
  if (degrees == 0) return img;
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  const double rad = degrees * kPi / 180.0;
  const double ca = std::cos(rad), sa = std::sin(rad);
  Tensor out(img.shape());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      // inverse map: rotate the destination point back by -degrees
      const double dy = y - cy, dx = x - cx;
      const double sy = cy + dy * ca - dx * sa;
      const double sx = cx + dy * sa + dx * ca;
      for (int k = 0; k < c; ++k)
        out[(static_cast<std::size_t>(y) * w + x) * c + k] = bilinear_at(img, sy, sx, k);
    }
  return out;
}

Tensor zoom_bilinear(const Tensor& img, double factor) {
  require_hwc(img, "zoom");
  if (factor <= 0) throw ImageError("zoom: factor must be positive");
  if (factor == 1.0) return img;
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  Tensor out(img.shape());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double sy = cy + (y - cy) / factor;
      const double sx = cx + (x - cx) / factor;
      for (int k = 0; k < c; ++k)
        out[(static_cast<std::size_t>(y) * w + x) * c + k] = bilinear_at(img, sy, sx, k);
    }
  return out;
}

Tensor augment(const Tensor& img, Rng64& rng, const AugmentConfig& cfg) {
  const double angle = rng.uniform(-cfg.rotate_deg_max, cfg.rotate_deg_max);
  const double zoom = rng.uniform(cfg.zoom_range.first, cfg.zoom_range.second);
  const double flip_draw = rng.uniform();
  Tensor out = img;
  if (angle != 0) out = rotate_bilinear(out, angle);
  if (zoom != 1.0) out = zoom_bilinear(out, zoom);
  if (flip_draw < cfg.hflip_prob) out = hflip(out);
  return out;
}

Tensor hwc_to_chw(const Tensor& img) {
  require_hwc(img, "hwc_to_chw");
  const int h = img.dim(0), w = img.dim(1), c = img.dim(2);
  Tensor out({c, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < c; ++k)
        out[(static_cast<std::size_t>(k) * h + y) * w + x] =
            img[(static_cast<std::size_t>(y) * w + x) * c + k];
  return out;
}

Tensor preprocess_image(const Tensor& decoded_hwc, const PreprocessConfig& cfg, bool train,
                        Rng64* aug_rng) {
  cfg.validate();
  Tensor img = resize_bilinear(decoded_hwc, cfg.resize_h, cfg.resize_w);
  if (cfg.equalize) img = histogram_equalize(img);
  if (cfg.blur_sigma > 0) img = gaussian_blur(img, cfg.blur_sigma);
  if (train) {
    if (!aug_rng) throw ImageError("preprocess: train mode requires an augmentation rng");
    img = augment(img, *aug_rng, cfg.augment);
  }
  if (cfg.normalize01) img = normalize01(img);
  return hwc_to_chw(img);
}

}  // namespace dcnn
