#include "dcnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dcnn/dataset.hpp"
#include "dcnn/image.hpp"
#include "dcnn/rng.hpp"
#include "dcnn/tensor.hpp"

namespace dcnn {

namespace {

Tensor draw_sample(int label, int h, int w, double noise_sigma, Rng64& rng) {
  const double background = rng.uniform(30.0, 70.0);
  const double foreground = rng.uniform(150.0, 220.0);
  const double cy = h / 2.0 + rng.uniform(-3.0, 3.0);
  const double cx = w / 2.0 + rng.uniform(-3.0, 3.0);
  const double radius = rng.uniform(0.22, 0.3) * std::min(h, w);
  const double tint[3] = {rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0), rng.uniform(0.85, 1.0)};

  Tensor img({h, w, 3});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double d = std::hypot(y - cy, x - cx);
      // label 0 ("N"): filled disk; label 1 ("C"): ring of width ~3px
      const bool inside = label == 0 ? d <= radius : std::abs(d - radius) <= 1.5;
      const double base = inside ? foreground : background;
      for (int c = 0; c < 3; ++c) {
        const double v = base * tint[c] + rng.normal() * noise_sigma;
        img[(static_cast<std::size_t>(y) * w + x) * 3 + c] =
            static_cast<float>(std::clamp(v, 0.0, 255.0));
      }
    }
  return img;
}

}  // namespace

std::string write_synthetic_dataset(const std::string& dir, const SynthConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "images");

  Dataset ds;
  ds.class_names = odir_class_names();
  const int label_n = 0;  // "N"
  const int label_c = 3;  // "C"

  Rng64 rng(splitmix64(cfg.seed ^ 0x5e1fda7a5e7ull));
  const int total = cfg.n_train + cfg.n_test;
  for (int i = 0; i < total; ++i) {
    const bool is_test = i >= cfg.n_train;
    const int label = (i % 2 == 0) ? label_n : label_c;
    char name[64];
    std::snprintf(name, sizeof(name), "images/%s_%04d.png", is_test ? "test" : "train",
                  is_test ? i - cfg.n_train : i);
    const std::string rel = name;
    Tensor img = draw_sample(label == label_n ? 0 : 1, cfg.height, cfg.width, cfg.noise_sigma, rng);
    encode_png(img, (fs::path(dir) / rel).string());

    Sample s;
    s.image_path = (fs::path(dir) / rel).string();
    s.eye = (i % 4 < 2) ? EyeSide::Left : EyeSide::Right;
    s.label = label;
    s.split = is_test ? Split::Test : Split::Train;
    ds.samples.push_back(std::move(s));
  }

  const std::string manifest = (fs::path(dir) / "manifest.csv").string();
  save_manifest(ds, manifest);
  return manifest;
}

}  // namespace dcnn
