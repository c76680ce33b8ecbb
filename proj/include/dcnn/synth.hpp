#pragma once

#include <cstdint>
#include <string>

namespace dcnn {

struct SynthConfig {
  int n_train = 200;
  int n_test = 50;
  int height = 32;
  int width = 32;
  std::uint64_t seed = 7;
  double noise_sigma = 18.0;
};

/// Write a two-class synthetic fundus stand-in under `dir`: class N draws
/// a filled disk, class C a ring, both with jittered center, radius,
/// intensity and per-pixel Gaussian noise. Emits images/*.png plus a
/// manifest with the split column already filled (train/test, balanced
/// and alternating labels). Returns the manifest path.
std::string write_synthetic_dataset(const std::string& dir, const SynthConfig& cfg);

}  // namespace dcnn
