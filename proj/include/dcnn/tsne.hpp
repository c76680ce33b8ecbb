#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcnn {

class TsneError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TsneConfig {
  double perplexity = 30;
  int iters = 1000;
  double lr = 200;
  std::uint64_t seed = 0;
  double early_exaggeration = 12;
  int exaggeration_iters = 250;
  double momentum_initial = 0.5;
  double momentum_final = 0.8;
  int momentum_switch_iter = 250;
  bool use_gains = true;  // adaptive per-coordinate gain heuristic
  double min_gain = 0.01;
  bool record_kl = false;
};

struct Embedding2D {
  std::vector<std::array<double, 2>> points;
  double kl = 0;
  int iterations = 0;
  std::vector<double> kl_history;  // per iteration when record_kl is set
};

/// Exact (dense) t-SNE to 2-d. Per-point bandwidths are found by
/// bisection so each conditional distribution's entropy matches
/// log(perplexity) within 1e-5 in at most 50 steps; an unreachable
/// perplexity (e.g. perfectly equidistant points) is an error, not a
/// silent clamp. P is symmetrized, exaggerated for the first
/// exaggeration_iters iterations, and the embedding descends with
/// momentum (and optional gains) from a seeded Gaussian init.
Embedding2D tsne(const std::vector<double>& features, int n, int d,
                 const TsneConfig& cfg = {});

std::string embedding_to_csv(const Embedding2D& emb, const std::vector<int>& labels);

}  // namespace dcnn
