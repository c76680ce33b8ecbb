#include "dcnn/tsne.hpp"

#include <cmath>
#include <limits>

#include "dcnn/io.hpp"
#include "dcnn/rng.hpp"

namespace dcnn {

namespace {

constexpr double kEntropyTol = 1e-5;
constexpr int kBisectionIters = 50;

// Conditional distributions P_{j|i} with per-point precision found by
// expanding bisection on beta = 1/(2*sigma^2), bhtsne style.
void conditional_p(const std::vector<double>& dist2, int n, double perplexity,
                   std::vector<double>& p) {
  const double target = std::log(perplexity);
  for (int i = 0; i < n; ++i) {
    double beta = 1.0;
    double beta_min = -std::numeric_limits<double>::infinity();
    double beta_max = std::numeric_limits<double>::infinity();
    double hdiff = 0;
    bool converged = false;
    for (int iter = 0; iter < kBisectionIters; ++iter) {
      double sum = 0, dsum = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const double v = std::exp(-beta * dist2[static_cast<std::size_t>(i) * n + j]);
        p[static_cast<std::size_t>(i) * n + j] = v;
        sum += v;
        dsum += v * dist2[static_cast<std::size_t>(i) * n + j];
      }
      if (sum <= 0) {
        hdiff = -target;  // entropy ~ -inf, need smaller beta
      } else {
        const double entropy = std::log(sum) + beta * dsum / sum;
        hdiff = entropy - target;
      }
      if (std::abs(hdiff) < kEntropyTol) {
        converged = true;
        break;
      }
      if (hdiff > 0) {
        beta_min = beta;
        beta = std::isinf(beta_max) ? beta * 2 : (beta + beta_max) / 2;
      } else {
        beta_max = beta;
        beta = std::isinf(beta_min) ? beta / 2 : (beta + beta_min) / 2;
      }
    }
    if (!converged)
      throw TsneError("perplexity " + io::fmt_g(perplexity) +
                      " unreachable for point " + std::to_string(i) +
                      " (entropy residual " + io::fmt_g(hdiff) + ")");
    double sum = 0;
    for (int j = 0; j < n; ++j)
      if (j != i) sum += p[static_cast<std::size_t>(i) * n + j];
    for (int j = 0; j < n; ++j)
      if (j != i) p[static_cast<std::size_t>(i) * n + j] /= sum;
    p[static_cast<std::size_t>(i) * n + i] = 0;
  }
}

}  // namespace

Embedding2D tsne(const std::vector<double>& features, int n, int d, const TsneConfig& cfg) {
  if (n < 4) throw TsneError("tsne: need at least 4 points");
  if (static_cast<std::size_t>(n) * d != features.size())
    throw TsneError("tsne: feature buffer does not match n*d");
  if (cfg.perplexity < 1) throw TsneError("tsne: perplexity must be >= 1");
  if (cfg.iters < 1) throw TsneError("tsne: iters must be >= 1");

  const std::size_t nn = static_cast<std::size_t>(n) * n;
  std::vector<double> dist2(nn, 0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double s = 0;
      for (int k = 0; k < d; ++k) {
        const double t = features[static_cast<std::size_t>(i) * d + k] -
                         features[static_cast<std::size_t>(j) * d + k];
        s += t * t;
      }
      dist2[static_cast<std::size_t>(i) * n + j] = s;
      dist2[static_cast<std::size_t>(j) * n + i] = s;
    }

  std::vector<double> p(nn, 0);
  conditional_p(dist2, n, cfg.perplexity, p);
  // symmetrize: p_ij = (p_j|i + p_i|j) / 2n
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = (p[static_cast<std::size_t>(i) * n + j] +
                        p[static_cast<std::size_t>(j) * n + i]) /
                       (2.0 * n);
      p[static_cast<std::size_t>(i) * n + j] = v;
      p[static_cast<std::size_t>(j) * n + i] = v;
    }

  Embedding2D emb;
  emb.points.assign(static_cast<std::size_t>(n), {0, 0});
  Rng64 rng(splitmix64(cfg.seed ^ 0x7e57e11aull));
  for (auto& pt : emb.points) {
    pt[0] = rng.normal() * 1e-4;
    pt[1] = rng.normal() * 1e-4;
  }

  std::vector<double> vel(static_cast<std::size_t>(n) * 2, 0);
  std::vector<double> gain(static_cast<std::size_t>(n) * 2, 1);
  std::vector<double> grad(static_cast<std::size_t>(n) * 2, 0);
  std::vector<double> q(nn, 0);

  for (int iter = 0; iter < cfg.iters; ++iter) {
    const double exag = iter < cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
    const double momentum =
        iter < cfg.momentum_switch_iter ? cfg.momentum_initial : cfg.momentum_final;

    double z = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const double dy0 = emb.points[static_cast<std::size_t>(i)][0] -
                           emb.points[static_cast<std::size_t>(j)][0];
        const double dy1 = emb.points[static_cast<std::size_t>(i)][1] -
                           emb.points[static_cast<std::size_t>(j)][1];
        const double qt = 1.0 / (1.0 + dy0 * dy0 + dy1 * dy1);
        q[static_cast<std::size_t>(i) * n + j] = qt;
        q[static_cast<std::size_t>(j) * n + i] = qt;
        z += 2.0 * qt;
      }

    std::fill(grad.begin(), grad.end(), 0);
    double kl = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        const std::size_t at = static_cast<std::size_t>(i) * n + j;
        const double qt = q[at];
        const double qnorm = qt / z;
        const double mult = 4.0 * (exag * p[at] - qnorm) * qt;
        grad[static_cast<std::size_t>(i) * 2 + 0] +=
            mult * (emb.points[static_cast<std::size_t>(i)][0] -
                    emb.points[static_cast<std::size_t>(j)][0]);
        grad[static_cast<std::size_t>(i) * 2 + 1] +=
            mult * (emb.points[static_cast<std::size_t>(i)][1] -
                    emb.points[static_cast<std::size_t>(j)][1]);
        if (p[at] > 0) kl += p[at] * std::log(p[at] / std::max(qnorm, 1e-300));
      }

    for (std::size_t k = 0; k < grad.size(); ++k) {
      if (cfg.use_gains) {
        gain[k] = (grad[k] > 0) != (vel[k] > 0) ? gain[k] + 0.2 : gain[k] * 0.8;
        if (gain[k] < cfg.min_gain) gain[k] = cfg.min_gain;
      }
      vel[k] = momentum * vel[k] - cfg.lr * (cfg.use_gains ? gain[k] : 1.0) * grad[k];
    }
    double mean0 = 0, mean1 = 0;
    for (int i = 0; i < n; ++i) {
      emb.points[static_cast<std::size_t>(i)][0] += vel[static_cast<std::size_t>(i) * 2 + 0];
      emb.points[static_cast<std::size_t>(i)][1] += vel[static_cast<std::size_t>(i) * 2 + 1];
      mean0 += emb.points[static_cast<std::size_t>(i)][0] / n;
      mean1 += emb.points[static_cast<std::size_t>(i)][1] / n;
    }
    for (auto& pt : emb.points) {
      pt[0] -= mean0;
      pt[1] -= mean1;
    }
    if (cfg.record_kl) emb.kl_history.push_back(kl);
    emb.kl = kl;
    emb.iterations = iter + 1;
  }
  return emb;
}

std::string embedding_to_csv(const Embedding2D& emb, const std::vector<int>& labels) {
  std::string out = "x,y,label\n";
  for (std::size_t i = 0; i < emb.points.size(); ++i) {
    const int label = i < labels.size() ? labels[i] : -1;
    out += io::fmt_g(emb.points[i][0]) + "," + io::fmt_g(emb.points[i][1]) + "," +
           std::to_string(label) + "\n";
  }
  return out;
}

}  // namespace dcnn
