#pragma once

#include <optional>
#include <vector>

#include "dcnn/dataset.hpp"
#include "dcnn/preprocess.hpp"
#include "dcnn/tensor.hpp"

namespace dcnn {

struct Batch {
  Tensor images;             // N x C x H x W
  std::vector<int> labels;
  std::vector<int> indices;  // positions in the source dataset
};

/// One epoch over a split. With `shuffle` the epoch order is the seeded
/// permutation of the split (Fisher-Yates under Rng64(shuffle_seed)); the
/// final partial batch is emitted. Decoding and preprocessing of the
/// samples inside a batch may run on several threads, but each sample's
/// augmentation stream is derived from (preprocess seed, shuffle seed,
/// dataset index) alone, so batch contents do not depend on thread count.
class BatchIter {
 public:
  BatchIter(const Dataset& ds, Split split, int batch_size, std::uint64_t shuffle_seed,
            const PreprocessConfig& cfg, bool train_mode, bool shuffle = true);

  std::optional<Batch> next();
  void reset();

  std::size_t sample_count() const { return order_.size(); }
  int batch_count() const;
  const std::vector<int>& epoch_order() const { return order_; }

 private:
  const Dataset& ds_;
  PreprocessConfig cfg_;
  std::vector<int> order_;
  int batch_size_;
  bool train_;
  std::uint64_t aug_base_;
  std::size_t pos_ = 0;
};

}  // namespace dcnn
