#include "dcnn/batch.hpp"

#include <exception>

#include "dcnn/image.hpp"
#include "dcnn/kernels.hpp"

namespace dcnn {

BatchIter::BatchIter(const Dataset& ds, Split split, int batch_size, std::uint64_t shuffle_seed,
                     const PreprocessConfig& cfg, bool train_mode, bool shuffle)
    : ds_(ds), cfg_(cfg), batch_size_(batch_size), train_(train_mode) {
  if (batch_size < 1) throw ManifestError("batch_size must be >= 1");
  cfg_.validate();
  order_ = ds.split_indices(split);
  if (order_.empty()) throw ManifestError("split '" + split_name(split) + "' is empty");
  if (shuffle) {
    Rng64 rng(shuffle_seed);
    rng.shuffle(order_.begin(), order_.end());
  }
  aug_base_ = splitmix64(splitmix64(cfg_.seed) ^ splitmix64(shuffle_seed ^ 0x5a5a5a5a5a5a5a5aull));
}

int BatchIter::batch_count() const {
  return static_cast<int>((order_.size() + batch_size_ - 1) / static_cast<std::size_t>(batch_size_));
}

void BatchIter::reset() { pos_ = 0; }

std::optional<Batch> BatchIter::next() {
  if (pos_ >= order_.size()) return std::nullopt;
  const std::size_t n = std::min<std::size_t>(batch_size_, order_.size() - pos_);

  Batch batch;
  batch.labels.resize(n);
  batch.indices.resize(n);
  batch.images = Tensor({static_cast<int>(n), 3, cfg_.resize_h, cfg_.resize_w});
  const std::size_t plane = static_cast<std::size_t>(3) * cfg_.resize_h * cfg_.resize_w;

  std::exception_ptr err = nullptr;
  const bool parallel = kernels::active_backend() == kernels::Backend::Parallel;
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    try {
      const int ds_index = order_[pos_ + static_cast<std::size_t>(i)];
      const Sample& s = ds_.samples[static_cast<std::size_t>(ds_index)];
      Rng64 aug_rng(splitmix64(aug_base_ + static_cast<std::uint64_t>(ds_index)));
      Tensor img = preprocess_image(decode_image(s.image_path), cfg_, train_, &aug_rng);
      std::copy(img.data(), img.data() + plane,
                batch.images.data() + static_cast<std::size_t>(i) * plane);
      batch.labels[static_cast<std::size_t>(i)] = s.label;
      batch.indices[static_cast<std::size_t>(i)] = ds_index;
    } catch (...) {
#pragma omp critical
      if (!err) err = std::current_exception();
    }
  }
  if (err) std::rethrow_exception(err);

  pos_ += n;
  return batch;
}

}  // namespace dcnn
