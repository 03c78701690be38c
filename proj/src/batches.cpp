#include "bcnet/batches.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "bcnet/errors.hpp"
#include "bcnet/rng.hpp"

namespace bcnet {

Tensor one_hot(std::span<const std::size_t> class_indices, std::size_t num_classes) {
  Tensor out({class_indices.size(), num_classes});
  for (std::size_t i = 0; i < class_indices.size(); ++i) {
    if (class_indices[i] >= num_classes) {
      throw std::out_of_range("class index " + std::to_string(class_indices[i]) + " >= " +
                              std::to_string(num_classes));
    }
    out.at(i, class_indices[i]) = 1.0f;
  }
  return out;
}

Tensor prepare_image(const ImageRecord& record, const AugmentConfig* augment, std::uint64_t epoch,
                     std::size_t sample_index) {
  Tensor x = load_resize(record.path);
  if (augment && augment->zoom_range > 0.0) {
    Rng rng(derive_seed(augment->seed, 0x5a4f4f4dull /* "ZOOM" */, epoch, sample_index));
    x = zoom_augment(x, *augment, rng);
  }
  return preprocess_vgg(x);
}

BatchStream::BatchStream(const DatasetManifest& manifest, Subset subset, AugmentConfig augment,
                         std::size_t batch_size, std::uint64_t shuffle_seed)
    : records_(manifest.select(subset)),
      num_classes_(manifest.class_names.size()),
      subset_(subset),
      augment_(augment),
      batch_size_(batch_size),
      shuffle_seed_(shuffle_seed) {
  if (batch_size_ == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (records_.empty()) {
    throw DataError(std::string("the ") + to_string(subset) + " subset is empty");
  }
  start_epoch(1);
}

std::size_t BatchStream::batches_per_epoch() const {
  return (records_.size() + batch_size_ - 1) / batch_size_;
}

void BatchStream::start_epoch(std::uint64_t epoch) {
  epoch_ = epoch;
  cursor_ = 0;
  if (subset_ == Subset::train) {
    order_ = epoch_order(records_.size(), shuffle_seed_, epoch);
  } else {
    order_.resize(records_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }
}

std::optional<Batch> BatchStream::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t stop = std::min(order_.size(), cursor_ + batch_size_);
  const std::size_t b = stop - cursor_;

  Batch batch;
  batch.images = Tensor({b, kImageSize, kImageSize, 3});
  batch.sample_indices.assign(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                              order_.begin() + static_cast<std::ptrdiff_t>(stop));
  std::vector<std::size_t> classes;
  const AugmentConfig* augment = subset_ == Subset::train ? &augment_ : nullptr;
  const std::size_t per_image = kImageSize * kImageSize * 3;
  for (std::size_t i = 0; i < b; ++i) {
    const std::size_t idx = batch.sample_indices[i];
    const Tensor x = prepare_image(records_[idx], augment, epoch_, idx);
    std::copy_n(x.data(), per_image, batch.images.data() + i * per_image);
    classes.push_back(records_[idx].class_index);
  }
  batch.labels = one_hot(classes, num_classes_);
  cursor_ = stop;
  return batch;
}

}  // namespace bcnet
