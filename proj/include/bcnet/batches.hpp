#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bcnet/augment.hpp"
#include "bcnet/dataset.hpp"
#include "bcnet/tensor.hpp"

namespace bcnet {

struct Batch {
  Tensor images;  // [b,224,224,3], preprocessed
  Tensor labels;  // [b,classes], one-hot
  std::vector<std::size_t> sample_indices;  // positions within the subset
};

/// Row of zeros with a single 1 at class_index.
Tensor one_hot(std::span<const std::size_t> class_indices, std::size_t num_classes);

/// Loads one record as a preprocessed [224,224,3] tensor. With augmentation
/// enabled the zoom is drawn from a stream keyed by (seed, epoch, sample), so
/// a sample's augmentation does not depend on batch composition or order.
Tensor prepare_image(const ImageRecord& record, const AugmentConfig* augment, std::uint64_t epoch,
                     std::size_t sample_index);

/// Epoch-wise batch producer over one subset of a manifest. The training
/// subset is shuffled per epoch and zoom-augmented; validation keeps the
/// sorted order and is only preprocessed.
class BatchStream {
 public:
  BatchStream(const DatasetManifest& manifest, Subset subset, AugmentConfig augment,
              std::size_t batch_size, std::uint64_t shuffle_seed);

  std::size_t samples() const { return records_.size(); }
  std::size_t batches_per_epoch() const;
  std::size_t num_classes() const { return num_classes_; }

  /// Resets to the start of the given (1-based) epoch.
  void start_epoch(std::uint64_t epoch);
  std::optional<Batch> next();

 private:
  std::vector<ImageRecord> records_;
  std::size_t num_classes_;
  Subset subset_;
  AugmentConfig augment_;
  std::size_t batch_size_;
  std::uint64_t shuffle_seed_;
  std::uint64_t epoch_ = 1;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
};

}  // namespace bcnet
