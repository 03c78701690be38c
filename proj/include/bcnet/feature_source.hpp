#pragma once

#include <filesystem>
#include <optional>
#include <unordered_map>
#include <vector>

#include "bcnet/augment.hpp"
#include "bcnet/bcnw.hpp"
#include "bcnet/dataset.hpp"
#include "bcnet/trainer.hpp"

namespace bcnet {

/// Backbone features for one preprocessed image tensor [224,224,3]: the
/// frozen VGG16 stack followed by global average pooling. Returns [512].
Tensor image_features(const Tensor& preprocessed, const WeightStore& backbone);

/// Feature source over image records: load, (optionally) zoom, preprocess,
/// run the frozen backbone and pool. Without augmentation each sample's
/// features are identical every epoch and are computed once.
class BackboneFeatureSource final : public FeatureSource {
 public:
  BackboneFeatureSource(std::vector<ImageRecord> records, std::size_t num_classes,
                        const WeightStore& backbone, std::optional<AugmentConfig> augment);

  std::size_t size() const override { return records_.size(); }
  FeatureBatch fetch(std::span<const std::size_t> indices, std::uint64_t epoch) override;

  /// Features and labels for every record in order (augmentation-free only).
  InMemoryFeatures materialize();

 private:
  bool augmenting() const { return augment_ && augment_->zoom_range > 0.0; }

  std::vector<ImageRecord> records_;
  std::size_t num_classes_;
  const WeightStore& backbone_;
  std::optional<AugmentConfig> augment_;
  std::unordered_map<std::size_t, std::vector<float>> memo_;
};

}  // namespace bcnet
