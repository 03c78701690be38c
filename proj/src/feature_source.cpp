#include "bcnet/feature_source.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "bcnet/backbone.hpp"
#include "bcnet/batches.hpp"
#include "bcnet/head.hpp"

namespace bcnet {

Tensor image_features(const Tensor& preprocessed, const WeightStore& backbone) {
  if (preprocessed.rank() != 3) {
    throw ShapeError("image_features expects [224,224,3], got " + format_dims(preprocessed.dims()));
  }
  Tensor x = reshape(preprocessed, {1, preprocessed.dim(0), preprocessed.dim(1), preprocessed.dim(2)});
  const Tensor pooled = gap(vgg16_forward(x, backbone));
  return reshape(pooled, {pooled.dim(1)});
}

BackboneFeatureSource::BackboneFeatureSource(std::vector<ImageRecord> records,
                                             std::size_t num_classes, const WeightStore& backbone,
                                             std::optional<AugmentConfig> augment)
    : records_(std::move(records)),
      num_classes_(num_classes),
      backbone_(backbone),
      augment_(augment) {
  validate_backbone(backbone_);
}

FeatureBatch BackboneFeatureSource::fetch(std::span<const std::size_t> indices,
                                          std::uint64_t epoch) {
  const std::size_t width = kVggFeatureChannels;
  FeatureBatch batch{Tensor({indices.size(), width}), Tensor()};
  std::vector<std::size_t> classes;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t idx = indices[i];
    if (idx >= records_.size()) throw std::out_of_range("sample index " + std::to_string(idx));
    float* row = batch.features.data() + i * width;
    if (!augmenting()) {
      auto it = memo_.find(idx);
      if (it == memo_.end()) {
        const Tensor f = image_features(prepare_image(records_[idx], nullptr, epoch, idx), backbone_);
        it = memo_.emplace(idx, std::vector<float>(f.values().begin(), f.values().end())).first;
      }
      std::copy(it->second.begin(), it->second.end(), row);
    } else {
      const Tensor f = image_features(prepare_image(records_[idx], &*augment_, epoch, idx), backbone_);
      std::copy_n(f.data(), width, row);
    }
    classes.push_back(records_[idx].class_index);
  }
  batch.labels = one_hot(classes, num_classes_);
  return batch;
}

InMemoryFeatures BackboneFeatureSource::materialize() {
  if (augmenting()) throw std::logic_error("feature caches are only defined without augmentation");
  std::vector<std::size_t> all(records_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  FeatureBatch b = fetch(all, 0);
  return InMemoryFeatures(std::move(b.features), std::move(b.labels));
}

}  // namespace bcnet
