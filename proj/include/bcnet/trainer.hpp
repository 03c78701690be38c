#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bcnet/head.hpp"
#include "bcnet/tensor.hpp"

namespace bcnet {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

template <typename T>
struct BasicAdamState {
  AdamConfig config;
  BasicHeadParams<T> m;  // first moments
  BasicHeadParams<T> v;  // second moments
  std::uint64_t step = 0;

  static BasicAdamState fresh(const HeadShape& shape, const AdamConfig& config = {}) {
    return {config, BasicHeadParams<T>::zeros(shape), BasicHeadParams<T>::zeros(shape), 0};
  }
};

using AdamState = BasicAdamState<float>;

/// One bias-corrected Adam update of every head tensor, in place:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
template <typename T>
void adam_step(BasicHeadParams<T>& params, const BasicHeadGradients<T>& grads,
               BasicAdamState<T>& state);

struct TrainConfig {
  std::size_t max_epochs = 50;
  std::size_t batch_size = 52;
  double early_stop_val_accuracy = 0.88;
  AdamConfig adam;
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument on out-of-range fields.
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double train_accuracy = 0;
  double val_loss = 0;
  double val_accuracy = 0;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct FeatureBatch {
  Tensor features;  // [b,F]
  Tensor labels;    // [b,C] one-hot
};

/// Indexable supply of (feature, one-hot label) samples. Training sources may
/// vary a sample between epochs (augmentation); fetch must be deterministic
/// in (indices, epoch).
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual std::size_t size() const = 0;
  virtual FeatureBatch fetch(std::span<const std::size_t> indices, std::uint64_t epoch) = 0;
};

class InMemoryFeatures final : public FeatureSource {
 public:
  InMemoryFeatures(Tensor features, Tensor labels);

  std::size_t size() const override { return features_.dim(0); }
  FeatureBatch fetch(std::span<const std::size_t> indices, std::uint64_t epoch) override;

  const Tensor& features() const { return features_; }
  const Tensor& labels() const { return labels_; }

 private:
  Tensor features_;
  Tensor labels_;
};

/// Feature caches are BCNW files holding "features" [n,F] and "labels" [n,C].
/// Only meaningful for augmentation-free evaluation and prediction.
void save_feature_cache(const std::filesystem::path& path, const InMemoryFeatures& data);
InMemoryFeatures load_feature_cache(const std::filesystem::path& path);

using EpochCallback = std::function<void(const EpochMetrics&)>;

struct FitResult {
  HeadParams params;
  std::vector<EpochMetrics> history;
  bool stopped_early = false;
};

/// Epoch loop: seeded shuffle, mini-batch Adam, then an update-free pass over
/// the validation source. Stops after the first epoch whose validation
/// accuracy reaches cfg.early_stop_val_accuracy.
FitResult fit(HeadParams initial, FeatureSource& train, FeatureSource& validation,
              const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct Evaluation {
  double loss = 0;
  double accuracy = 0;
  std::size_t samples = 0;
};

/// Mean cross-entropy and argmax accuracy (ties to the lowest class).
Evaluation evaluate(const HeadParams& params, FeatureSource& source, std::size_t batch_size = 52);

/// Same metrics computed directly from probability rows.
Evaluation score_probabilities(const Tensor& probs, const Tensor& labels);

inline constexpr std::array<std::string_view, 3> kGradeLabels{"grade_1", "grade_2", "grade_3"};

struct Prediction {
  std::size_t class_index = 0;
  std::string grade;
  std::vector<float> probabilities;
};

std::vector<Prediction> predict(const HeadParams& params, const Tensor& features);

/// CSV with header epoch,train_loss,train_accuracy,val_loss,val_accuracy and
/// 6 significant digits per value.
void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> history);
void save_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> history);

}  // namespace bcnet
