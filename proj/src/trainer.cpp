#include "bcnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "bcnet/rng.hpp"

namespace bcnet {

template <typename T>
void adam_step(BasicHeadParams<T>& params, const BasicHeadGradients<T>& grads,
               BasicAdamState<T>& state) {
  auto p = params.tensors();
  auto g = grads.tensors();
  auto m = state.m.tensors();
  auto v = state.v.tensors();
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (g[i]->dims() != p[i]->dims() || m[i]->dims() != p[i]->dims() ||
        v[i]->dims() != p[i]->dims()) {
      throw ShapeError("adam_step: " + std::string(kHeadTensorNames[i]) + " params " +
                       format_dims(p[i]->dims()) + ", grads " + format_dims(g[i]->dims()) +
                       ", moments " + format_dims(m[i]->dims()) + "/" + format_dims(v[i]->dims()));
    }
  }

  const AdamConfig c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double m_correction = 1.0 - std::pow(c.beta1, t);
  const double v_correction = 1.0 - std::pow(c.beta2, t);
  const double b1 = c.beta1, b2 = c.beta2, lr = c.lr, eps = c.epsilon;
  for (std::size_t i = 0; i < p.size(); ++i) {
    T* __restrict theta = p[i]->data();
    const T* __restrict grad = g[i]->data();
    T* __restrict m1 = m[i]->data();
    T* __restrict m2 = v[i]->data();
    const std::size_t n = p[i]->size();
    for (std::size_t k = 0; k < n; ++k) {
      const double gk = grad[k];
      const double mk = b1 * m1[k] + (1.0 - b1) * gk;
      const double vk = b2 * m2[k] + (1.0 - b2) * gk * gk;
      m1[k] = static_cast<T>(mk);
      m2[k] = static_cast<T>(vk);
      const double m_hat = mk / m_correction;
      const double v_hat = vk / v_correction;
      theta[k] = static_cast<T>(theta[k] - lr * m_hat / (std::sqrt(v_hat) + eps));
    }
  }
  params.version += 1;
}

template void adam_step(BasicHeadParams<float>&, const BasicHeadGradients<float>&,
                        BasicAdamState<float>&);
template void adam_step(BasicHeadParams<double>&, const BasicHeadGradients<double>&,
                        BasicAdamState<double>&);

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(early_stop_val_accuracy >= 0.0 && early_stop_val_accuracy <= 1.0)) {
    throw std::invalid_argument("early_stop_val_accuracy must lie in [0, 1], got " +
                                std::to_string(early_stop_val_accuracy));
  }
  if (!(adam.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw std::invalid_argument("Adam epsilon must be positive");
}

InMemoryFeatures::InMemoryFeatures(Tensor features, Tensor labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.rank() != 2 || labels_.rank() != 2 || features_.dim(0) != labels_.dim(0)) {
    throw ShapeError("InMemoryFeatures: features " + format_dims(features_.dims()) +
                     " and labels " + format_dims(labels_.dims()) + " disagree");
  }
  check_one_hot(labels_);
}

FeatureBatch InMemoryFeatures::fetch(std::span<const std::size_t> indices, std::uint64_t) {
  const std::size_t f = features_.dim(1), c = labels_.dim(1);
  FeatureBatch batch{Tensor({indices.size(), f}), Tensor({indices.size(), c})};
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const std::size_t src = indices[i];
    if (src >= size()) throw std::out_of_range("feature index " + std::to_string(src));
    std::copy_n(features_.data() + src * f, f, batch.features.data() + i * f);
    std::copy_n(labels_.data() + src * c, c, batch.labels.data() + i * c);
  }
  return batch;
}

void save_feature_cache(const std::filesystem::path& path, const InMemoryFeatures& data) {
  WeightStore store;
  store.add("features", data.features());
  store.add("labels", data.labels());
  save_weights(path, store);
}

InMemoryFeatures load_feature_cache(const std::filesystem::path& path) {
  const WeightStore store = load_weights(path);
  return InMemoryFeatures(store.get("features"), store.get("labels"));
}

namespace {

// Sample-weighted running mean of per-batch loss and accuracy.
struct RunningMetrics {
  double loss_sum = 0;
  double correct = 0;
  std::size_t samples = 0;

  void add(const Tensor& probs, const Tensor& labels, double batch_loss) {
    const std::size_t b = probs.dim(0);
    loss_sum += batch_loss * static_cast<double>(b);
    for (std::size_t i = 0; i < b; ++i) {
      if (argmax_row(probs, i) == argmax_row(labels, i)) correct += 1;
    }
    samples += b;
  }

  Evaluation result() const {
    return {loss_sum / static_cast<double>(samples), correct / static_cast<double>(samples),
            samples};
  }
};

std::string where(std::size_t epoch, std::size_t batch) {
  return "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch);
}

}  // namespace

Evaluation score_probabilities(const Tensor& probs, const Tensor& labels) {
  if (probs.rank() != 2 || probs.dims() != labels.dims() || probs.dim(0) == 0) {
    throw ShapeError("score_probabilities: probs " + format_dims(probs.dims()) + " vs labels " +
                     format_dims(labels.dims()));
  }
  RunningMetrics m;
  m.add(probs, labels, cross_entropy(probs, labels));
  return m.result();
}

Evaluation evaluate(const HeadParams& params, FeatureSource& source, std::size_t batch_size) {
  if (source.size() == 0) throw DataError("evaluate: empty stream");
  if (batch_size == 0) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  RunningMetrics m;
  std::vector<std::size_t> indices;
  for (std::size_t start = 0; start < source.size(); start += batch_size) {
    indices.clear();
    for (std::size_t i = start; i < std::min(source.size(), start + batch_size); ++i) {
      indices.push_back(i);
    }
    const FeatureBatch batch = source.fetch(indices, 0);
    const Tensor probs = head_forward(batch.features, params).probs;
    m.add(probs, batch.labels, cross_entropy(probs, batch.labels));
  }
  return m.result();
}

FitResult fit(HeadParams initial, FeatureSource& train, FeatureSource& validation,
              const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train.size() == 0) throw DataError("fit: empty training stream");
  if (validation.size() == 0) throw DataError("fit: empty validation stream");

  FitResult result{std::move(initial), {}, false};
  HeadParams& params = result.params;
  AdamState adam = AdamState::fresh(params.shape(), cfg.adam);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(train.size(), cfg.rng_seed, epoch);
    RunningMetrics train_metrics;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      const std::span<const std::size_t> indices(order.data() + start, stop - start);
      const FeatureBatch batch = train.fetch(indices, epoch);

      HeadOutput<float> out;
      double loss;
      try {
        out = head_forward(batch.features, params);
        loss = cross_entropy(out.probs, batch.labels);
      } catch (const NumericError& e) {
        throw NumericError(std::string("training diverged at ") + where(epoch, batch_index) +
                           ": " + e.what());
      }
      if (!std::isfinite(loss)) {
        throw NumericError("non-finite loss at " + where(epoch, batch_index));
      }
      train_metrics.add(out.probs, batch.labels, loss);
      const HeadGradients grads = head_backward(params, out.cache, batch.labels);
      adam_step(params, grads, adam);
    }

    const Evaluation val = evaluate(params, validation, cfg.batch_size);
    if (!std::isfinite(val.loss)) {
      throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    const Evaluation tr = train_metrics.result();
    const EpochMetrics metrics{epoch, tr.loss, tr.accuracy, val.loss, val.accuracy};
    result.history.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
    if (val.accuracy >= cfg.early_stop_val_accuracy) {
      result.stopped_early = true;
      break;
    }
  }
  return result;
}

std::vector<Prediction> predict(const HeadParams& params, const Tensor& features) {
  const Tensor probs = head_forward(features, params).probs;
  std::vector<Prediction> out;
  out.reserve(probs.dim(0));
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    Prediction p;
    p.class_index = argmax_row(probs, i);
    p.grade = p.class_index < kGradeLabels.size() ? std::string(kGradeLabels[p.class_index])
                                                  : "class_" + std::to_string(p.class_index);
    p.probabilities.assign(probs.data() + i * probs.dim(1), probs.data() + (i + 1) * probs.dim(1));
    out.push_back(std::move(p));
  }
  return out;
}

void write_metrics_csv(std::ostream& out, std::span<const EpochMetrics> history) {
  out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n";
  char line[256];
  for (const auto& m : history) {
    std::snprintf(line, sizeof line, "%zu,%.6g,%.6g,%.6g,%.6g\n", m.epoch, m.train_loss,
                  m.train_accuracy, m.val_loss, m.val_accuracy);
    out << line;
  }
}

void save_metrics_csv(const std::filesystem::path& path, std::span<const EpochMetrics> history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open metrics file " + path.string());
  write_metrics_csv(out, history);
  if (!out) throw std::runtime_error("write failed for metrics file " + path.string());
}

}  // namespace bcnet
