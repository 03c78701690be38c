#pragma once

// Trainable classification head: global average pooling over backbone
// features, then dense(1024)+relu, dense(1024)+relu, dense(3)+softmax.
// Everything is templated on the scalar so gradient checks can run at
// 64-bit; training uses the float instantiation.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bcnet/bcnw.hpp"
#include "bcnet/tensor.hpp"

namespace bcnet {

struct HeadShape {
  std::size_t features = 512;
  std::size_t hidden1 = 1024;
  std::size_t hidden2 = 1024;
  std::size_t classes = 3;

  std::size_t parameter_count() const {
    return features * hidden1 + hidden1 + hidden1 * hidden2 + hidden2 + hidden2 * classes + classes;
  }
  friend bool operator==(const HeadShape&, const HeadShape&) = default;
};

inline constexpr std::array<std::string_view, 6> kHeadTensorNames{"W1", "b1", "W2",
                                                                 "b2", "W3", "b3"};

template <typename T>
struct BasicHeadParams {
  BasicTensor<T> w1, b1, w2, b2, w3, b3;
  // Bumped by every optimizer step; forward caches remember it so a
  // backward pass against updated parameters is rejected.
  std::uint64_t version = 0;

  static BasicHeadParams zeros(const HeadShape& shape);

  HeadShape shape() const;
  std::size_t parameter_count() const;

  std::array<BasicTensor<T>*, 6> tensors() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
  std::array<const BasicTensor<T>*, 6> tensors() const { return {&w1, &b1, &w2, &b2, &w3, &b3}; }
};

using HeadParams = BasicHeadParams<float>;

// Gradients have exactly the parameter layout.
template <typename T>
using BasicHeadGradients = BasicHeadParams<T>;
using HeadGradients = BasicHeadGradients<float>;

/// Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases.
HeadParams glorot_init(const HeadShape& shape, std::uint64_t seed);

/// x: [b,h,w,c] -> [b,c], mean over the spatial positions.
template <typename T>
BasicTensor<T> gap(const BasicTensor<T>& x);

template <typename T>
struct HeadCache {
  BasicTensor<T> features;  // [b,F]
  BasicTensor<T> hidden1;   // post-relu [b,H1]
  BasicTensor<T> hidden2;   // post-relu [b,H2]
  BasicTensor<T> probs;     // [b,C]
  std::uint64_t params_version = 0;
};

template <typename T>
struct HeadOutput {
  BasicTensor<T> probs;
  HeadCache<T> cache;
};

template <typename T>
HeadOutput<T> head_forward(const BasicTensor<T>& features, const BasicHeadParams<T>& params);

/// Mean categorical cross-entropy with probabilities clamped at 1e-12.
/// Throws std::invalid_argument unless every label row is one-hot.
template <typename T>
double cross_entropy(const BasicTensor<T>& probs, const BasicTensor<T>& labels);

/// Exact gradients of cross_entropy with respect to every head tensor.
/// The cache must come from head_forward on these same params.
template <typename T>
BasicHeadGradients<T> head_backward(const BasicHeadParams<T>& params, const HeadCache<T>& cache,
                                    const BasicTensor<T>& labels);

/// Row argmax; ties go to the lowest index.
template <typename T>
std::size_t argmax_row(const BasicTensor<T>& x, std::size_t row);

/// Throws std::invalid_argument unless each row has a single 1 and zeros elsewhere.
template <typename T>
void check_one_hot(const BasicTensor<T>& labels);

// Persistence as BCNW tensors head/W1 .. head/b3.
WeightStore head_to_store(const HeadParams& params);
HeadParams head_from_store(const WeightStore& store);
void save_head(const std::filesystem::path& path, const HeadParams& params);
HeadParams load_head(const std::filesystem::path& path);

}  // namespace bcnet
