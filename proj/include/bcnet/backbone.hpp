#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>

#include "bcnet/bcnw.hpp"
#include "bcnet/tensor.hpp"

namespace bcnet {

/// Stride-1 cross-correlation with zero "same" padding and per-channel bias.
/// x: [b,h,w,cin], kernel: [kh,kw,cin,cout] with odd kh and kw, bias: [cout].
Tensor conv2d_same(const Tensor& x, const Tensor& kernel, const Tensor& bias);

/// 2x2 max pool, stride 2. A trailing odd row or column is dropped.
Tensor maxpool_2x2(const Tensor& x);

struct ConvLayer {
  int block;  // 1..5
  int index;  // position within the block, 1-based
  std::size_t in_channels;
  std::size_t out_channels;
  bool pool_after;

  std::string name() const;
  std::string kernel_name() const { return name() + "/kernel"; }
  std::string bias_name() const { return name() + "/bias"; }
  Dims kernel_dims() const { return {3, 3, in_channels, out_channels}; }
  Dims bias_dims() const { return {out_channels}; }
};

// VGG16 configuration D without the classifier: 13 3x3 convs, a 2x2 pool
// closing each of the 5 blocks.
inline constexpr std::array<ConvLayer, 13> kVgg16Layers{{
    {1, 1, 3, 64, false},
    {1, 2, 64, 64, true},
    {2, 1, 64, 128, false},
    {2, 2, 128, 128, true},
    {3, 1, 128, 256, false},
    {3, 2, 256, 256, false},
    {3, 3, 256, 256, true},
    {4, 1, 256, 512, false},
    {4, 2, 512, 512, false},
    {4, 3, 512, 512, true},
    {5, 1, 512, 512, false},
    {5, 2, 512, 512, false},
    {5, 3, 512, 512, true},
}};

inline constexpr std::size_t kVggInputSize = 224;
inline constexpr std::size_t kVggOutputSize = 7;
inline constexpr std::size_t kVggFeatureChannels = 512;

/// Throws WeightFileError (missing_tensor / shape_mismatch) unless the store
/// carries every VGG16 kernel and bias with the configured shape.
void validate_backbone(const WeightStore& store);

/// load_weights followed by validate_backbone.
WeightStore load_backbone_weights(const std::filesystem::path& path);

/// x: [b,224,224,3] preprocessed BGR input. Returns [b,7,7,512].
Tensor vgg16_forward(const Tensor& x, const WeightStore& weights);

}  // namespace bcnet
