#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "bcnet/image_io.hpp"
#include "bcnet/rng.hpp"
#include "bcnet/tensor.hpp"

namespace bcnet {

inline constexpr std::size_t kImageSize = 224;

// Per-channel means subtracted by the backbone's input preprocessing, in
// B, G, R order.
inline constexpr std::array<float, 3> kBgrMeans{103.939f, 116.779f, 123.68f};

/// Nearest-neighbour resize; destination pixel i samples source index
/// floor((i + 0.5) * src / dst).
RgbImage resize_nearest(const RgbImage& image, std::size_t width, std::size_t height);

/// RGB image to a [h,w,3] tensor with values 0..255.
Tensor image_to_tensor(const RgbImage& image);

/// [h,w,3] tensor to 8-bit RGB, rounding and clamping to 0..255.
RgbImage tensor_to_image(const Tensor& x);

/// Decode and resize to [224,224,3] RGB in 0..255.
Tensor load_resize(const std::filesystem::path& path);

/// RGB -> BGR, then subtract kBgrMeans per channel. No scaling. Works on any
/// tensor whose last dimension is 3.
Tensor preprocess_vgg(const Tensor& rgb);

/// Exact inverse of preprocess_vgg.
Tensor unpreprocess_vgg(const Tensor& bgr);

struct AugmentConfig {
  double zoom_range = 0.2;
  std::uint64_t seed = 0;
};

struct ZoomFactors {
  double rows = 1.0;
  double cols = 1.0;
};

/// Independent per-axis factors, each uniform in [1 - range, 1 + range].
ZoomFactors sample_zoom(double zoom_range, Rng& rng);

/// Center-anchored zoom of a [h,w,c] tensor: output (r, c) samples input
/// row rows*(r - cy) + cy and column cols*(c - cx) + cx, with cy = h/2 - 0.5
/// and cx = w/2 - 0.5. Nearest sampling; out-of-range coordinates clamp to the
/// nearest edge. Factors above 1 zoom out.
Tensor apply_zoom(const Tensor& x, ZoomFactors zoom);

/// sample_zoom followed by apply_zoom. zoom_range 0 returns x unchanged.
Tensor zoom_augment(const Tensor& x, const AugmentConfig& cfg, Rng& rng);

}  // namespace bcnet
