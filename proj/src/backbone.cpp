#include "bcnet/backbone.hpp"

#include <algorithm>
#include <vector>

namespace bcnet {

namespace {

// Upper bound on im2col scratch, in floats (16 MiB).
constexpr std::size_t kIm2colBudget = std::size_t{4} << 20;

}  // namespace

Tensor conv2d_same(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  if (x.rank() != 4 || kernel.rank() != 4 || bias.rank() != 1) {
    throw ShapeError("conv2d_same expects x rank 4, kernel rank 4, bias rank 1; got " +
                     format_dims(x.dims()) + ", " + format_dims(kernel.dims()) + ", " +
                     format_dims(bias.dims()));
  }
  const std::size_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), cin = x.dim(3);
  const std::size_t kh = kernel.dim(0), kw = kernel.dim(1), cout = kernel.dim(3);
  if (kernel.dim(2) != cin) {
    throw ShapeError("conv2d_same channel mismatch: input " + format_dims(x.dims()) +
                     ", kernel " + format_dims(kernel.dims()));
  }
  if (kh % 2 == 0 || kw % 2 == 0) {
    throw ShapeError("conv2d_same needs odd kernel extents, got " + format_dims(kernel.dims()));
  }
  if (bias.dim(0) != cout) {
    throw ShapeError("conv2d_same bias " + format_dims(bias.dims()) + " does not match kernel " +
                     format_dims(kernel.dims()));
  }

  const long pad_y = static_cast<long>(kh / 2), pad_x = static_cast<long>(kw / 2);
  const std::size_t patch = kh * kw * cin;
  const std::size_t rows_per_chunk =
      std::clamp<std::size_t>(kIm2colBudget / std::max<std::size_t>(1, w * patch), 1, h);

  Tensor out({batch, h, w, cout});
  std::vector<float> cols(rows_per_chunk * w * patch);
  std::vector<float> acc(rows_per_chunk * w * cout);

  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t y0 = 0; y0 < h; y0 += rows_per_chunk) {
      const std::size_t rows = std::min(rows_per_chunk, h - y0);
      // im2col: one row per output pixel, columns ordered (dy, dx, c) to
      // match the kernel's [kh,kw,cin] prefix.
      float* dst = cols.data();
      for (std::size_t y = y0; y < y0 + rows; ++y) {
        for (std::size_t xo = 0; xo < w; ++xo) {
          for (std::size_t dy = 0; dy < kh; ++dy) {
            const long sy = static_cast<long>(y + dy) - pad_y;
            for (std::size_t dx = 0; dx < kw; ++dx) {
              const long sx = static_cast<long>(xo + dx) - pad_x;
              if (sy < 0 || sy >= static_cast<long>(h) || sx < 0 || sx >= static_cast<long>(w)) {
                std::fill(dst, dst + cin, 0.0f);
              } else {
                const float* src = &x.at(b, static_cast<std::size_t>(sy),
                                         static_cast<std::size_t>(sx), 0);
                std::copy(src, src + cin, dst);
              }
              dst += cin;
            }
          }
        }
      }
      const std::size_t m = rows * w;
      gemm(cols.data(), kernel.data(), acc.data(), m, patch, cout);
      float* o = &out.at(b, y0, 0, 0);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < cout; ++c) o[i * cout + c] = acc[i * cout + c] + bias[c];
      }
    }
  }
  return out;
}

Tensor maxpool_2x2(const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("maxpool_2x2 expects rank 4, got " + format_dims(x.dims()));
  const std::size_t batch = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (h < 2 || w < 2) {
    throw ShapeError("maxpool_2x2 needs spatial extent >= 2, got " + format_dims(x.dims()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({batch, oh, ow, c});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xo = 0; xo < ow; ++xo) {
        const float* p00 = &x.at(b, 2 * y, 2 * xo, 0);
        const float* p01 = &x.at(b, 2 * y, 2 * xo + 1, 0);
        const float* p10 = &x.at(b, 2 * y + 1, 2 * xo, 0);
        const float* p11 = &x.at(b, 2 * y + 1, 2 * xo + 1, 0);
        float* o = &out.at(b, y, xo, 0);
        for (std::size_t k = 0; k < c; ++k) {
          o[k] = std::max(std::max(p00[k], p01[k]), std::max(p10[k], p11[k]));
        }
      }
    }
  }
  return out;
}

std::string ConvLayer::name() const {
  return "block" + std::to_string(block) + "_conv" + std::to_string(index);
}

void validate_backbone(const WeightStore& store) {
  for (const auto& layer : kVgg16Layers) {
    const std::pair<std::string, Dims> expected[] = {
        {layer.kernel_name(), layer.kernel_dims()},
        {layer.bias_name(), layer.bias_dims()},
    };
    for (const auto& [name, dims] : expected) {
      const Tensor* t = store.find(name);
      if (!t) throw WeightFileError(WeightErrorKind::missing_tensor, name, "backbone incomplete");
      if (t->dims() != dims) {
        throw WeightFileError(WeightErrorKind::shape_mismatch, name,
                              "expected " + format_dims(dims) + ", got " + format_dims(t->dims()));
      }
    }
  }
}

WeightStore load_backbone_weights(const std::filesystem::path& path) {
  WeightStore store = load_weights(path);
  validate_backbone(store);
  return store;
}

Tensor vgg16_forward(const Tensor& x, const WeightStore& weights) {
  if (x.rank() != 4 || x.dim(1) != kVggInputSize || x.dim(2) != kVggInputSize || x.dim(3) != 3) {
    throw ShapeError("vgg16_forward expects [b,224,224,3], got " + format_dims(x.dims()));
  }
  validate_backbone(weights);
  Tensor act = x;
  for (const auto& layer : kVgg16Layers) {
    act = conv2d_same(act, weights.get(layer.kernel_name()), weights.get(layer.bias_name()));
    for (auto& v : act.values()) v = v < 0.0f ? 0.0f : v;
    if (layer.pool_after) act = maxpool_2x2(act);
  }
  return act;
}

}  // namespace bcnet
