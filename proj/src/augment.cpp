#include "bcnet/augment.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcnet {

namespace {

std::size_t nearest_source(std::size_t dst, std::size_t dst_extent, std::size_t src_extent) {
  const double scale = static_cast<double>(src_extent) / static_cast<double>(dst_extent);
  const auto src = static_cast<std::size_t>(std::floor((static_cast<double>(dst) + 0.5) * scale));
  return std::min(src, src_extent - 1);
}

void expect_rgb(const Tensor& x, const char* what) {
  if (x.dims().back() != 3) {
    throw ShapeError(std::string(what) + ": last dimension must be 3, got " + format_dims(x.dims()));
  }
}

}  // namespace

RgbImage resize_nearest(const RgbImage& image, std::size_t width, std::size_t height) {
  if (image.width == 0 || image.height == 0 || width == 0 || height == 0) {
    throw std::invalid_argument("resize_nearest: empty image or target");
  }
  if (image.width == width && image.height == height) return image;
  RgbImage out(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    const std::size_t sy = nearest_source(y, height, image.height);
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t sx = nearest_source(x, width, image.width);
      std::copy_n(image.at(sx, sy), 3, out.at(x, y));
    }
  }
  return out;
}

Tensor image_to_tensor(const RgbImage& image) {
  std::vector<float> data(image.pixels.begin(), image.pixels.end());
  return Tensor({image.height, image.width, 3}, std::move(data));
}

RgbImage tensor_to_image(const Tensor& x) {
  if (x.rank() != 3) throw ShapeError("tensor_to_image expects [h,w,3], got " + format_dims(x.dims()));
  expect_rgb(x, "tensor_to_image");
  RgbImage out(x.dim(1), x.dim(0));
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(x[i]), 0L, 255L));
  }
  return out;
}

Tensor load_resize(const std::filesystem::path& path) {
  return image_to_tensor(resize_nearest(decode_image(path), kImageSize, kImageSize));
}

Tensor preprocess_vgg(const Tensor& rgb) {
  expect_rgb(rgb, "preprocess_vgg");
  Tensor out(rgb.dims());
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    out[i + 0] = rgb[i + 2] - kBgrMeans[0];
    out[i + 1] = rgb[i + 1] - kBgrMeans[1];
    out[i + 2] = rgb[i + 0] - kBgrMeans[2];
  }
  return out;
}

Tensor unpreprocess_vgg(const Tensor& bgr) {
  expect_rgb(bgr, "unpreprocess_vgg");
  Tensor out(bgr.dims());
  for (std::size_t i = 0; i < bgr.size(); i += 3) {
    out[i + 0] = bgr[i + 2] + kBgrMeans[2];
    out[i + 1] = bgr[i + 1] + kBgrMeans[1];
    out[i + 2] = bgr[i + 0] + kBgrMeans[0];
  }
  return out;
}

ZoomFactors sample_zoom(double zoom_range, Rng& rng) {
  if (!(zoom_range >= 0.0)) throw std::invalid_argument("zoom_range must be >= 0");
  ZoomFactors z;
  z.rows = uniform_real(rng, 1.0 - zoom_range, 1.0 + zoom_range);
  z.cols = uniform_real(rng, 1.0 - zoom_range, 1.0 + zoom_range);
  return z;
}

Tensor apply_zoom(const Tensor& x, ZoomFactors zoom) {
  if (x.rank() != 3) throw ShapeError("apply_zoom expects [h,w,c], got " + format_dims(x.dims()));
  const std::size_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  const double cy = static_cast<double>(h) / 2.0 - 0.5;
  const double cx = static_cast<double>(w) / 2.0 - 0.5;

  auto source_index = [](double coord, std::size_t extent) {
    const double r = std::floor(coord + 0.5);
    return static_cast<std::size_t>(std::clamp(r, 0.0, static_cast<double>(extent - 1)));
  };
  std::vector<std::size_t> cols(w);
  for (std::size_t j = 0; j < w; ++j) {
    cols[j] = source_index(zoom.cols * (static_cast<double>(j) - cx) + cx, w);
  }

  Tensor out(x.dims());
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t sy = source_index(zoom.rows * (static_cast<double>(i) - cy) + cy, h);
    const float* src_row = x.data() + sy * w * c;
    float* dst = out.data() + i * w * c;
    for (std::size_t j = 0; j < w; ++j) std::copy_n(src_row + cols[j] * c, c, dst + j * c);
  }
  return out;
}

Tensor zoom_augment(const Tensor& x, const AugmentConfig& cfg, Rng& rng) {
  if (cfg.zoom_range == 0.0) return x;
  return apply_zoom(x, sample_zoom(cfg.zoom_range, rng));
}

}  // namespace bcnet
