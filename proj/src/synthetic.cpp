#include "bcnet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "bcnet/backbone.hpp"
#include "bcnet/rng.hpp"

namespace fs = std::filesystem;

namespace bcnet {

RgbImage synthetic_tissue_image(std::size_t class_index, std::size_t width, std::size_t height,
                                std::uint64_t seed) {
  Rng rng(derive_seed(seed, class_index, 0x54495353ull /* "TISS" */));
  RgbImage img(width, height);

  // Eosin-pink background, hematoxylin-purple nuclei. Higher grades get more,
  // larger and darker nuclei.
  const double bg[3] = {232.0 - 12.0 * static_cast<double>(class_index), 182.0, 206.0};
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const double v = bg[c] + 10.0 * standard_normal(rng);
        img.at(x, y)[c] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  const std::size_t area = width * height;
  const std::size_t blobs = (class_index + 1) * std::max<std::size_t>(1, area / 600);
  const double base_radius = (1.5 + static_cast<double>(class_index)) *
                             static_cast<double>(std::min(width, height)) / 48.0;
  const double darkness = 0.45 + 0.15 * static_cast<double>(class_index);
  const double nucleus[3] = {110.0, 60.0, 150.0};
  for (std::size_t n = 0; n < blobs; ++n) {
    const double cx = uniform_real(rng, 0.0, static_cast<double>(width));
    const double cy = uniform_real(rng, 0.0, static_cast<double>(height));
    const double r = base_radius * uniform_real(rng, 0.7, 1.3);
    const auto x0 = static_cast<long>(std::floor(cx - r)), x1 = static_cast<long>(std::ceil(cx + r));
    const auto y0 = static_cast<long>(std::floor(cy - r)), y1 = static_cast<long>(std::ceil(cy + r));
    for (long y = std::max(0L, y0); y <= std::min<long>(static_cast<long>(height) - 1, y1); ++y) {
      for (long x = std::max(0L, x0); x <= std::min<long>(static_cast<long>(width) - 1, x1); ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        if (dx * dx + dy * dy > r * r) continue;
        std::uint8_t* px = img.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
        for (std::size_t c = 0; c < 3; ++c) {
          px[c] = static_cast<std::uint8_t>(
              std::clamp(px[c] * (1.0 - darkness) + nucleus[c] * darkness, 0.0, 255.0));
        }
      }
    }
  }
  return img;
}

std::vector<fs::path> write_synthetic_dataset(const fs::path& root, const SyntheticDatasetSpec& spec) {
  std::vector<fs::path> written;
  for (std::size_t c = 0; c < spec.class_names.size(); ++c) {
    const fs::path dir = root / spec.class_names[c];
    fs::create_directories(dir);
    for (std::size_t i = 0; i < spec.images_per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "img_%03zu.%s", i, spec.jpeg ? "jpg" : "png");
      const RgbImage img =
          synthetic_tissue_image(c, spec.width, spec.height, derive_seed(spec.seed, c, i));
      const fs::path path = dir / name;
      if (spec.jpeg) {
        write_jpeg(path, img);
      } else {
        write_png(path, img);
      }
      written.push_back(path);
    }
  }
  return written;
}

WeightStore random_backbone_weights(std::uint64_t seed) {
  WeightStore store;
  for (const auto& layer : kVgg16Layers) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(layer.block), static_cast<std::uint64_t>(layer.index)));
    Tensor kernel(layer.kernel_dims());
    const double stddev = std::sqrt(2.0 / static_cast<double>(9 * layer.in_channels));
    for (auto& v : kernel.values()) v = static_cast<float>(stddev * standard_normal(rng));
    store.add(layer.kernel_name(), std::move(kernel));
    store.add(layer.bias_name(), Tensor(layer.bias_dims()));
  }
  return store;
}

}  // namespace bcnet
