#pragma once

// Synthetic stand-ins for the real histopathology images and the converted
// pretrained backbone, for tests and smoke runs.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "bcnet/bcnw.hpp"
#include "bcnet/image_io.hpp"

namespace bcnet {

/// Stain-like texture whose blob density and hue depend on the class.
RgbImage synthetic_tissue_image(std::size_t class_index, std::size_t width, std::size_t height,
                                std::uint64_t seed);

struct SyntheticDatasetSpec {
  std::vector<std::string> class_names{"grade_1", "grade_2", "grade_3"};
  std::size_t images_per_class = 4;
  std::size_t width = 96;
  std::size_t height = 72;
  std::uint64_t seed = 7;
  bool jpeg = false;  // PNG otherwise
};

/// Writes <root>/<class>/img_NNN.{png,jpg}. Returns the written paths.
std::vector<std::filesystem::path> write_synthetic_dataset(const std::filesystem::path& root,
                                                           const SyntheticDatasetSpec& spec);

/// Full VGG16 weight set with He-normal kernels and zero biases.
WeightStore random_backbone_weights(std::uint64_t seed);

}  // namespace bcnet
