#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace bcnet {

enum class Subset { train, validation };

const char* to_string(Subset subset);

struct ImageRecord {
  std::filesystem::path path;
  std::size_t class_index = 0;
  Subset subset = Subset::train;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetManifest {
  std::vector<std::string> class_names;
  // Grouped by class, lexicographic within each class.
  std::vector<ImageRecord> records;

  std::vector<std::size_t> class_counts() const;
  std::vector<std::size_t> class_counts(Subset subset) const;
  std::vector<ImageRecord> select(Subset subset) const;
};

/// True for .jpg, .jpeg and .png in any letter case.
bool is_image_file(const std::filesystem::path& path);

/// Layout <root>/<class>/<images>. Classes are sorted and indexed in order;
/// every record starts in the training subset. Throws DataError for a missing
/// root, fewer than two class directories, or a class without images.
DatasetManifest scan_dataset(const std::filesystem::path& root);

/// Per class, the first floor(fraction * n) files become validation and the
/// rest training. Throws std::invalid_argument unless 0 <= fraction < 1.
DatasetManifest split_dataset(const DatasetManifest& manifest, double validation_fraction);

}  // namespace bcnet
