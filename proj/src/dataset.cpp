#include "bcnet/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "bcnet/errors.hpp"

namespace fs = std::filesystem;

namespace bcnet {

const char* to_string(Subset subset) {
  return subset == Subset::train ? "train" : "validation";
}

std::vector<std::size_t> DatasetManifest::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& r : records) ++counts.at(r.class_index);
  return counts;
}

std::vector<std::size_t> DatasetManifest::class_counts(Subset subset) const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& r : records) {
    if (r.subset == subset) ++counts.at(r.class_index);
  }
  return counts;
}

std::vector<ImageRecord> DatasetManifest::select(Subset subset) const {
  std::vector<ImageRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [subset](const ImageRecord& r) { return r.subset == subset; });
  return out;
}

bool is_image_file(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".jpg" || ext == ".jpeg" || ext == ".png";
}

DatasetManifest scan_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw DataError("dataset root not found: " + root.string());

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (class_dirs.size() < 2) {
    throw DataError("dataset root " + root.string() + " needs at least 2 class directories, found " +
                    std::to_string(class_dirs.size()));
  }

  DatasetManifest m;
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[c])) {
      if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
    const std::string name = class_dirs[c].filename().string();
    if (files.empty()) throw DataError("class '" + name + "' has no images");
    m.class_names.push_back(name);
    for (auto& f : files) m.records.push_back({std::move(f), c, Subset::train});
  }
  return m;
}

DatasetManifest split_dataset(const DatasetManifest& manifest, double validation_fraction) {
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation fraction must lie in [0, 1), got " +
                                std::to_string(validation_fraction));
  }
  DatasetManifest out = manifest;
  const auto counts = manifest.class_counts();
  std::vector<std::size_t> seen(counts.size(), 0);
  for (auto& r : out.records) {
    const auto cutoff =
        static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(counts[r.class_index])));
    r.subset = seen[r.class_index]++ < cutoff ? Subset::validation : Subset::train;
  }
  return out;
}

}  // namespace bcnet
