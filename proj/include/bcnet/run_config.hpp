#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "bcnet/augment.hpp"
#include "bcnet/trainer.hpp"

namespace bcnet {

// Every field maps one-to-one to a CLI flag (--batch-size) and to a config
// file key (batch-size=52).
struct RunConfig {
  std::filesystem::path data;
  std::filesystem::path holdout;
  std::filesystem::path weights;
  std::filesystem::path head = "head.bcnw";
  std::filesystem::path metrics = "metrics.csv";

  std::size_t epochs = 50;
  std::size_t batch_size = 52;
  double val_split = 0.25;
  double zoom = 0.2;
  double threshold = 0.88;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::uint64_t seed_shuffle = 0;
  std::uint64_t seed_augment = 0;

  TrainConfig train_config() const;
  AugmentConfig augment_config() const;

  /// Range checks on numeric fields; throws ConfigError.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Flat key=value text accepted back by --config.
std::string to_config_text(const RunConfig& cfg);

}  // namespace bcnet
