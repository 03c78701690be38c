#include "bcnet/run_config.hpp"

#include <cstdio>
#include <sstream>

#include "bcnet/errors.hpp"

namespace bcnet {

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.max_epochs = epochs;
  t.batch_size = batch_size;
  t.early_stop_val_accuracy = threshold;
  t.adam = {lr, beta1, beta2, epsilon};
  t.rng_seed = seed_shuffle;
  return t;
}

AugmentConfig RunConfig::augment_config() const { return {zoom, seed_augment}; }

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (batch_size < 1) fail("--batch-size must be >= 1");
  if (!(val_split >= 0.0 && val_split < 1.0)) fail("--val-split must lie in [0, 1)");
  if (!(zoom >= 0.0 && zoom < 1.0)) fail("--zoom must lie in [0, 1)");
  // A threshold of 0 is accepted here and means "stop after the first epoch".
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail("--threshold must lie in [0, 1]");
  if (!(lr > 0.0)) fail("--lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("--beta1 must lie in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("--beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) fail("--epsilon must be positive");
}

std::string to_config_text(const RunConfig& cfg) {
  std::ostringstream os;
  auto real = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto path = [](const std::filesystem::path& p) { return "\"" + p.string() + "\""; };
  os << "data=" << path(cfg.data) << '\n'
     << "holdout=" << path(cfg.holdout) << '\n'
     << "weights=" << path(cfg.weights) << '\n'
     << "head=" << path(cfg.head) << '\n'
     << "metrics=" << path(cfg.metrics) << '\n'
     << "epochs=" << cfg.epochs << '\n'
     << "batch-size=" << cfg.batch_size << '\n'
     << "val-split=" << real(cfg.val_split) << '\n'
     << "zoom=" << real(cfg.zoom) << '\n'
     << "threshold=" << real(cfg.threshold) << '\n'
     << "lr=" << real(cfg.lr) << '\n'
     << "beta1=" << real(cfg.beta1) << '\n'
     << "beta2=" << real(cfg.beta2) << '\n'
     << "epsilon=" << real(cfg.epsilon) << '\n'
     << "seed-shuffle=" << cfg.seed_shuffle << '\n'
     << "seed-augment=" << cfg.seed_augment << '\n';
  return os.str();
}

}  // namespace bcnet
