#include "bcnet/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "bcnet/backbone.hpp"
#include "bcnet/batches.hpp"
#include "bcnet/dataset.hpp"
#include "bcnet/errors.hpp"
#include "bcnet/feature_source.hpp"
#include "bcnet/head.hpp"
#include "bcnet/rng.hpp"
#include "bcnet/trainer.hpp"

namespace fs = std::filesystem;

namespace bcnet {

namespace {

template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    log << "error: numeric abort: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const WeightFileError& e) {
    log << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    log << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitData;
  }
}

void require_file(const fs::path& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw ConfigError(std::string(flag) + " file not found: " + path.string());
  }
}

void require_dir(const fs::path& path, const char* flag) {
  if (path.empty()) throw ConfigError(std::string(flag) + " is required");
  std::error_code ec;
  if (!fs::is_directory(path, ec)) {
    throw ConfigError(std::string(flag) + " directory not found: " + path.string());
  }
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

int cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    require_dir(cfg.data, "--data");
    require_file(cfg.weights, "--weights");
    if (cfg.head.empty()) throw ConfigError("--head is required");
    if (cfg.metrics.empty()) throw ConfigError("--metrics is required");

    const WeightStore backbone = load_backbone_weights(cfg.weights);
    const DatasetManifest manifest = split_dataset(scan_dataset(cfg.data), cfg.val_split);
    const auto train_counts = manifest.class_counts(Subset::train);
    const auto val_counts = manifest.class_counts(Subset::validation);
    log << "dataset: " << manifest.records.size() << " images in " << manifest.class_names.size()
        << " classes;";
    for (std::size_t c = 0; c < manifest.class_names.size(); ++c) {
      log << ' ' << manifest.class_names[c] << '=' << train_counts[c] << '+' << val_counts[c];
    }
    log << " (train+validation)\n";

    auto train_records = manifest.select(Subset::train);
    auto val_records = manifest.select(Subset::validation);
    if (train_records.empty()) throw DataError("training subset is empty");
    if (val_records.empty()) {
      throw DataError("validation subset is empty (raise --val-split or add images)");
    }
    const std::size_t classes = manifest.class_names.size();
    BackboneFeatureSource train_source(std::move(train_records), classes, backbone,
                                       cfg.augment_config());
    BackboneFeatureSource val_source(std::move(val_records), classes, backbone, std::nullopt);

    const TrainConfig tc = cfg.train_config();
    HeadShape shape;
    shape.classes = classes;
    HeadParams initial = glorot_init(shape, cfg.seed_shuffle);

    const FitResult result = fit(std::move(initial), train_source, val_source, tc,
                                 [&](const EpochMetrics& m) {
                                   log << "epoch " << m.epoch << '/' << tc.max_epochs
                                       << " train_loss=" << fixed6(m.train_loss)
                                       << " train_accuracy=" << fixed6(m.train_accuracy)
                                       << " val_loss=" << fixed6(m.val_loss)
                                       << " val_accuracy=" << fixed6(m.val_accuracy) << '\n';
                                 });
    if (result.stopped_early) {
      log << "early stop: validation accuracy reached " << tc.early_stop_val_accuracy << '\n';
    }
    save_head(cfg.head, result.params);
    save_metrics_csv(cfg.metrics, result.history);
    out << "head=" << cfg.head.string() << " metrics=" << cfg.metrics.string()
        << " epochs=" << result.history.size() << '\n';
    return kExitOk;
  });
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    require_dir(cfg.holdout, "--holdout");
    require_file(cfg.weights, "--weights");
    require_file(cfg.head, "--head");

    const HeadParams head = load_head(cfg.head);
    const WeightStore backbone = load_backbone_weights(cfg.weights);
    const DatasetManifest manifest = scan_dataset(cfg.holdout);
    if (manifest.class_names.size() != head.shape().classes) {
      throw DataError("holdout has " + std::to_string(manifest.class_names.size()) +
                      " classes, head predicts " + std::to_string(head.shape().classes));
    }
    BackboneFeatureSource source(manifest.records, manifest.class_names.size(), backbone,
                                 std::nullopt);
    const Evaluation e = evaluate(head, source, cfg.batch_size);
    log << "evaluated " << e.samples << " images\n";
    out << "loss=" << fixed6(e.loss) << " accuracy=" << fixed6(e.accuracy) << '\n';
    return kExitOk;
  });
}

int cmd_predict(const RunConfig& cfg, const std::vector<std::string>& images, std::ostream& out,
                std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    require_file(cfg.weights, "--weights");
    require_file(cfg.head, "--head");
    if (images.empty()) throw ConfigError("predict needs at least one image path");

    const HeadParams head = load_head(cfg.head);
    const WeightStore backbone = load_backbone_weights(cfg.weights);
    std::size_t failures = 0;
    for (const auto& path : images) {
      try {
        const Tensor f = image_features(prepare_image({path, 0, Subset::validation}, nullptr, 0, 0),
                                        backbone);
        const auto preds = predict(head, reshape(f, {1, f.size()}));
        out << path << ',' << preds[0].grade;
        for (float p : preds[0].probabilities) out << ',' << fixed6(p);
        out << '\n';
      } catch (const DataError& e) {
        ++failures;
        log << "error: " << e.what() << '\n';
      }
    }
    if (failures) {
      log << failures << " of " << images.size() << " images failed\n";
      return static_cast<int>(kExitData);
    }
    return static_cast<int>(kExitOk);
  });
}

int cmd_inspect(const std::string& weights_path, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    require_file(weights_path, "--weights");
    const WeightStore store = load_weights(weights_path);
    for (const auto& [name, t] : store) {
      out << name << ' ';
      for (std::size_t i = 0; i < t.rank(); ++i) out << (i ? "x" : "") << t.dim(i);
      out << ' ' << hex64(tensor_checksum(t)) << '\n';
    }
    return kExitOk;
  });
}

int cmd_preview_augment(const RunConfig& cfg, const PreviewOptions& opts, std::ostream& out,
                        std::ostream& log) {
  return guarded(log, [&] {
    cfg.validate();
    fs::path source = opts.image;
    if (source.empty()) {
      require_dir(cfg.data, "--data");
      const auto records = scan_dataset(cfg.data).records;
      source = records.front().path;
    } else {
      require_file(source, "image");
    }
    const Tensor image = load_resize(source);
    fs::create_directories(opts.out_dir);
    const AugmentConfig augment = cfg.augment_config();
    for (std::size_t i = 0; i < opts.count; ++i) {
      Rng rng(derive_seed(augment.seed, 0x50524556ull /* "PREV" */, i));
      const Tensor zoomed = zoom_augment(image, augment, rng);
      char name[32];
      std::snprintf(name, sizeof name, "augment_%03zu.png", i);
      const fs::path dst = fs::path(opts.out_dir) / name;
      write_png(dst, tensor_to_image(zoomed));
      out << dst.string() << '\n';
    }
    log << "wrote " << opts.count << " previews of " << source.string() << '\n';
    return kExitOk;
  });
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& log) {
  CLI::App app{"Histopathology grading with a frozen VGG16 backbone and a trainable head", "bcnet"};
  app.set_config("--config", "", "Flat key=value file; keys are the long flag names")
      ->check(CLI::ExistingFile);
  app.fallthrough();
  app.require_subcommand(1);

  RunConfig cfg;
  std::string data, holdout, weights, head = cfg.head.string(), metrics = cfg.metrics.string();
  app.add_option("--data", data, "Dataset root, one directory per class");
  app.add_option("--holdout", holdout, "Evaluation holdout root, same layout as --data");
  app.add_option("--weights", weights, "Backbone weights (BCNW)");
  app.add_option("--head", head, "Trained head file (BCNW)")->capture_default_str();
  app.add_option("--metrics", metrics, "Per-epoch metrics CSV")->capture_default_str();
  app.add_option("--epochs", cfg.epochs, "Maximum training epochs")->capture_default_str();
  app.add_option("--batch-size", cfg.batch_size, "Images per batch")->capture_default_str();
  app.add_option("--val-split", cfg.val_split, "Per-class validation fraction")->capture_default_str();
  app.add_option("--zoom", cfg.zoom, "Zoom augmentation range")->capture_default_str();
  app.add_option("--threshold", cfg.threshold, "Early-stop validation accuracy")->capture_default_str();
  app.add_option("--lr", cfg.lr, "Adam learning rate")->capture_default_str();
  app.add_option("--beta1", cfg.beta1, "Adam first-moment decay")->capture_default_str();
  app.add_option("--beta2", cfg.beta2, "Adam second-moment decay")->capture_default_str();
  app.add_option("--epsilon", cfg.epsilon, "Adam epsilon")->capture_default_str();
  app.add_option("--seed-shuffle", cfg.seed_shuffle, "Shuffle and head-init seed")->capture_default_str();
  app.add_option("--seed-augment", cfg.seed_augment, "Augmentation seed")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train the classification head");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a trained head on --holdout");
  auto* predict_cmd = app.add_subcommand("predict", "Grade individual images");
  std::vector<std::string> images;
  predict_cmd->add_option("images", images, "Image files")->required();
  auto* inspect = app.add_subcommand("inspect", "List the tensors of a BCNW file");
  std::string inspect_path;
  inspect->add_option("file", inspect_path, "BCNW file (defaults to --weights)");
  auto* preview = app.add_subcommand("preview-augment", "Write zoom-augmented PNG previews");
  PreviewOptions preview_opts;
  preview->add_option("image", preview_opts.image, "Source image (defaults to the first image under --data)");
  preview->add_option("--count", preview_opts.count, "Number of previews")->capture_default_str();
  preview->add_option("--out", preview_opts.out_dir, "Output directory")->capture_default_str();
  auto* show_config = app.add_subcommand("config", "Print the effective settings as a --config file");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      out << app.help();
      return kExitOk;
    }
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  cfg.data = data;
  cfg.holdout = holdout;
  cfg.weights = weights;
  cfg.head = head;
  cfg.metrics = metrics;

  if (*train) return cmd_train(cfg, out, log);
  if (*evaluate_cmd) return cmd_evaluate(cfg, out, log);
  if (*predict_cmd) return cmd_predict(cfg, images, out, log);
  if (*inspect) return cmd_inspect(inspect_path.empty() ? weights : inspect_path, out, log);
  if (*preview) return cmd_preview_augment(cfg, preview_opts, out, log);
  if (*show_config) {
    out << to_config_text(cfg);
    return kExitOk;
  }
  return kExitConfig;
}

}  // namespace bcnet
