// Writes synthetic fixtures: a class-per-directory image dataset, a random
// VGG16 weight set, and heads (zero or Glorot-initialized).

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bcnet/bcnw.hpp"
#include "bcnet/head.hpp"
#include "bcnet/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic fixture generator", "bcnet_fixture"};
  app.require_subcommand(1);

  bcnet::SyntheticDatasetSpec spec;
  std::string dataset_root;
  auto* dataset = app.add_subcommand("dataset", "Write a synthetic image dataset");
  dataset->add_option("root", dataset_root, "Output root")->required();
  dataset->add_option("--per-class", spec.images_per_class)->capture_default_str();
  dataset->add_option("--width", spec.width)->capture_default_str();
  dataset->add_option("--height", spec.height)->capture_default_str();
  dataset->add_option("--seed", spec.seed)->capture_default_str();
  dataset->add_flag("--jpeg", spec.jpeg, "Write JPEG instead of PNG");

  std::string weights_out;
  std::uint64_t weights_seed = 1;
  auto* weights = app.add_subcommand("weights", "Write a random VGG16 weight set");
  weights->add_option("out", weights_out, "Output BCNW file")->required();
  weights->add_option("--seed", weights_seed)->capture_default_str();

  std::string head_out;
  std::uint64_t head_seed = 0;
  bool zero_head = false;
  std::size_t classes = 3;
  auto* head = app.add_subcommand("head", "Write an untrained head");
  head->add_option("out", head_out, "Output BCNW file")->required();
  head->add_flag("--zero", zero_head, "All-zero parameters");
  head->add_option("--seed", head_seed)->capture_default_str();
  head->add_option("--classes", classes)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dataset) {
      const auto paths = bcnet::write_synthetic_dataset(dataset_root, spec);
      std::cout << "wrote " << paths.size() << " images under " << dataset_root << '\n';
    } else if (*weights) {
      bcnet::save_weights(weights_out, bcnet::random_backbone_weights(weights_seed));
      std::cout << "wrote " << weights_out << '\n';
    } else if (*head) {
      bcnet::HeadShape shape;
      shape.classes = classes;
      const auto params = zero_head ? bcnet::HeadParams::zeros(shape) : bcnet::glorot_init(shape, head_seed);
      bcnet::save_head(head_out, params);
      std::cout << "wrote " << head_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
