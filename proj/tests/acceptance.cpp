// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "bcnet/backbone.hpp"
#include "bcnet/bcnw.hpp"
#include "bcnet/commands.hpp"
#include "bcnet/head.hpp"
#include "bcnet/run_config.hpp"
#include "bcnet/synthetic.hpp"
#include "bcnet/trainer.hpp"
#include "oracles.hpp"

using namespace bcnet;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& check, double time_limit_s = 0) {
  const auto start = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (time_limit_s > 0 && secs >= time_limit_s) {
    o.require(false, "took " + std::to_string(secs) + " s, limit " + std::to_string(time_limit_s) + " s");
  }
  if (!o.pass) ++failures;
  std::printf("%s %-24s %6.2fs  %s\n", o.pass ? "PASS" : "FAIL", name, secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome kernel_oracles() {
  constexpr int kInstances = 100;
  Outcome o;
  Rng rng(2024);
  double worst = 0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t m = oracle::random_dim(rng, 1, 8), k = oracle::random_dim(rng, 1, 8),
                      n = oracle::random_dim(rng, 1, 8);
    const Tensor a = oracle::random_tensor({m, k}, rng), b = oracle::random_tensor({k, n}, rng);
    worst = std::max(worst, oracle::max_abs_diff(matmul(a, b),
                                                 oracle::matmul({a.values().begin(), a.values().end()},
                                                                {b.values().begin(), b.values().end()}, m, k, n)));
  }
  o.require(worst <= 1e-5, "matmul max abs " + fmt("%.3g", worst));
  const double matmul_worst = worst;

  worst = 0;
  for (int i = 0; i < kInstances; ++i) {
    const std::size_t b = oracle::random_dim(rng, 1, 3), h = oracle::random_dim(rng, 1, 8),
                      w = oracle::random_dim(rng, 1, 8), cin = oracle::random_dim(rng, 1, 8),
                      cout = oracle::random_dim(rng, 1, 8);
    const Tensor x = oracle::random_tensor({b, h, w, cin}, rng);
    const Tensor kernel = oracle::random_tensor({3, 3, cin, cout}, rng);
    const Tensor bias = oracle::random_tensor({cout}, rng);
    worst = std::max(worst, oracle::max_abs_diff(conv2d_same(x, kernel, bias),
                                                 oracle::conv2d_same(x, kernel, bias)));
  }
  o.require(worst <= 1e-5, "conv2d_same max abs " + fmt("%.3g", worst));
  const double conv_worst = worst;

  worst = 0;
  for (int i = 0; i < kInstances; ++i) {
    const Tensor x = oracle::random_tensor({oracle::random_dim(rng, 1, 3), oracle::random_dim(rng, 2, 8),
                                            oracle::random_dim(rng, 2, 8), oracle::random_dim(rng, 1, 8)},
                                           rng);
    worst = std::max(worst, oracle::max_abs_diff(maxpool_2x2(x), oracle::maxpool_2x2(x)));
  }
  o.require(worst <= 1e-5, "maxpool_2x2 max abs " + fmt("%.3g", worst));
  const double pool_worst = worst;

  worst = 0;
  for (int i = 0; i < kInstances; ++i) {
    const Tensor x = oracle::random_tensor({oracle::random_dim(rng, 1, 3), oracle::random_dim(rng, 1, 8),
                                            oracle::random_dim(rng, 1, 8), oracle::random_dim(rng, 1, 8)},
                                           rng);
    worst = std::max(worst, oracle::max_abs_diff(gap(x), oracle::gap(x)));
  }
  o.require(worst <= 1e-5, "gap max abs " + fmt("%.3g", worst));
  if (o.pass) {
    o.detail = "4 x " + std::to_string(kInstances) + " instances; max abs matmul " + fmt("%.2g", matmul_worst) +
               ", conv " + fmt("%.2g", conv_worst) + ", pool " + fmt("%.2g", pool_worst) + ", gap " +
               fmt("%.2g", worst);
  }
  return o;
}

Outcome gradient_check() {
  constexpr int kHeads = 20;
  Outcome o;
  Rng rng(77);
  double worst = 0;
  for (int trial = 0; trial < kHeads; ++trial) {
    const HeadShape s{oracle::random_dim(rng, 2, 6), oracle::random_dim(rng, 2, 7),
                      oracle::random_dim(rng, 2, 7), oracle::random_dim(rng, 2, 4)};
    const std::size_t b = oracle::random_dim(rng, 1, 5);
    auto p = BasicHeadParams<double>::zeros(s);
    for (auto* t : p.tensors())
      for (auto& v : t->values()) v = uniform_real(rng, -0.8, 0.8);
    const Tensor64 f = oracle::random_tensor64({b, s.features}, rng, -1.5, 1.5);
    Tensor64 y({b, s.classes});
    for (std::size_t i = 0; i < b; ++i) y.at(i, uniform_index(rng, s.classes)) = 1.0;

    const auto g = head_backward(p, head_forward(f, p).cache, y);
    const double h = 1e-5;
    auto params = p.tensors();
    auto grads = g.tensors();
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t i = 0; i < params[t]->size(); ++i) {
        const double orig = (*params[t])[i];
        (*params[t])[i] = orig + h;
        const double up = oracle::head_loss(p, f, y);
        (*params[t])[i] = orig - h;
        const double down = oracle::head_loss(p, f, y);
        (*params[t])[i] = orig;
        const double numeric = (up - down) / (2 * h);
        const double analytic = (*grads[t])[i];
        const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic) / scale);
      }
    }
  }
  o.require(worst <= 1e-4, "max relative error " + fmt("%.3g", worst));
  if (o.pass) o.detail = std::to_string(kHeads) + " heads, max relative error " + fmt("%.2g", worst);
  return o;
}

Outcome adam_unit() {
  Outcome o;
  const HeadShape s{1, 1, 1, 1};
  auto p = BasicHeadParams<double>::zeros(s), g = BasicHeadParams<double>::zeros(s);
  for (auto* t : p.tensors()) (*t)[0] = 1.0;
  for (auto* t : g.tensors()) (*t)[0] = 2.0;
  auto state = BasicAdamState<double>::fresh(s);
  adam_step(p, g, state);
  const double want = 1.0 - 1e-3 * 2.0 / (2.0 + 1e-7);
  double err = 0;
  for (const auto* t : p.tensors()) err = std::max(err, std::abs((*t)[0] - want));
  o.require(err <= 1e-9, "scalar first step off by " + fmt("%.3g", err));

  const HeadShape small{3, 4, 4, 3};
  HeadParams q = glorot_init(small, 2);
  const HeadParams before = q;
  auto zero_state = AdamState::fresh(small);
  adam_step(q, HeadGradients::zeros(small), zero_state);
  bool unchanged = true;
  for (std::size_t t = 0; t < 6; ++t) unchanged = unchanged && (*q.tensors()[t] == *before.tensors()[t]);
  o.require(unchanged, "zero gradient changed parameters");

  Rng rng(5);
  double biggest = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto r = BasicHeadParams<double>::zeros(small), gr = BasicHeadParams<double>::zeros(small);
    for (auto* t : gr.tensors())
      for (auto& v : t->values()) v = uniform_real(rng, -100, 100);
    auto st = BasicAdamState<double>::fresh(small);
    adam_step(r, gr, st);
    for (const auto* t : r.tensors())
      for (double v : t->values()) biggest = std::max(biggest, std::abs(v));
  }
  o.require(biggest <= 1e-3, "first-step magnitude " + fmt("%.6g", biggest) + " exceeds lr");
  if (o.pass) o.detail = "scalar error " + fmt("%.2g", err) + ", max first-step |delta| " + fmt("%.6g", biggest);
  return o;
}

Outcome overfit() {
  Outcome o;
  Rng rng(12);
  Tensor x = oracle::random_tensor({10, 512}, rng, 0.0, 2.0);
  Tensor y({10, 3});
  for (std::size_t i = 0; i < 10; ++i) y.at(i, i % 3) = 1.0f;
  InMemoryFeatures data(x, y);
  // Validation that can never reach the threshold, so all 500 epochs run.
  InMemoryFeatures clash(Tensor::filled({2, 512}, 1.0f), Tensor({2, 3}, {1, 0, 0, 0, 1, 0}));
  TrainConfig cfg;
  cfg.max_epochs = 500;
  const FitResult r = fit(glorot_init(HeadShape{}, 7), data, clash, cfg);
  std::size_t reached = 0;
  for (const auto& m : r.history) {
    if (m.train_loss < 0.01) {
      reached = m.epoch;
      break;
    }
  }
  o.require(reached > 0, "train loss never fell below 0.01");
  if (o.pass) o.detail = "train loss < 0.01 at epoch " + std::to_string(reached);
  return o;
}

InMemoryFeatures blobs(const std::array<std::size_t, 3>& counts, Rng& rng, const std::vector<Tensor>& centres) {
  const std::size_t n = counts[0] + counts[1] + counts[2], dims = centres[0].size();
  Tensor x({n, dims}), y({n, 3});
  std::size_t row = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < counts[c]; ++i, ++row) {
      for (std::size_t j = 0; j < dims; ++j) {
        x.at(row, j) = centres[c][j] + static_cast<float>(0.5 * standard_normal(rng));
      }
      y.at(row, c) = 1.0f;
    }
  }
  return InMemoryFeatures(std::move(x), std::move(y));
}

Outcome convergence() {
  Outcome o;
  Rng rng(1);
  std::vector<Tensor> centres;
  for (int c = 0; c < 3; ++c) centres.push_back(oracle::random_tensor({512}, rng, 0.0, 3.0));
  InMemoryFeatures train = blobs({20, 20, 20}, rng, centres), val = blobs({7, 7, 6}, rng, centres);

  TrainConfig run_all;
  run_all.max_epochs = 200;
  run_all.early_stop_val_accuracy = 1.0;
  double best = 0;
  for (const auto& m : fit(glorot_init(HeadShape{}, 3), train, val, run_all).history) {
    best = std::max(best, m.val_accuracy);
  }
  o.require(best >= 0.95, "best validation accuracy " + fmt("%.4f", best));

  TrainConfig stop;
  stop.max_epochs = 200;
  stop.early_stop_val_accuracy = 0.95;
  const FitResult r = fit(glorot_init(HeadShape{}, 3), train, val, stop);
  o.require(r.stopped_early && r.history.back().val_accuracy >= 0.95, "early stop did not fire at 0.95");
  if (o.pass) {
    o.detail = "60/20 blobs, best val accuracy " + fmt("%.3f", best) + "; early stop at epoch " +
               std::to_string(r.history.size());
  }
  return o;
}

Outcome preprocessing() {
  Outcome o;
  struct Case {
    std::array<float, 3> rgb;
    std::array<double, 3> bgr;
  };
  const Case cases[] = {{{255, 255, 255}, {151.061, 138.221, 131.32}},
                        {{0, 0, 0}, {-103.939, -116.779, -123.68}},
                        {{255, 0, 0}, {-103.939, -116.779, 131.32}}};
  double worst = 0;
  for (const auto& c : cases) {
    const Tensor out = preprocess_vgg(Tensor({1, 3}, {c.rgb[0], c.rgb[1], c.rgb[2]}));
    for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(out[k] - c.bgr[k]));
  }
  o.require(worst <= 1e-3, "max deviation " + fmt("%.3g", worst));
  // Channel swap: a pure blue pixel lands in the first channel.
  const Tensor blue = preprocess_vgg(Tensor({1, 3}, {0, 0, 255}));
  o.require(std::abs(blue[0] - (255 - 103.939)) <= 1e-3, "blue not in channel 0");
  if (o.pass) o.detail = "white/black/red within " + fmt("%.2g", worst) + ", channel swap verified";
  return o;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome pipeline_determinism() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / "bcnet_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const fs::path weights = root / "vgg16.bcnw";
  save_weights(weights, random_backbone_weights(3));
  SyntheticDatasetSpec spec;
  spec.images_per_class = 2;
  spec.width = 64;
  spec.height = 48;
  write_synthetic_dataset(root / "data", spec);

  std::string csv[2], head[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path h = root / ("head" + std::to_string(run) + ".bcnw");
    const fs::path m = root / ("metrics" + std::to_string(run) + ".csv");
    std::ostringstream out, log;
    const int code = run_cli({"--data", (root / "data").string(), "--weights", weights.string(), "--head",
                              h.string(), "--metrics", m.string(), "--val-split", "0.5", "--epochs", "2",
                              "--threshold", "1", "--seed-shuffle", "5", "--seed-augment", "6", "train"},
                             out, log);
    o.require(code == kExitOk, "train exit " + std::to_string(code) + ": " + log.str());
    csv[run] = slurp(m);
    head[run] = slurp(h);
  }
  o.require(!csv[0].empty() && csv[0] == csv[1], "metrics CSV differs between runs");
  o.require(!head[0].empty() && head[0] == head[1], "head file differs between runs");
  if (o.pass) {
    o.detail = "2 runs x 2 epochs with zoom augmentation; CSV " + std::to_string(csv[0].size()) +
               " B and head " + std::to_string(head[0].size()) + " B byte-identical";
  }
  fs::remove_all(root);
  return o;
}

std::vector<std::uint8_t> hand_built() {
  return {'B', 'C', 'N', 'W', 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 't', 1, 2, 0, 0, 0,
          0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x00, 0x40};
}

Outcome format() {
  Outcome o;
  const WeightStore s = decode_weights(hand_built());
  o.require(s.size() == 1 && s.get("t") == Tensor({2}, {1.0f, 2.0f}), "hand-built file misread");

  auto kind_of = [](std::vector<std::uint8_t> bytes) -> std::string {
    try {
      decode_weights(bytes);
    } catch (const WeightFileError& e) {
      return to_string(e.kind());
    }
    return "accepted";
  };
  auto good = hand_built();
  auto magic = good;
  std::memcpy(magic.data(), "XXXX", 4);
  auto version = good;
  version[4] = 9;
  auto truncated = std::vector<std::uint8_t>(good.begin(), good.end() - 1);
  auto trailing = good;
  trailing.push_back(7);
  auto rank = good;
  rank[15] = 0;
  auto dup = good;
  dup[8] = 2;
  dup.insert(dup.end(), good.begin() + 12, good.end());

  const std::vector<std::pair<std::string, std::string>> expected{
      {kind_of(magic), "bad magic"},          {kind_of(version), "version mismatch"},
      {kind_of(truncated), "truncated"},      {kind_of(trailing), "trailing bytes"},
      {kind_of(rank), "bad tensor header"},          {kind_of(dup), "duplicate name"}};
  std::set<std::string> seen;
  for (const auto& [got, want] : expected) {
    o.require(got == want, "expected " + want + ", got " + got);
    seen.insert(got);
  }

  WeightStore partial = random_backbone_weights(1);
  WeightStore missing, misshapen;
  for (const auto& [name, t] : partial) {
    if (name != "block5_conv3/kernel") missing.add(name, t);
    misshapen.add(name, name == "block2_conv1/bias" ? Tensor({64}) : t);
  }
  auto backbone_kind = [](const WeightStore& w) -> std::string {
    try {
      validate_backbone(w);
    } catch (const WeightFileError& e) {
      return to_string(e.kind());
    }
    return "accepted";
  };
  for (const auto& [got, want] : {std::pair{backbone_kind(missing), std::string("missing tensor")},
                                  std::pair{backbone_kind(misshapen), std::string("shape mismatch")}}) {
    o.require(got == want, "expected " + want + ", got " + got);
    seen.insert(got);
  }
  o.require(seen.size() == 8, "error kinds are not distinct");
  if (o.pass) o.detail = "hand-built file exact; 8 malformed cases map to 8 distinct errors";
  return o;
}

Outcome defaults() {
  Outcome o;
  const RunConfig c;
  o.require(c.epochs == 50, "epochs " + std::to_string(c.epochs));
  o.require(c.batch_size == 52, "batch " + std::to_string(c.batch_size));
  o.require(c.val_split == 0.25, "split " + fmt("%g", c.val_split));
  o.require(c.zoom == 0.2, "zoom " + fmt("%g", c.zoom));
  o.require(c.threshold == 0.88, "threshold " + fmt("%g", c.threshold));
  if (o.pass) o.detail = "epochs=50 batch=52 split=0.25 zoom=0.2 threshold=0.88";
  return o;
}

}  // namespace

int main() {
  report("kernel-oracles", kernel_oracles, 10);
  report("gradient-check", gradient_check, 30);
  report("adam-unit", adam_unit);
  report("overfit", overfit, 60);
  report("synthetic-convergence", convergence, 60);
  report("preprocessing", preprocessing);
  report("pipeline-determinism", pipeline_determinism);
  report("bcnw-format", format);
  report("run-config-defaults", defaults);
  std::printf("%s: %d failing\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
