#include "bcnet/head.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bcnet/rng.hpp"

namespace bcnet {

namespace {

// a b^T for a: [r,n], b: [m,n]: row dot products, each row of b read once
// for every row of a. Eight partial sums per dot keep the loop vectorizable.
template <typename T>
BasicTensor<T> matmul_nt(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  constexpr std::size_t kLanes = 8;
  const std::size_t r = a.dim(0), n = a.dim(1), m = b.dim(0);
  BasicTensor<T> out({r, m});
  const std::size_t whole = n - n % kLanes;
  for (std::size_t p = 0; p < m; ++p) {
    const T* __restrict brow = b.data() + p * n;
    for (std::size_t i = 0; i < r; ++i) {
      const T* __restrict arow = a.data() + i * n;
      double part[kLanes] = {};
      for (std::size_t j = 0; j < whole; j += kLanes) {
        for (std::size_t l = 0; l < kLanes; ++l) {
          part[l] += static_cast<double>(arow[j + l]) * static_cast<double>(brow[j + l]);
        }
      }
      double sum = 0.0;
      for (std::size_t l = 0; l < kLanes; ++l) sum += part[l];
      for (std::size_t j = whole; j < n; ++j) sum += static_cast<double>(arow[j]) * brow[j];
      out[i * m + p] = static_cast<T>(sum);
    }
  }
  return out;
}

// a^T b for a: [r,m], b: [r,n] with a short shared dimension r (the batch):
// one double accumulator row per output row, built from axpys over b.
template <typename T>
BasicTensor<T> matmul_tn(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  const std::size_t r = a.dim(0), m = a.dim(1), n = b.dim(1);
  BasicTensor<T> out({m, n});
  std::vector<double> acc(n);
  for (std::size_t p = 0; p < m; ++p) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < r; ++i) {
      const double s = a[i * m + p];
      const T* __restrict row = b.data() + i * n;
      double* __restrict dst = acc.data();
      for (std::size_t j = 0; j < n; ++j) dst[j] += s * row[j];
    }
    T* o = out.data() + p * n;
    for (std::size_t j = 0; j < n; ++j) o[j] = static_cast<T>(acc[j]);
  }
  return out;
}

// y = x * w + b, row-broadcast bias.
template <typename T>
BasicTensor<T> dense(const BasicTensor<T>& x, const BasicTensor<T>& w, const BasicTensor<T>& b) {
  BasicTensor<T> y = matmul(x, w);
  for (std::size_t i = 0; i < y.dim(0); ++i) {
    for (std::size_t j = 0; j < y.dim(1); ++j) y.at(i, j) += b[j];
  }
  return y;
}

template <typename T>
BasicTensor<T> column_sums(const BasicTensor<T>& x) {
  BasicTensor<T> s({x.dim(1)});
  for (std::size_t j = 0; j < x.dim(1); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.dim(0); ++i) acc += x.at(i, j);
    s[j] = static_cast<T>(acc);
  }
  return s;
}

// Zeroes gradient entries whose forward activation was clipped by relu.
template <typename T>
void relu_mask(BasicTensor<T>& grad, const BasicTensor<T>& activation) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(activation[i] > T{0})) grad[i] = T{0};
  }
}

template <typename T>
void expect_dims(const BasicTensor<T>& t, const Dims& dims, const char* what) {
  if (t.dims() != dims) {
    throw ShapeError(std::string(what) + ": expected " + format_dims(dims) + ", got " +
                     format_dims(t.dims()));
  }
}

}  // namespace

template <typename T>
BasicHeadParams<T> BasicHeadParams<T>::zeros(const HeadShape& s) {
  BasicHeadParams p;
  p.w1 = BasicTensor<T>({s.features, s.hidden1});
  p.b1 = BasicTensor<T>({s.hidden1});
  p.w2 = BasicTensor<T>({s.hidden1, s.hidden2});
  p.b2 = BasicTensor<T>({s.hidden2});
  p.w3 = BasicTensor<T>({s.hidden2, s.classes});
  p.b3 = BasicTensor<T>({s.classes});
  return p;
}

template <typename T>
HeadShape BasicHeadParams<T>::shape() const {
  return {w1.dim(0), w1.dim(1), w2.dim(1), w3.dim(1)};
}

template <typename T>
std::size_t BasicHeadParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += t->size();
  return n;
}

HeadParams glorot_init(const HeadShape& shape, std::uint64_t seed) {
  HeadParams p = HeadParams::zeros(shape);
  Rng rng(derive_seed(seed, 0x474c4f524f54ull /* "GLOROT" */));
  for (auto* w : {&p.w1, &p.w2, &p.w3}) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w->dim(0) + w->dim(1)));
    for (auto& v : w->values()) v = static_cast<float>(uniform_real(rng, -limit, limit));
  }
  return p;
}

template <typename T>
BasicTensor<T> gap(const BasicTensor<T>& x) {
  if (x.rank() != 4) throw ShapeError("gap expects rank 4, got " + format_dims(x.dims()));
  const std::size_t batch = x.dim(0), spatial = x.dim(1) * x.dim(2), channels = x.dim(3);
  BasicTensor<T> out({batch, channels});
  std::vector<double> acc(channels);
  for (std::size_t b = 0; b < batch; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const T* src = x.data() + b * spatial * channels;
    for (std::size_t s = 0; s < spatial; ++s) {
      for (std::size_t c = 0; c < channels; ++c) acc[c] += src[s * channels + c];
    }
    for (std::size_t c = 0; c < channels; ++c) {
      out.at(b, c) = static_cast<T>(acc[c] / static_cast<double>(spatial));
    }
  }
  return out;
}

template <typename T>
HeadOutput<T> head_forward(const BasicTensor<T>& features, const BasicHeadParams<T>& params) {
  const HeadShape shape = params.shape();
  if (features.rank() != 2 || features.dim(1) != shape.features) {
    throw ShapeError("head_forward: features " + format_dims(features.dims()) +
                     " do not match head input width " + std::to_string(shape.features));
  }
  HeadOutput<T> out;
  out.cache.features = features;
  out.cache.hidden1 = relu(dense(features, params.w1, params.b1));
  out.cache.hidden2 = relu(dense(out.cache.hidden1, params.w2, params.b2));
  out.cache.probs = softmax_rows(dense(out.cache.hidden2, params.w3, params.b3));
  out.cache.params_version = params.version;
  out.probs = out.cache.probs;
  return out;
}

template <typename T>
void check_one_hot(const BasicTensor<T>& labels) {
  if (labels.rank() != 2) {
    throw std::invalid_argument("labels must be rank 2, got " + format_dims(labels.dims()));
  }
  for (std::size_t i = 0; i < labels.dim(0); ++i) {
    std::size_t ones = 0;
    for (std::size_t j = 0; j < labels.dim(1); ++j) {
      const T v = labels.at(i, j);
      if (v == T{1}) {
        ++ones;
      } else if (v != T{0}) {
        throw std::invalid_argument("label row " + std::to_string(i) + " is not one-hot");
      }
    }
    if (ones != 1) throw std::invalid_argument("label row " + std::to_string(i) + " is not one-hot");
  }
}

template <typename T>
double cross_entropy(const BasicTensor<T>& probs, const BasicTensor<T>& labels) {
  if (probs.rank() != 2 || probs.dims() != labels.dims()) {
    throw ShapeError("cross_entropy: probs " + format_dims(probs.dims()) + " vs labels " +
                     format_dims(labels.dims()));
  }
  check_one_hot(labels);
  double total = 0.0;
  for (std::size_t i = 0; i < probs.dim(0); ++i) {
    for (std::size_t j = 0; j < probs.dim(1); ++j) {
      if (labels.at(i, j) != T{0}) {
        total -= static_cast<double>(labels.at(i, j)) *
                 std::log(std::max(static_cast<double>(probs.at(i, j)), 1e-12));
      }
    }
  }
  return total / static_cast<double>(probs.dim(0));
}

template <typename T>
BasicHeadGradients<T> head_backward(const BasicHeadParams<T>& params, const HeadCache<T>& cache,
                                    const BasicTensor<T>& labels) {
  if (cache.params_version != params.version) {
    throw std::logic_error("head_backward: stale cache (params version " +
                           std::to_string(params.version) + ", cache from " +
                           std::to_string(cache.params_version) + ")");
  }
  const HeadShape shape = params.shape();
  const std::size_t batch = cache.features.dim(0);
  expect_dims(cache.features, {batch, shape.features}, "head_backward cache features");
  expect_dims(cache.hidden1, {batch, shape.hidden1}, "head_backward cache hidden1");
  expect_dims(cache.hidden2, {batch, shape.hidden2}, "head_backward cache hidden2");
  expect_dims(cache.probs, {batch, shape.classes}, "head_backward cache probs");
  expect_dims(labels, {batch, shape.classes}, "head_backward labels");

  BasicHeadGradients<T> g;
  BasicTensor<T> delta = cache.probs;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  for (std::size_t i = 0; i < delta.size(); ++i) {
    delta[i] = static_cast<T>((static_cast<double>(delta[i]) - labels[i]) * inv_batch);
  }
  g.w3 = matmul_tn(cache.hidden2, delta);
  g.b3 = column_sums(delta);

  delta = matmul_nt(delta, params.w3);
  relu_mask(delta, cache.hidden2);
  g.w2 = matmul_tn(cache.hidden1, delta);
  g.b2 = column_sums(delta);

  delta = matmul_nt(delta, params.w2);
  relu_mask(delta, cache.hidden1);
  g.w1 = matmul_tn(cache.features, delta);
  g.b1 = column_sums(delta);
  return g;
}

template <typename T>
std::size_t argmax_row(const BasicTensor<T>& x, std::size_t row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < x.dim(1); ++j) {
    if (x.at(row, j) > x.at(row, best)) best = j;
  }
  return best;
}

WeightStore head_to_store(const HeadParams& params) {
  WeightStore store;
  const auto tensors = params.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    store.add("head/" + std::string(kHeadTensorNames[i]), *tensors[i]);
  }
  return store;
}

HeadParams head_from_store(const WeightStore& store) {
  HeadParams p;
  auto tensors = p.tensors();
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    *tensors[i] = store.get("head/" + std::string(kHeadTensorNames[i]));
  }
  // Layer widths must chain: W1 [F,H1], b1 [H1], W2 [H1,H2], b2 [H2], W3 [H2,C], b3 [C].
  std::size_t width = p.w1.dim(0);
  for (std::size_t layer = 0; layer < 3; ++layer) {
    const auto& w = *tensors[2 * layer];
    const auto& b = *tensors[2 * layer + 1];
    const std::string w_name = "head/" + std::string(kHeadTensorNames[2 * layer]);
    const std::string b_name = "head/" + std::string(kHeadTensorNames[2 * layer + 1]);
    if (w.rank() != 2 || w.dim(0) != width) {
      throw WeightFileError(WeightErrorKind::shape_mismatch, w_name,
                            "expected [" + std::to_string(width) + ",*], got " +
                                format_dims(w.dims()));
    }
    width = w.dim(1);
    if (b.dims() != Dims{width}) {
      throw WeightFileError(WeightErrorKind::shape_mismatch, b_name,
                            "expected " + format_dims({width}) + ", got " + format_dims(b.dims()));
    }
  }
  return p;
}

void save_head(const std::filesystem::path& path, const HeadParams& params) {
  save_weights(path, head_to_store(params));
}

HeadParams load_head(const std::filesystem::path& path) { return head_from_store(load_weights(path)); }

#define BCNET_INSTANTIATE(T)                                                                  \
  template struct BasicHeadParams<T>;                                                         \
  template BasicTensor<T> gap(const BasicTensor<T>&);                                         \
  template HeadOutput<T> head_forward(const BasicTensor<T>&, const BasicHeadParams<T>&);      \
  template double cross_entropy(const BasicTensor<T>&, const BasicTensor<T>&);                \
  template BasicHeadGradients<T> head_backward(const BasicHeadParams<T>&, const HeadCache<T>&, \
                                               const BasicTensor<T>&);                        \
  template std::size_t argmax_row(const BasicTensor<T>&, std::size_t);                        \
  template void check_one_hot(const BasicTensor<T>&);

BCNET_INSTANTIATE(float)
BCNET_INSTANTIATE(double)

#undef BCNET_INSTANTIATE

}  // namespace bcnet
