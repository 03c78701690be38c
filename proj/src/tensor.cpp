#include "bcnet/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <sstream>
#include <vector>

namespace bcnet {

std::string format_dims(const Dims& dims) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  os << ']';
  return os.str();
}

std::size_t element_count(const Dims& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

namespace {

// Blocked GEMM in the usual packed-panel style. Both operands are widened
// to double while packing, so every product and partial sum is 64-bit; the
// running sums live in a double buffer until the final narrowing store.
#if defined(__AVX512F__)
constexpr std::size_t kLanes = 8;
#elif defined(__AVX__)
constexpr std::size_t kLanes = 4;
#else
constexpr std::size_t kLanes = 2;
#endif
using VecD = double __attribute__((vector_size(kLanes * sizeof(double))));

constexpr std::size_t kMr = 6;            // rows per micro tile
constexpr std::size_t kNr = 2 * kLanes;   // columns per micro tile
constexpr std::size_t kKc = 256;   // inner-dimension block
constexpr std::size_t kMc = 96;    // rows per packed block of a

template <std::size_t Rows>
void micro_kernel(std::size_t kc, const double* ap, const double* bp, double* c, std::size_t ldc,
                  std::size_t cols) {
  VecD lo[Rows], hi[Rows];
  for (std::size_t r = 0; r < Rows; ++r) lo[r] = hi[r] = VecD{};
  for (std::size_t p = 0; p < kc; ++p) {
    VecD b0, b1;
    std::memcpy(&b0, bp + p * kNr, sizeof(VecD));
    std::memcpy(&b1, bp + p * kNr + kLanes, sizeof(VecD));
    const double* a = ap + p * kMr;
    for (std::size_t r = 0; r < Rows; ++r) {
      lo[r] += a[r] * b0;
      hi[r] += a[r] * b1;
    }
  }
  for (std::size_t r = 0; r < Rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] += j < kLanes ? lo[r][j] : hi[r][j - kLanes];
  }
}

template <typename T>
void gemm_impl(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
  const std::size_t panels = (n + kNr - 1) / kNr;
  std::vector<double> sums(m * n, 0.0);
  std::vector<double> bpack(panels * kKc * kNr);
  std::vector<double> apack(((kMc + kMr - 1) / kMr) * kMr * kKc);

  for (std::size_t pc = 0; pc < k; pc += kKc) {
    const std::size_t kc = std::min(kKc, k - pc);
    for (std::size_t jp = 0; jp < panels; ++jp) {
      const std::size_t j0 = jp * kNr;
      const std::size_t nc = std::min(kNr, n - j0);
      double* dst = bpack.data() + jp * kc * kNr;
      for (std::size_t p = 0; p < kc; ++p) {
        const T* src = b + (pc + p) * n + j0;
        std::size_t j = 0;
        for (; j < nc; ++j) dst[p * kNr + j] = static_cast<double>(src[j]);
        for (; j < kNr; ++j) dst[p * kNr + j] = 0.0;
      }
    }
    for (std::size_t ic = 0; ic < m; ic += kMc) {
      const std::size_t mc = std::min(kMc, m - ic);
      const std::size_t tiles = (mc + kMr - 1) / kMr;
      for (std::size_t t = 0; t < tiles; ++t) {
        double* dst = apack.data() + t * kc * kMr;
        const std::size_t rows = std::min(kMr, mc - t * kMr);
        for (std::size_t p = 0; p < kc; ++p) {
          std::size_t r = 0;
          for (; r < rows; ++r) {
            dst[p * kMr + r] = static_cast<double>(a[(ic + t * kMr + r) * k + pc + p]);
          }
          for (; r < kMr; ++r) dst[p * kMr + r] = 0.0;
        }
      }
      for (std::size_t jp = 0; jp < panels; ++jp) {
        const std::size_t j0 = jp * kNr;
        const std::size_t nc = std::min(kNr, n - j0);
        const double* bp = bpack.data() + jp * kc * kNr;
        for (std::size_t t = 0; t < tiles; ++t) {
          const std::size_t rows = std::min(kMr, mc - t * kMr);
          const double* ap = apack.data() + t * kc * kMr;
          double* out = sums.data() + (ic + t * kMr) * n + j0;
          if (rows == kMr) {
            micro_kernel<kMr>(kc, ap, bp, out, n, nc);
          } else {
            // Padded rows of the packed tile are zero; only the valid ones are stored.
            double tail[kMr * kNr] = {};
            micro_kernel<kMr>(kc, ap, bp, tail, kNr, nc);
            for (std::size_t r = 0; r < rows; ++r) {
              for (std::size_t j = 0; j < nc; ++j) out[r * n + j] += tail[r * kNr + j];
            }
          }
        }
      }
    }
  }
  for (std::size_t i = 0; i < m * n; ++i) c[i] = static_cast<T>(sums[i]);
}

}  // namespace

void gemm(const float* a, const float* b, float* c, std::size_t m, std::size_t k, std::size_t n) {
  gemm_impl(a, b, c, m, k, n);
}

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
          std::size_t n) {
  gemm_impl(a, b, c, m, k, n);
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul shape mismatch: " + format_dims(a.dims()) + " x " +
                     format_dims(b.dims()));
  }
  BasicTensor<T> c({a.dim(0), b.dim(1)});
  gemm(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
  return c;
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  for (auto& v : y.values()) v = v < T{0} ? T{0} : v;  // NaN passes through
  return y;
}

template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& x) {
  if (x.rank() != 2) throw ShapeError("softmax_rows expects rank 2, got " + format_dims(x.dims()));
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  BasicTensor<T> y(x.dims());
  for (std::size_t i = 0; i < rows; ++i) {
    double mx = -INFINITY;
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = x.at(i, j);
      if (!std::isfinite(v)) {
        throw NumericError("softmax_rows: non-finite input at [" + std::to_string(i) + "," +
                           std::to_string(j) + "]");
      }
      mx = std::max(mx, v);
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp(static_cast<double>(x.at(i, j)) - mx);
    for (std::size_t j = 0; j < cols; ++j) {
      y.at(i, j) = static_cast<T>(std::exp(static_cast<double>(x.at(i, j)) - mx) / sum);
    }
  }
  return y;
}

template <typename T>
BasicTensor<T> reshape(const BasicTensor<T>& x, Dims dims) {
  BasicTensor<T> copy = x;
  return reshape(std::move(copy), std::move(dims));
}

template <typename T>
BasicTensor<T> reshape(BasicTensor<T>&& x, Dims dims) {
  if (element_count(dims) != x.size()) {
    throw ShapeError("reshape " + format_dims(x.dims()) + " -> " + format_dims(dims) +
                     ": element count mismatch");
  }
  return BasicTensor<T>(std::move(dims), std::move(x).release());
}

#define BCNET_INSTANTIATE(T)                                               \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&); \
  template BasicTensor<T> relu(const BasicTensor<T>&);                     \
  template BasicTensor<T> softmax_rows(const BasicTensor<T>&);             \
  template BasicTensor<T> reshape(const BasicTensor<T>&, Dims);            \
  template BasicTensor<T> reshape(BasicTensor<T>&&, Dims);

BCNET_INSTANTIATE(float)
BCNET_INSTANTIATE(double)

#undef BCNET_INSTANTIATE

}  // namespace bcnet
