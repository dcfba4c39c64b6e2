#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

#include "lulc/core/parallel.hpp"
#include "lulc/nn/tensor.hpp"

namespace lulc::nn {

// ---------------------------------------------------------------------------
// GEMM kernels. C (M×N) += A (M×K) · B (K×N) with B and C contiguous row-major
// and A addressed through explicit strides so the same kernel serves W and Wᵀ.
// Rows of C are processed four at a time to reuse each loaded B row.
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void gemm_accumulate(std::size_t M, std::size_t N, std::size_t K, const T* A, std::size_t a_row_stride,
                     std::size_t a_col_stride, const T* B, T* C) {
  std::size_t i = 0;
  for (; i + 4 <= M; i += 4) {
    T* c0 = C + i * N;
    T* c1 = c0 + N;
    T* c2 = c1 + N;
    T* c3 = c2 + N;
    for (std::size_t k = 0; k < K; ++k) {
      const T a0 = A[i * a_row_stride + k * a_col_stride];
      const T a1 = A[(i + 1) * a_row_stride + k * a_col_stride];
      const T a2 = A[(i + 2) * a_row_stride + k * a_col_stride];
      const T a3 = A[(i + 3) * a_row_stride + k * a_col_stride];
      const T* b = B + k * N;
#pragma omp simd
      for (std::size_t j = 0; j < N; ++j) {
        const T bv = b[j];
        c0[j] += a0 * bv;
        c1[j] += a1 * bv;
        c2[j] += a2 * bv;
        c3[j] += a3 * bv;
      }
    }
  }
  for (; i < M; ++i) {
    T* c = C + i * N;
    for (std::size_t k = 0; k < K; ++k) {
      const T a = A[i * a_row_stride + k * a_col_stride];
      const T* b = B + k * N;
#pragma omp simd
      for (std::size_t j = 0; j < N; ++j) c[j] += a * b[j];
    }
  }
}

/// C (M×K) = A (M×N) · Bᵀ where B is K×N; every entry is one dot product.
/// Four rows of A share each pass over a row of B.
template <typename T>
void gemm_nt(std::size_t M, std::size_t K, std::size_t N, const T* A, const T* B, T* C) {
  std::size_t i = 0;
  for (; i + 4 <= M; i += 4) {
    const T* a0 = A + i * N;
    const T* a1 = a0 + N;
    const T* a2 = a1 + N;
    const T* a3 = a2 + N;
    for (std::size_t k = 0; k < K; ++k) {
      const T* b = B + k * N;
      T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
#pragma omp simd reduction(+ : s0, s1, s2, s3)
      for (std::size_t j = 0; j < N; ++j) {
        const T bv = b[j];
        s0 += a0[j] * bv;
        s1 += a1[j] * bv;
        s2 += a2[j] * bv;
        s3 += a3[j] * bv;
      }
      C[i * K + k] = s0;
      C[(i + 1) * K + k] = s1;
      C[(i + 2) * K + k] = s2;
      C[(i + 3) * K + k] = s3;
    }
  }
  for (; i < M; ++i) {
    const T* a = A + i * N;
    for (std::size_t k = 0; k < K; ++k) {
      const T* b = B + k * N;
      T acc = 0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t j = 0; j < N; ++j) acc += a[j] * b[j];
      C[i * K + k] = acc;
    }
  }
}

struct ConvDims {
  std::size_t n, cin, h, w, cout, k, stride, pad, oh, ow;
  std::size_t patch() const { return cin * k * k; }
  std::size_t pixels() const { return oh * ow; }
};

template <typename T>
ConvDims conv_dims(const Tensor<T>& x, const Tensor<T>& kernel, std::size_t stride, std::size_t pad) {
  expect_rank(x, 4, "conv2d input");
  expect_rank(kernel, 4, "conv2d kernel");
  if (kernel.dim(1) != x.dim(1) || kernel.dim(2) != kernel.dim(3))
    throw ShapeError("conv2d kernel " + shape_string(kernel.shape()) + " is inconsistent with input " +
                     shape_string(x.shape()));
  if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), kernel.dim(0), kernel.dim(2), stride, pad, 0, 0};
  if (d.h + 2 * pad < d.k || d.w + 2 * pad < d.k)
    throw ShapeError("conv2d kernel " + shape_string(kernel.shape()) + " larger than padded input " +
                     shape_string(x.shape()));
  // Output size rounds down, so trailing rows/columns a strided window cannot reach are ignored.
  d.oh = (d.h + 2 * pad - d.k) / stride + 1;
  d.ow = (d.w + 2 * pad - d.k) / stride + 1;
  return d;
}

/// Unfolds one sample (cin×h×w) into a (cin·k·k)×(oh·ow) patch matrix, zero padded.
template <typename T>
void im2col(const ConvDims& d, const T* in, T* col) {
  const std::size_t P = d.pixels();
  for (std::size_t ci = 0; ci < d.cin; ++ci)
    for (std::size_t kh = 0; kh < d.k; ++kh)
      for (std::size_t kw = 0; kw < d.k; ++kw) {
        T* row = col + ((ci * d.k + kh) * d.k + kw) * P;
        const T* plane = in + ci * d.h * d.w;
        for (std::size_t oh = 0; oh < d.oh; ++oh) {
          const long ih = static_cast<long>(oh * d.stride + kh) - static_cast<long>(d.pad);
          T* out = row + oh * d.ow;
          if (ih < 0 || ih >= static_cast<long>(d.h)) {
            std::fill(out, out + d.ow, T{});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(ih) * d.w;
          for (std::size_t ow = 0; ow < d.ow; ++ow) {
            const long iw = static_cast<long>(ow * d.stride + kw) - static_cast<long>(d.pad);
            out[ow] = (iw < 0 || iw >= static_cast<long>(d.w)) ? T{} : src[iw];
          }
        }
      }
}

/// Adjoint of im2col: scatters patch-matrix gradients back onto the sample.
template <typename T>
void col2im(const ConvDims& d, const T* col, T* in_grad) {
  const std::size_t P = d.pixels();
  for (std::size_t ci = 0; ci < d.cin; ++ci)
    for (std::size_t kh = 0; kh < d.k; ++kh)
      for (std::size_t kw = 0; kw < d.k; ++kw) {
        const T* row = col + ((ci * d.k + kh) * d.k + kw) * P;
        T* plane = in_grad + ci * d.h * d.w;
        for (std::size_t oh = 0; oh < d.oh; ++oh) {
          const long ih = static_cast<long>(oh * d.stride + kh) - static_cast<long>(d.pad);
          if (ih < 0 || ih >= static_cast<long>(d.h)) continue;
          T* dst = plane + static_cast<std::size_t>(ih) * d.w;
          const T* src = row + oh * d.ow;
          for (std::size_t ow = 0; ow < d.ow; ++ow) {
            const long iw = static_cast<long>(ow * d.stride + kw) - static_cast<long>(d.pad);
            if (iw >= 0 && iw < static_cast<long>(d.w)) dst[iw] += src[ow];
          }
        }
      }
}

inline bool is_pointwise(const ConvDims& d) { return d.k == 1 && d.stride == 1 && d.pad == 0; }

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution (cross-correlation, no bias).
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, std::size_t stride, std::size_t pad) {
  const auto d = detail::conv_dims(x, kernel, stride, pad);
  Tensor<T> y({d.n, d.cout, d.oh, d.ow});
  const std::size_t in_sz = d.cin * d.h * d.w, out_sz = d.cout * d.pixels();
  parallel_for(d.n, [&](std::size_t n) {
    const T* in = x.data() + n * in_sz;
    std::vector<T> col;
    const T* patches = in;
    if (!detail::is_pointwise(d)) {
      col.resize(d.patch() * d.pixels());
      detail::im2col(d, in, col.data());
      patches = col.data();
    }
    detail::gemm_accumulate(d.cout, d.pixels(), d.patch(), kernel.data(), d.patch(), 1, patches,
                            y.data() + n * out_sz);
  });
  return y;
}

template <typename T>
struct ConvGrads {
  Tensor<T> grad_input;
  Tensor<T> grad_kernel;
};

/// Exact gradients of conv2d_forward. Per-sample kernel gradients are summed in
/// sample order, so the result does not depend on the worker count.
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& grad_out,
                             std::size_t stride, std::size_t pad) {
  const auto d = detail::conv_dims(x, kernel, stride, pad);
  const Shape expected{d.n, d.cout, d.oh, d.ow};
  if (grad_out.shape() != expected)
    throw ShapeError("conv2d grad_out " + shape_string(grad_out.shape()) + " does not match output " +
                     shape_string(expected));
  ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(kernel.shape())};
  const std::size_t in_sz = d.cin * d.h * d.w, out_sz = d.cout * d.pixels();
  const std::size_t wsz = kernel.size();
  std::vector<T> partial(d.n * wsz);
  parallel_for(d.n, [&](std::size_t n) {
    const T* in = x.data() + n * in_sz;
    const T* gy = grad_out.data() + n * out_sz;
    T* gx = g.grad_input.data() + n * in_sz;
    if (detail::is_pointwise(d)) {
      detail::gemm_nt(d.cout, d.patch(), d.pixels(), gy, in, partial.data() + n * wsz);
      detail::gemm_accumulate(d.patch(), d.pixels(), d.cout, kernel.data(), 1, d.patch(), gy, gx);
      return;
    }
    std::vector<T> col(d.patch() * d.pixels());
    detail::im2col(d, in, col.data());
    detail::gemm_nt(d.cout, d.patch(), d.pixels(), gy, col.data(), partial.data() + n * wsz);
    std::fill(col.begin(), col.end(), T{});
    detail::gemm_accumulate(d.patch(), d.pixels(), d.cout, kernel.data(), 1, d.patch(), gy, col.data());
    detail::col2im(d, col.data(), gx);
  });
  T* gk = g.grad_kernel.data();
  for (std::size_t n = 0; n < d.n; ++n) {
    const T* p = partial.data() + n * wsz;
    for (std::size_t i = 0; i < wsz; ++i) gk[i] += p[i];
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalisation over N, H, W per channel.
// ---------------------------------------------------------------------------

enum class Mode { train, eval };

inline constexpr double kNormEps = 1e-5;
inline constexpr double kNormMomentum = 0.1;

template <typename T>
struct BatchNormCache {
  Mode mode = Mode::train;
  Tensor<T> x_hat;
  std::vector<T> inv_std;
};

/// Train mode normalises with batch statistics and folds them into the running
/// estimates (momentum 0.1, unbiased variance for the running estimate). Eval
/// mode uses the running estimates and leaves them untouched.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& scale, const Tensor<T>& shift,
                            Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                            std::type_identity_t<BatchNormCache<T>>* cache = nullptr) {
  expect_rank(x, 4, "batchnorm input");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  if (scale.size() != C || shift.size() != C || running_mean.size() != C || running_var.size() != C)
    throw ShapeError("batchnorm parameters do not match " + std::to_string(C) + " channels of input " +
                     shape_string(x.shape()));
  const std::size_t M = N * HW;
  if (mode == Mode::train && M < 2)
    throw NumericalError("batchnorm in train mode needs more than one value per channel (input " +
                         shape_string(x.shape()) + "); variance is degenerate");
  Tensor<T> y(x.shape());
  Tensor<T> x_hat(x.shape());
  std::vector<T> inv_std(C);
  for (std::size_t c = 0; c < C; ++c) {
    double mean, var;
    if (mode == Mode::train) {
      double sum = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* p = x.data() + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) sum += p[i];
      }
      mean = sum / static_cast<double>(M);
      double sq = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const T* p = x.data() + (n * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          const double dv = p[i] - mean;
          sq += dv * dv;
        }
      }
      var = sq / static_cast<double>(M);
      running_mean[c] = static_cast<T>((1.0 - kNormMomentum) * running_mean[c] + kNormMomentum * mean);
      running_var[c] = static_cast<T>((1.0 - kNormMomentum) * running_var[c] +
                                      kNormMomentum * var * static_cast<double>(M) / static_cast<double>(M - 1));
    } else {
      mean = running_mean[c];
      var = running_var[c];
    }
    const double is = 1.0 / std::sqrt(var + kNormEps);
    inv_std[c] = static_cast<T>(is);
    const double g = scale[c], b = shift[c];
    for (std::size_t n = 0; n < N; ++n) {
      const T* p = x.data() + (n * C + c) * HW;
      T* xh = x_hat.data() + (n * C + c) * HW;
      T* q = y.data() + (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        const double h = (p[i] - mean) * is;
        xh[i] = static_cast<T>(h);
        q[i] = static_cast<T>(g * h + b);
      }
    }
  }
  if (cache) {
    cache->mode = mode;
    cache->x_hat = std::move(x_hat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

template <typename T>
struct BatchNormGrads {
  Tensor<T> grad_input;
  Tensor<T> grad_scale;
  Tensor<T> grad_shift;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCache<T>& cache, const Tensor<T>& scale,
                                     const Tensor<T>& grad_out) {
  if (grad_out.shape() != cache.x_hat.shape())
    throw ShapeError("batchnorm grad_out " + shape_string(grad_out.shape()) + " does not match cached input " +
                     shape_string(cache.x_hat.shape()));
  const std::size_t N = grad_out.dim(0), C = grad_out.dim(1), HW = grad_out.dim(2) * grad_out.dim(3);
  const double M = static_cast<double>(N * HW);
  BatchNormGrads<T> g{Tensor<T>(grad_out.shape()), Tensor<T>({C}), Tensor<T>({C})};
  for (std::size_t c = 0; c < C; ++c) {
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      const T* gy = grad_out.data() + (n * C + c) * HW;
      const T* xh = cache.x_hat.data() + (n * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        sum_g += gy[i];
        sum_gx += static_cast<double>(gy[i]) * xh[i];
      }
    }
    g.grad_scale[c] = static_cast<T>(sum_gx);
    g.grad_shift[c] = static_cast<T>(sum_g);
    const double k = static_cast<double>(scale[c]) * cache.inv_std[c];
    for (std::size_t n = 0; n < N; ++n) {
      const T* gy = grad_out.data() + (n * C + c) * HW;
      const T* xh = cache.x_hat.data() + (n * C + c) * HW;
      T* gx = g.grad_input.data() + (n * C + c) * HW;
      if (cache.mode == Mode::train) {
        for (std::size_t i = 0; i < HW; ++i)
          gx[i] = static_cast<T>(k * (gy[i] - sum_g / M - xh[i] * sum_gx / M));
      } else {
        for (std::size_t i = 0; i < HW; ++i) gx[i] = static_cast<T>(k * gy[i]);
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Pointwise and pooling layers.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu_forward(Tensor<T> x) {
  for (auto& v : x.values()) v = v > T{} ? v : T{};
  return x;
}

/// Gradient of relu given its forward output.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& y, Tensor<T> grad_out) {
  const T* yp = y.data();
  T* g = grad_out.data();
  const std::size_t n = y.size();
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) g[i] = yp[i] > T{} ? g[i] : T{};
  return grad_out;
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& x) {
  expect_rank(x, 4, "pool input");
  const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
  Tensor<T> y({N, C});
  for (std::size_t i = 0; i < N * C; ++i) {
    double s = 0.0;
    const T* p = x.data() + i * HW;
    for (std::size_t j = 0; j < HW; ++j) s += p[j];
    y[i] = static_cast<T>(s / static_cast<double>(HW));
  }
  return y;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Shape& input_shape, const Tensor<T>& grad_out) {
  const std::size_t HW = input_shape[2] * input_shape[3];
  Tensor<T> g(input_shape);
  const T inv = static_cast<T>(1.0 / static_cast<double>(HW));
  for (std::size_t i = 0; i < grad_out.size(); ++i) std::fill_n(g.data() + i * HW, HW, grad_out[i] * inv);
  return g;
}

/// y = x · Wᵀ + b with x N×C, W K×C, b K.
template <typename T>
Tensor<T> linear_forward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  expect_rank(x, 2, "linear input");
  expect_rank(weight, 2, "linear weight");
  const std::size_t N = x.dim(0), C = x.dim(1), K = weight.dim(0);
  if (weight.dim(1) != C || bias.size() != K)
    throw ShapeError("linear weight " + shape_string(weight.shape()) + " / bias " + shape_string(bias.shape()) +
                     " inconsistent with input " + shape_string(x.shape()));
  Tensor<T> y({N, K});
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k) {
      double s = bias[k];
      for (std::size_t c = 0; c < C; ++c) s += static_cast<double>(x[n * C + c]) * weight[k * C + c];
      y[n * K + k] = static_cast<T>(s);
    }
  return y;
}

template <typename T>
struct LinearGrads {
  Tensor<T> grad_input;
  Tensor<T> grad_weight;
  Tensor<T> grad_bias;
};

template <typename T>
LinearGrads<T> linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& grad_out) {
  const std::size_t N = x.dim(0), C = x.dim(1), K = weight.dim(0);
  LinearGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(weight.shape()), Tensor<T>({K})};
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t k = 0; k < K; ++k) {
      const T go = grad_out[n * K + k];
      g.grad_bias[k] += go;
      for (std::size_t c = 0; c < C; ++c) {
        g.grad_weight[k * C + c] += go * x[n * C + c];
        g.grad_input[n * C + c] += go * weight[k * C + c];
      }
    }
  return g;
}

}  // namespace lulc::nn
