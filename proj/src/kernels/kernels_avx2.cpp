// AVX2 kernel variants. Each kernel realizes exactly the evaluation schedule
// documented in kernels.hpp / the scalar reference: same 4-lane reduction
// split, same per-element expression order, no FMA. Outputs are bit-identical
// to the scalar table on every input, which test_kernels.cpp asserts.

#include "advsticker/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>
#include <cstring>

namespace advsticker::kernels {

namespace {

inline double hsum(__m256d v) {
  // (l0 + l2) + (l1 + l3), the scalar combine order.
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(s) + _mm_cvtsd_f64(_mm_unpackhi_pd(s, s));
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  }
  double r = hsum(acc);
  for (std::size_t i = n4; i < n; ++i) r += x[i];
  return r;
}

double abs_sum_avx2(const double* x, std::size_t n) {
  const __m256d absmask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFll));
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_and_pd(absmask, _mm256_loadu_pd(x + i)));
  }
  double r = hsum(acc);
  for (std::size_t i = n4; i < n; ++i) r += std::fabs(x[i]);
  return r;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double r = hsum(acc);
  for (std::size_t i = n4; i < n; ++i) r += a[i] * b[i];
  return r;
}

// max(0, x) / min(1, x) keep NaN in x flowing through, like the scalar code.
inline __m256d clip01_pd(__m256d v) {
  v = _mm256_max_pd(_mm256_setzero_pd(), v);
  return _mm256_min_pd(_mm256_set1_pd(1.0), v);
}

void clip01_avx2(double* x, std::size_t n) {
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    _mm256_storeu_pd(x + i, clip01_pd(_mm256_loadu_pd(x + i)));
  }
  for (std::size_t i = n4; i < n; ++i) {
    double v = x[i];
    v = v < 0.0 ? 0.0 : v;
    v = v > 1.0 ? 1.0 : v;
    x[i] = v;
  }
}

void axpy_avx2(double* y, double s, const double* x, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d t = _mm256_add_pd(_mm256_loadu_pd(y + i),
                              _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, t);
  }
  for (std::size_t i = n4; i < n; ++i) y[i] += s * x[i];
}

void scale_avx2(double* x, double s, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(s);
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(vs, _mm256_loadu_pd(x + i)));
  }
  for (std::size_t i = n4; i < n; ++i) x[i] *= s;
}

void momentum_update_avx2(double* m, const double* g, double mu, double scale,
                          std::size_t n) {
  const __m256d vmu = _mm256_set1_pd(mu);
  const __m256d vsc = _mm256_set1_pd(scale);
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d t = _mm256_add_pd(_mm256_mul_pd(vmu, _mm256_loadu_pd(m + i)),
                              _mm256_mul_pd(vsc, _mm256_loadu_pd(g + i)));
    _mm256_storeu_pd(m + i, t);
  }
  for (std::size_t i = n4; i < n; ++i) m[i] = mu * m[i] + scale * g[i];
}

void sign_step_clip_avx2(double* x, const double* m, double alpha, std::size_t n) {
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d valpha = _mm256_set1_pd(alpha);
  const __m256d zero = _mm256_setzero_pd();
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    __m256d vm = _mm256_loadu_pd(m + i);
    __m256d pos = _mm256_and_pd(_mm256_cmp_pd(vm, zero, _CMP_GT_OQ), one);
    __m256d neg = _mm256_and_pd(_mm256_cmp_pd(vm, zero, _CMP_LT_OQ), one);
    __m256d sgn = _mm256_sub_pd(pos, neg);
    __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(valpha, sgn));
    _mm256_storeu_pd(x + i, clip01_pd(v));
  }
  for (std::size_t i = n4; i < n; ++i) {
    double s = 0.0;
    if (m[i] > 0.0) s = 1.0;
    if (m[i] < 0.0) s = -1.0;
    double v = x[i] - alpha * s;
    v = v < 0.0 ? 0.0 : v;
    v = v > 1.0 ? 1.0 : v;
    x[i] = v;
  }
}

// Scalar tail reused from the reference table for remainder pixels.
void bilinear_gather_avx2(const double* src, int h, int w, int c, const double* x,
                          const double* y, const std::uint8_t* mask, double* out,
                          std::size_t n_px) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d maxx = _mm256_set1_pd(static_cast<double>(w - 1));
  const __m256d maxy = _mm256_set1_pd(static_cast<double>(h - 1));
  const __m128i xlim = _mm_set1_epi32(w - 1);
  const __m128i ylim = _mm_set1_epi32(h - 1);
  const __m128i onei = _mm_set1_epi32(1);
  const __m128i vw = _mm_set1_epi32(w);
  const __m128i vc = _mm_set1_epi32(c);

  const std::size_t n4 = n_px & ~std::size_t{3};
  for (std::size_t p = 0; p < n4; p += 4) {
    __m256d mvalid = _mm256_castsi256_pd(_mm256_setr_epi64x(
        mask[p] ? -1 : 0, mask[p + 1] ? -1 : 0, mask[p + 2] ? -1 : 0,
        mask[p + 3] ? -1 : 0));
    // Invalid lanes get coordinate 0 so address math stays in range.
    __m256d xc = _mm256_and_pd(mvalid, _mm256_loadu_pd(x + p));
    __m256d yc = _mm256_and_pd(mvalid, _mm256_loadu_pd(y + p));
    xc = _mm256_min_pd(maxx, _mm256_max_pd(zero, xc));
    yc = _mm256_min_pd(maxy, _mm256_max_pd(zero, yc));
    __m256d x0d = _mm256_floor_pd(xc);
    __m256d y0d = _mm256_floor_pd(yc);
    __m128i x0 = _mm256_cvttpd_epi32(x0d);
    __m128i y0 = _mm256_cvttpd_epi32(y0d);
    __m128i x1 = _mm_min_epi32(_mm_add_epi32(x0, onei), xlim);
    __m128i y1 = _mm_min_epi32(_mm_add_epi32(y0, onei), ylim);
    __m256d fx = _mm256_sub_pd(xc, x0d);
    __m256d fy = _mm256_sub_pd(yc, y0d);
    __m256d gx = _mm256_sub_pd(one, fx);
    __m256d gy = _mm256_sub_pd(one, fy);
    __m256d w00 = _mm256_mul_pd(gy, gx);
    __m256d w01 = _mm256_mul_pd(gy, fx);
    __m256d w10 = _mm256_mul_pd(fy, gx);
    __m256d w11 = _mm256_mul_pd(fy, fx);
    __m128i r0 = _mm_mullo_epi32(y0, vw);
    __m128i r1 = _mm_mullo_epi32(y1, vw);
    __m128i i00 = _mm_mullo_epi32(_mm_add_epi32(r0, x0), vc);
    __m128i i01 = _mm_mullo_epi32(_mm_add_epi32(r0, x1), vc);
    __m128i i10 = _mm_mullo_epi32(_mm_add_epi32(r1, x0), vc);
    __m128i i11 = _mm_mullo_epi32(_mm_add_epi32(r1, x1), vc);
    for (int k = 0; k < c; ++k) {
      const __m128i kk = _mm_set1_epi32(k);
      __m256d v00 = _mm256_i32gather_pd(src, _mm_add_epi32(i00, kk), 8);
      __m256d v01 = _mm256_i32gather_pd(src, _mm_add_epi32(i01, kk), 8);
      __m256d v10 = _mm256_i32gather_pd(src, _mm_add_epi32(i10, kk), 8);
      __m256d v11 = _mm256_i32gather_pd(src, _mm_add_epi32(i11, kk), 8);
      __m256d t0 = _mm256_add_pd(_mm256_mul_pd(v00, w00), _mm256_mul_pd(v01, w01));
      __m256d t1 = _mm256_add_pd(_mm256_mul_pd(v10, w10), _mm256_mul_pd(v11, w11));
      __m256d val = _mm256_and_pd(mvalid, _mm256_add_pd(t0, t1));
      alignas(32) double lanes[4];
      _mm256_store_pd(lanes, val);
      out[(p + 0) * c + k] = lanes[0];
      out[(p + 1) * c + k] = lanes[1];
      out[(p + 2) * c + k] = lanes[2];
      out[(p + 3) * c + k] = lanes[3];
    }
  }
  if (n4 < n_px) {
    scalar_table().bilinear_gather(src, h, w, c, x + n4, y + n4, mask + n4,
                                   out + n4 * c, n_px - n4);
  }
}

void conv3x3s2_relu_avx2(const double* in, int ih, int iw, int ic,
                         const double* weights, int oc, double* out, int oh,
                         int ow) {
  const int ic4 = ic & ~3;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int o = 0; o < oc; ++o) {
        __m256d acc = _mm256_setzero_pd();
        double tail = 0;
        const double* wbase = weights + static_cast<std::size_t>(o) * 9 * ic;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= ih) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= iw) continue;
            const double* ip = in + (static_cast<std::size_t>(iy) * iw + ix) * ic;
            const double* wp = wbase + (ky * 3 + kx) * ic;
            for (int k = 0; k < ic4; k += 4) {
              acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(ip + k),
                                                     _mm256_loadu_pd(wp + k)));
            }
            for (int k = ic4; k < ic; ++k) tail += ip[k] * wp[k];
          }
        }
        const double a = hsum(acc) + tail;
        out[(static_cast<std::size_t>(oy) * ow + ox) * oc + o] = a > 0.0 ? a : 0.0;
      }
    }
  }
}

void conv3x3s2_relu_bwd_avx2(const double* gout, const double* act, int oh,
                             int ow, int oc, const double* weights, int ic,
                             double* gin, int ih, int iw) {
  const int ic4 = ic & ~3;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int o = 0; o < oc; ++o) {
        const std::size_t oidx = (static_cast<std::size_t>(oy) * ow + ox) * oc + o;
        if (!(act[oidx] > 0.0)) continue;
        const double g = gout[oidx];
        if (g == 0.0) continue;
        const __m256d vg = _mm256_set1_pd(g);
        const double* wbase = weights + static_cast<std::size_t>(o) * 9 * ic;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= ih) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= iw) continue;
            double* gp = gin + (static_cast<std::size_t>(iy) * iw + ix) * ic;
            const double* wp = wbase + (ky * 3 + kx) * ic;
            for (int k = 0; k < ic4; k += 4) {
              __m256d t = _mm256_add_pd(_mm256_loadu_pd(gp + k),
                                        _mm256_mul_pd(vg, _mm256_loadu_pd(wp + k)));
              _mm256_storeu_pd(gp + k, t);
            }
            for (int k = ic4; k < ic; ++k) gp[k] += g * wp[k];
          }
        }
      }
    }
  }
}

void dense_fwd_avx2(const double* W, int rows, int cols, const double* in,
                    double* out) {
  for (int r = 0; r < rows; ++r) {
    out[r] = dot_avx2(W + static_cast<std::size_t>(r) * cols, in, cols);
  }
}

void dense_bwd_avx2(const double* W, int rows, int cols, const double* cot,
                    double* gin) {
  for (int r = 0; r < rows; ++r) {
    axpy_avx2(gin, cot[r], W + static_cast<std::size_t>(r) * cols, cols);
  }
}

double tv_forward_avx2(const double* img, int h, int w, int c, double eps2,
                       double* sden) {
  __m256d lanes = _mm256_setzero_pd();
  double tail = 0;
  const __m256d veps2 = _mm256_set1_pd(eps2);
  const std::size_t stride_v = static_cast<std::size_t>(w) * c;
  for (int i = 0; i < h; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * stride_v;
    const bool has_v = i + 1 < h;
    const std::size_t interior = static_cast<std::size_t>(w - 1) * c;
    const std::size_t nblk = interior & ~std::size_t{3};
    for (std::size_t m = 0; m < nblk; m += 4) {
      const std::size_t k = row + m;
      __m256d v = _mm256_loadu_pd(img + k);
      __m256d dv = has_v ? _mm256_sub_pd(v, _mm256_loadu_pd(img + k + stride_v))
                         : _mm256_setzero_pd();
      __m256d dh = _mm256_sub_pd(v, _mm256_loadu_pd(img + k + c));
      __m256d r = _mm256_add_pd(_mm256_mul_pd(dv, dv), _mm256_mul_pd(dh, dh));
      lanes = _mm256_add_pd(lanes, _mm256_sqrt_pd(r));
      if (sden) _mm256_storeu_pd(sden + k, _mm256_sqrt_pd(_mm256_add_pd(r, veps2)));
    }
    for (std::size_t m = nblk; m < interior; ++m) {
      const std::size_t k = row + m;
      const double dv = has_v ? img[k] - img[k + stride_v] : 0.0;
      const double dh = img[k] - img[k + c];
      const double r = dv * dv + dh * dh;
      tail += std::sqrt(r);
      if (sden) sden[k] = std::sqrt(r + eps2);
    }
    for (std::size_t m = interior; m < stride_v; ++m) {
      const std::size_t k = row + m;
      const double dv = has_v ? img[k] - img[k + stride_v] : 0.0;
      const double r = dv * dv;
      tail += std::sqrt(r);
      if (sden) sden[k] = std::sqrt(r + eps2);
    }
  }
  return hsum(lanes) + tail;
}

void tv_grad_avx2(const double* img, int h, int w, int c, const double* sden,
                  double* g) {
  const std::size_t stride_v = static_cast<std::size_t>(w) * c;
  for (int i = 0; i < h; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * stride_v;
    const bool has_v = i + 1 < h;
    const bool has_up = i > 0;
    const std::size_t interior = static_cast<std::size_t>(w - 1) * c;
    // Vector region: left neighbor and horizontal difference both exist.
    const std::size_t lo = static_cast<std::size_t>(c);
    std::size_t m = 0;
    auto scalar_one = [&](std::size_t mm) {
      const std::size_t k = row + mm;
      const double dv = has_v ? img[k] - img[k + stride_v] : 0.0;
      const double dh = (mm < interior) ? img[k] - img[k + c] : 0.0;
      double acc = (dv + dh) / sden[k];
      if (has_up) {
        const std::size_t up = k - stride_v;
        acc -= (img[up] - img[k]) / sden[up];
      }
      if (mm >= lo) {
        const std::size_t left = k - c;
        acc -= (img[left] - img[k]) / sden[left];
      }
      g[k] = acc;
    };
    for (; m < lo && m < stride_v; ++m) scalar_one(m);
    if (interior > lo) {
      const std::size_t span = interior - lo;
      const std::size_t nblk = span & ~std::size_t{3};
      for (std::size_t b = 0; b < nblk; b += 4) {
        const std::size_t k = row + lo + b;
        __m256d v = _mm256_loadu_pd(img + k);
        __m256d dv = has_v ? _mm256_sub_pd(v, _mm256_loadu_pd(img + k + stride_v))
                           : _mm256_setzero_pd();
        __m256d dh = _mm256_sub_pd(v, _mm256_loadu_pd(img + k + c));
        __m256d acc = _mm256_div_pd(_mm256_add_pd(dv, dh), _mm256_loadu_pd(sden + k));
        if (has_up) {
          __m256d dup = _mm256_sub_pd(_mm256_loadu_pd(img + k - stride_v), v);
          acc = _mm256_sub_pd(acc, _mm256_div_pd(dup, _mm256_loadu_pd(sden + k - stride_v)));
        }
        __m256d dleft = _mm256_sub_pd(_mm256_loadu_pd(img + k - c), v);
        acc = _mm256_sub_pd(acc, _mm256_div_pd(dleft, _mm256_loadu_pd(sden + k - c)));
        _mm256_storeu_pd(g + k, acc);
      }
      m = lo + nblk;
    }
    for (; m < stride_v; ++m) scalar_one(m);
  }
}

const Table kAvx2Table = {
    "avx2",
    sum_avx2,
    abs_sum_avx2,
    dot_avx2,
    clip01_avx2,
    axpy_avx2,
    scale_avx2,
    momentum_update_avx2,
    sign_step_clip_avx2,
    bilinear_gather_avx2,
    nullptr,  // bilinear_scatter: shared scalar implementation, set below
    conv3x3s2_relu_avx2,
    conv3x3s2_relu_bwd_avx2,
    dense_fwd_avx2,
    dense_bwd_avx2,
    tv_forward_avx2,
    tv_grad_avx2,
};

Table make_avx2_table() {
  Table t = kAvx2Table;
  t.bilinear_scatter = scalar_table().bilinear_scatter;
  return t;
}

}  // namespace

const Table* avx2_table() {
  static const bool supported = __builtin_cpu_supports("avx2");
  if (!supported) return nullptr;
  static const Table t = make_avx2_table();
  return &t;
}

}  // namespace advsticker::kernels

#else  // non-x86: no AVX2 variant

namespace advsticker::kernels {
const Table* avx2_table() { return nullptr; }
}  // namespace advsticker::kernels

#endif
