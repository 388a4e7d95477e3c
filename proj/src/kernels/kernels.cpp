#include "advsticker/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

namespace advsticker::kernels {

namespace {

// ---------------------------------------------------------------------------
// Reductions. Lane j accumulates elements j, j+4, j+8, ...; the lanes are
// combined as (l0+l2)+(l1+l3) and the tail is folded afterwards in index
// order. The AVX2 kernels realize the identical schedule with one vector
// accumulator, so both variants produce the same bits.
// ---------------------------------------------------------------------------

double sum_scalar(const double* x, std::size_t n) {
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    l0 += x[i];
    l1 += x[i + 1];
    l2 += x[i + 2];
    l3 += x[i + 3];
  }
  double acc = (l0 + l2) + (l1 + l3);
  for (std::size_t i = n4; i < n; ++i) acc += x[i];
  return acc;
}

double abs_sum_scalar(const double* x, std::size_t n) {
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    l0 += std::fabs(x[i]);
    l1 += std::fabs(x[i + 1]);
    l2 += std::fabs(x[i + 2]);
    l3 += std::fabs(x[i + 3]);
  }
  double acc = (l0 + l2) + (l1 + l3);
  for (std::size_t i = n4; i < n; ++i) acc += std::fabs(x[i]);
  return acc;
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0;
  const std::size_t n4 = n & ~std::size_t{3};
  for (std::size_t i = 0; i < n4; i += 4) {
    l0 += a[i] * b[i];
    l1 += a[i + 1] * b[i + 1];
    l2 += a[i + 2] * b[i + 2];
    l3 += a[i + 3] * b[i + 3];
  }
  double acc = (l0 + l2) + (l1 + l3);
  for (std::size_t i = n4; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

// ---------------------------------------------------------------------------
// Elementwise.
// ---------------------------------------------------------------------------

void clip01_scalar(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = x[i];
    v = v < 0.0 ? 0.0 : v;
    v = v > 1.0 ? 1.0 : v;
    x[i] = v;
  }
}

void axpy_scalar(double* y, double s, const double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += s * x[i];
}

void scale_scalar(double* x, double s, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

void momentum_update_scalar(double* m, const double* g, double mu, double scale,
                            std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) m[i] = mu * m[i] + scale * g[i];
}

void sign_step_clip_scalar(double* x, const double* m, double alpha, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    if (m[i] > 0.0) s = 1.0;
    if (m[i] < 0.0) s = -1.0;
    double v = x[i] - alpha * s;
    v = v < 0.0 ? 0.0 : v;
    v = v > 1.0 ? 1.0 : v;
    x[i] = v;
  }
}

// ---------------------------------------------------------------------------
// Bilinear sampling. Coordinates are clamped to [0, dim-1] before the cell
// is located; the four taps combine as (v00*w00 + v01*w01) + (v10*w10 +
// v11*w11), the order the AVX2 kernel reproduces.
// ---------------------------------------------------------------------------

inline double clampd(double v, double lo, double hi) {
  v = v < lo ? lo : v;
  return v > hi ? hi : v;
}

void bilinear_gather_scalar(const double* src, int h, int w, int c,
                            const double* x, const double* y,
                            const std::uint8_t* mask, double* out,
                            std::size_t n_px) {
  for (std::size_t p = 0; p < n_px; ++p) {
    if (!mask[p]) {
      for (int k = 0; k < c; ++k) out[p * c + k] = 0.0;
      continue;
    }
    const double xc = clampd(x[p], 0.0, w - 1.0);
    const double yc = clampd(y[p], 0.0, h - 1.0);
    const int x0 = static_cast<int>(std::floor(xc));
    const int y0 = static_cast<int>(std::floor(yc));
    const int x1 = x0 + 1 < w ? x0 + 1 : w - 1;
    const int y1 = y0 + 1 < h ? y0 + 1 : h - 1;
    const double fx = xc - x0;
    const double fy = yc - y0;
    const double w00 = (1.0 - fy) * (1.0 - fx);
    const double w01 = (1.0 - fy) * fx;
    const double w10 = fy * (1.0 - fx);
    const double w11 = fy * fx;
    const std::size_t r0 = static_cast<std::size_t>(y0) * w;
    const std::size_t r1 = static_cast<std::size_t>(y1) * w;
    for (int k = 0; k < c; ++k) {
      const double v00 = src[(r0 + x0) * c + k];
      const double v01 = src[(r0 + x1) * c + k];
      const double v10 = src[(r1 + x0) * c + k];
      const double v11 = src[(r1 + x1) * c + k];
      out[p * c + k] = (v00 * w00 + v01 * w01) + (v10 * w10 + v11 * w11);
    }
  }
}

void bilinear_scatter_scalar(double* dst, int h, int w, int c, const double* x,
                             const double* y, const std::uint8_t* mask,
                             const double* cot, std::size_t n_px) {
  for (std::size_t p = 0; p < n_px; ++p) {
    if (!mask[p]) continue;
    const double xc = clampd(x[p], 0.0, w - 1.0);
    const double yc = clampd(y[p], 0.0, h - 1.0);
    const int x0 = static_cast<int>(std::floor(xc));
    const int y0 = static_cast<int>(std::floor(yc));
    const int x1 = x0 + 1 < w ? x0 + 1 : w - 1;
    const int y1 = y0 + 1 < h ? y0 + 1 : h - 1;
    const double fx = xc - x0;
    const double fy = yc - y0;
    const double w00 = (1.0 - fy) * (1.0 - fx);
    const double w01 = (1.0 - fy) * fx;
    const double w10 = fy * (1.0 - fx);
    const double w11 = fy * fx;
    const std::size_t r0 = static_cast<std::size_t>(y0) * w;
    const std::size_t r1 = static_cast<std::size_t>(y1) * w;
    for (int k = 0; k < c; ++k) {
      const double g = cot[p * c + k];
      dst[(r0 + x0) * c + k] += g * w00;
      dst[(r0 + x1) * c + k] += g * w01;
      dst[(r1 + x0) * c + k] += g * w10;
      dst[(r1 + x1) * c + k] += g * w11;
    }
  }
}

// ---------------------------------------------------------------------------
// 3x3 stride-2 convolution, zero padding 1, HWC layout, fused ReLU.
// Per output element the input-channel loop runs in blocks of 4 with lane
// accumulators; sub-4 tails get a separate scalar accumulator appended after
// the lane combine.
// ---------------------------------------------------------------------------

void conv3x3s2_relu_scalar(const double* in, int ih, int iw, int ic,
                           const double* weights, int oc, double* out, int oh,
                           int ow) {
  const int ic4 = ic & ~3;
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int o = 0; o < oc; ++o) {
        double l0 = 0, l1 = 0, l2 = 0, l3 = 0, tail = 0;
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
              l0 += ip[k] * wp[k];
              l1 += ip[k + 1] * wp[k + 1];
              l2 += ip[k + 2] * wp[k + 2];
              l3 += ip[k + 3] * wp[k + 3];
            }
            for (int k = ic4; k < ic; ++k) tail += ip[k] * wp[k];
          }
        }
        const double acc = ((l0 + l2) + (l1 + l3)) + tail;
        out[(static_cast<std::size_t>(oy) * ow + ox) * oc + o] = acc > 0.0 ? acc : 0.0;
      }
    }
  }
}

void conv3x3s2_relu_bwd_scalar(const double* gout, const double* act, int oh,
                               int ow, int oc, const double* weights, int ic,
                               double* gin, int ih, int iw) {
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      for (int o = 0; o < oc; ++o) {
        const std::size_t oidx = (static_cast<std::size_t>(oy) * ow + ox) * oc + o;
        if (!(act[oidx] > 0.0)) continue;  // ReLU gate; subgradient at 0 is 0
        const double g = gout[oidx];
        if (g == 0.0) continue;
        const double* wbase = weights + static_cast<std::size_t>(o) * 9 * ic;
        for (int ky = 0; ky < 3; ++ky) {
          const int iy = 2 * oy - 1 + ky;
          if (iy < 0 || iy >= ih) continue;
          for (int kx = 0; kx < 3; ++kx) {
            const int ix = 2 * ox - 1 + kx;
            if (ix < 0 || ix >= iw) continue;
            double* gp = gin + (static_cast<std::size_t>(iy) * iw + ix) * ic;
            const double* wp = wbase + (ky * 3 + kx) * ic;
            for (int k = 0; k < ic; ++k) gp[k] += g * wp[k];
          }
        }
      }
    }
  }
}

void dense_fwd_scalar(const double* W, int rows, int cols, const double* in,
                      double* out) {
  for (int r = 0; r < rows; ++r) {
    out[r] = dot_scalar(W + static_cast<std::size_t>(r) * cols, in, cols);
  }
}

void dense_bwd_scalar(const double* W, int rows, int cols, const double* cot,
                      double* gin) {
  for (int r = 0; r < rows; ++r) {
    axpy_scalar(gin, cot[r], W + static_cast<std::size_t>(r) * cols, cols);
  }
}

// ---------------------------------------------------------------------------
// Total variation. Element k = (i*w + j)*c + ch owns the term
// sqrt(dv^2 + dh^2) with dv = img[k] - img[k + w*c] (0 on the last row) and
// dh = img[k] - img[k + c] (0 on the last column). The value is exact; the
// gradient divides by sqrt(dv^2 + dh^2 + eps2) so constant regions get a
// well-defined zero subgradient.
// ---------------------------------------------------------------------------

// Reduction schedule: within each row, full 4-blocks of the interior (where
// the horizontal difference exists) feed the lane accumulators; interior
// leftovers and the last column feed a sequential tail accumulator. The AVX2
// variant reproduces the same split.
double tv_forward_scalar(const double* img, int h, int w, int c, double eps2,
                         double* sden) {
  double l0 = 0, l1 = 0, l2 = 0, l3 = 0, tail = 0;
  const std::size_t stride_v = static_cast<std::size_t>(w) * c;
  for (int i = 0; i < h; ++i) {
    const std::size_t row = static_cast<std::size_t>(i) * stride_v;
    const bool has_v = i + 1 < h;
    const std::size_t interior = static_cast<std::size_t>(w - 1) * c;
    const std::size_t nblk = interior & ~std::size_t{3};
    for (std::size_t m = 0; m < nblk; m += 4) {
      const std::size_t k = row + m;
      double term[4];
      for (int l = 0; l < 4; ++l) {
        const double dv = has_v ? img[k + l] - img[k + l + stride_v] : 0.0;
        const double dh = img[k + l] - img[k + l + c];
        const double r = dv * dv + dh * dh;
        term[l] = std::sqrt(r);
        if (sden) sden[k + l] = std::sqrt(r + eps2);
      }
      l0 += term[0];
      l1 += term[1];
      l2 += term[2];
      l3 += term[3];
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
  return ((l0 + l2) + (l1 + l3)) + tail;
}

void tv_grad_scalar(const double* img, int h, int w, int c, const double* sden,
                    double* g) {
  const std::size_t stride_v = static_cast<std::size_t>(w) * c;
  std::size_t k = 0;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      for (int ch = 0; ch < c; ++ch, ++k) {
        const double dv = (i + 1 < h) ? img[k] - img[k + stride_v] : 0.0;
        const double dh = (j + 1 < w) ? img[k] - img[k + c] : 0.0;
        double acc = (dv + dh) / sden[k];
        if (i > 0) {
          const std::size_t up = k - stride_v;
          acc -= (img[up] - img[k]) / sden[up];
        }
        if (j > 0) {
          const std::size_t left = k - c;
          acc -= (img[left] - img[k]) / sden[left];
        }
        g[k] = acc;
      }
    }
  }
}

const Table kScalarTable = {
    "scalar",
    sum_scalar,
    abs_sum_scalar,
    dot_scalar,
    clip01_scalar,
    axpy_scalar,
    scale_scalar,
    momentum_update_scalar,
    sign_step_clip_scalar,
    bilinear_gather_scalar,
    bilinear_scatter_scalar,
    conv3x3s2_relu_scalar,
    conv3x3s2_relu_bwd_scalar,
    dense_fwd_scalar,
    dense_bwd_scalar,
    tv_forward_scalar,
    tv_grad_scalar,
};

const Table* g_override = nullptr;

const Table* pick_table() {
  const char* env = std::getenv("ADVSTICKER_SIMD");
  const std::string mode = env ? env : "auto";
  if (mode == "scalar") return &kScalarTable;
  const Table* avx2 = avx2_table();
  if (mode == "avx2") return avx2 ? avx2 : &kScalarTable;
  return avx2 ? avx2 : &kScalarTable;
}

}  // namespace

const Table& scalar_table() { return kScalarTable; }

const Table& active() {
  if (g_override) return *g_override;
  static const Table* chosen = pick_table();
  return *chosen;
}

void set_active_for_testing(const Table* t) { g_override = t; }

}  // namespace advsticker::kernels
