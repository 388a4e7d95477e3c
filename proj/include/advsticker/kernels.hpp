#pragma once

// Data-parallel inner loops behind the image pipeline, in two variants:
// portable scalar reference kernels and AVX2 kernels selected at runtime.
//
// The two variants are bit-compatible by construction, so kernel selection
// never changes results:
//   - no FMA contraction anywhere (the build disables it globally and the
//     AVX2 kernels use explicit mul/add),
//   - reductions accumulate into four interleaved partial sums (lane j takes
//     elements j, j+4, j+8, ...) combined as (l0+l2)+(l1+l3), then fold the
//     remainder tail in index order; the scalar reference implements the
//     same schedule,
//   - per-element kernels evaluate the same expression tree per element.
// Scatter-style accumulations (bilinear backward, conv backward) stay scalar
// in both tables: adjacent outputs write overlapping inputs, so lanes cannot
// be committed independently.

#include <cstddef>
#include <cstdint>

namespace advsticker::kernels {

struct Table {
  const char* name;

  // Reductions (fixed 4-lane schedule).
  double (*sum)(const double* x, std::size_t n);
  double (*abs_sum)(const double* x, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);

  // Elementwise.
  void (*clip01)(double* x, std::size_t n);
  // y += s * x
  void (*axpy)(double* y, double s, const double* x, std::size_t n);
  void (*scale)(double* x, double s, std::size_t n);
  // m = mu*m + scale*g
  void (*momentum_update)(double* m, const double* g, double mu, double scale,
                          std::size_t n);
  // x = clamp01(x - alpha * sign(m)), sign(0) = 0
  void (*sign_step_clip)(double* x, const double* m, double alpha, std::size_t n);

  // Bilinear gather: out[p*c+k] = lerp of the 4 neighbors of (x[p], y[p]) in
  // src (coordinates clamped to the image), 0 where mask[p] == 0.
  void (*bilinear_gather)(const double* src, int h, int w, int c,
                          const double* x, const double* y,
                          const std::uint8_t* mask, double* out, std::size_t n_px);

  // Bilinear scatter-add of cot through the same weights into dst.
  void (*bilinear_scatter)(double* dst, int h, int w, int c, const double* x,
                           const double* y, const std::uint8_t* mask,
                           const double* cot, std::size_t n_px);

  // 3x3 stride-2 zero-pad-1 convolution over HWC data, fused ReLU.
  // weights layout: [oc][ky][kx][ic], ic contiguous.
  void (*conv3x3s2_relu)(const double* in, int ih, int iw, int ic,
                         const double* weights, int oc, double* out, int oh, int ow);

  // Input gradient of conv3x3s2_relu; `act` is the forward output (its sign
  // pattern gates the ReLU). gin must be zero-initialized.
  void (*conv3x3s2_relu_bwd)(const double* gout, const double* act, int oh, int ow,
                             int oc, const double* weights, int ic, double* gin,
                             int ih, int iw);

  // out[r] = dot(W[r, :], in); W row-major rows x cols.
  void (*dense_fwd)(const double* W, int rows, int cols, const double* in,
                    double* out);
  // gin += W^T cot. gin must be zero-initialized by the caller.
  void (*dense_bwd)(const double* W, int rows, int cols, const double* cot,
                    double* gin);

  // Isotropic total variation of an HWC image: sum over (i, j, k) of
  // sqrt(dv^2 + dh^2) with forward differences, boundary differences 0.
  // If sden != nullptr it receives sqrt(dv^2 + dh^2 + eps2) per element for
  // the gradient pass.
  double (*tv_forward)(const double* img, int h, int w, int c, double eps2,
                       double* sden);
  // g[k] = d TV / d img[k] using the regularized denominators from sden.
  void (*tv_grad)(const double* img, int h, int w, int c, const double* sden,
                  double* g);
};

// Scalar reference table; always available.
const Table& scalar_table();

// AVX2 table, or nullptr when unsupported by the CPU or not compiled in.
const Table* avx2_table();

// Active table: AVX2 when available unless overridden by the environment
// variable ADVSTICKER_SIMD (values: "auto", "scalar", "avx2").
const Table& active();

// Force a table (tests use this to compare variants). nullptr restores auto.
void set_active_for_testing(const Table* t);

}  // namespace advsticker::kernels
