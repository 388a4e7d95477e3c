#pragma once

// Differentiable bilinear grid sampling: the forward gather and its
// vector-Jacobian products. A SamplingGrid stores, per output pixel, the
// source-image coordinates to read from (pixel units, origin at the center
// of the top-left pixel) and a validity mask; invalid pixels produce 0.
// Out-of-range coordinates are clamped to the image (replicate-edge).

#include <cstdint>
#include <vector>

#include "advsticker/image.hpp"

namespace advsticker {

struct SamplingGrid {
  int out_height = 0;
  int out_width = 0;
  std::vector<double> src_x;        // out_height * out_width
  std::vector<double> src_y;
  std::vector<std::uint8_t> mask;   // 1 = valid

  SamplingGrid() = default;
  SamplingGrid(int h, int w)
      : out_height(h), out_width(w),
        src_x(static_cast<std::size_t>(h) * w, 0.0),
        src_y(static_cast<std::size_t>(h) * w, 0.0),
        mask(static_cast<std::size_t>(h) * w, 1) {}

  std::size_t pixels() const { return src_x.size(); }
};

// Throws NumericError if any valid grid coordinate is NaN.
void validate_grid(const SamplingGrid& grid);

ImageBuffer bilinear_sample(const ImageBuffer& src, const SamplingGrid& grid);

// Full VJP: output-shaped cotangent -> cotangent on src (scatter through the
// four bilinear weights) plus cotangents on the grid coordinates (analytic
// derivative of the weights; zero where the clamp saturates or mask is 0).
struct BilinearVjp {
  ImageBuffer d_src;
  std::vector<double> d_src_x;
  std::vector<double> d_src_y;
};
BilinearVjp bilinear_sample_vjp(const ImageBuffer& src, const SamplingGrid& grid,
                                const ImageBuffer& cotangent);

// Pixel-only VJP used on the attack path, where grids do not depend on the
// optimized sticker: accumulates the scatter into d_src and skips the
// coordinate cotangents.
void bilinear_scatter_into(ImageBuffer& d_src, const SamplingGrid& grid,
                           const ImageBuffer& cotangent);

}  // namespace advsticker
