#include "advsticker/sampling.hpp"

#include <cmath>

#include "advsticker/kernels.hpp"

namespace advsticker {

void validate_grid(const SamplingGrid& grid) {
  for (std::size_t p = 0; p < grid.pixels(); ++p) {
    if (!grid.mask[p]) continue;
    if (std::isnan(grid.src_x[p]) || std::isnan(grid.src_y[p])) {
      throw NumericError("sampling grid contains NaN at a valid pixel");
    }
  }
}

ImageBuffer bilinear_sample(const ImageBuffer& src, const SamplingGrid& grid) {
  validate_grid(grid);
  ImageBuffer out(grid.out_height, grid.out_width, src.channels);
  kernels::active().bilinear_gather(src.data.data(), src.height, src.width,
                                    src.channels, grid.src_x.data(),
                                    grid.src_y.data(), grid.mask.data(),
                                    out.data.data(), grid.pixels());
  return out;
}

void bilinear_scatter_into(ImageBuffer& d_src, const SamplingGrid& grid,
                           const ImageBuffer& cotangent) {
  if (cotangent.height != grid.out_height || cotangent.width != grid.out_width ||
      cotangent.channels != d_src.channels) {
    throw ShapeError("bilinear_scatter_into: cotangent shape mismatch");
  }
  kernels::active().bilinear_scatter(d_src.data.data(), d_src.height, d_src.width,
                                     d_src.channels, grid.src_x.data(),
                                     grid.src_y.data(), grid.mask.data(),
                                     cotangent.data.data(), grid.pixels());
}

BilinearVjp bilinear_sample_vjp(const ImageBuffer& src, const SamplingGrid& grid,
                                const ImageBuffer& cotangent) {
  if (cotangent.height != grid.out_height || cotangent.width != grid.out_width ||
      cotangent.channels != src.channels) {
    throw ShapeError("bilinear_sample_vjp: cotangent shape mismatch");
  }
  validate_grid(grid);
  BilinearVjp vjp;
  vjp.d_src = ImageBuffer(src.height, src.width, src.channels);
  vjp.d_src_x.assign(grid.pixels(), 0.0);
  vjp.d_src_y.assign(grid.pixels(), 0.0);

  bilinear_scatter_into(vjp.d_src, grid, cotangent);

  // Coordinate cotangents. d out / d x = (1-fy)*(v01-v00) + fy*(v11-v10),
  // d out / d y = (1-fx)*(v10-v00) + fx*(v11-v01); zero when the clamp is
  // saturated (the clamped coordinate no longer responds to the input).
  const int h = src.height, w = src.width, c = src.channels;
  for (std::size_t p = 0; p < grid.pixels(); ++p) {
    if (!grid.mask[p]) continue;
    const double xr = grid.src_x[p];
    const double yr = grid.src_y[p];
    const bool x_active = xr > 0.0 && xr < static_cast<double>(w - 1);
    const bool y_active = yr > 0.0 && yr < static_cast<double>(h - 1);
    if (!x_active && !y_active) continue;
    double xc = xr < 0.0 ? 0.0 : (xr > w - 1.0 ? w - 1.0 : xr);
    double yc = yr < 0.0 ? 0.0 : (yr > h - 1.0 ? h - 1.0 : yr);
    const int x0 = static_cast<int>(std::floor(xc));
    const int y0 = static_cast<int>(std::floor(yc));
    const int x1 = x0 + 1 < w ? x0 + 1 : w - 1;
    const int y1 = y0 + 1 < h ? y0 + 1 : h - 1;
    const double fx = xc - x0;
    const double fy = yc - y0;
    const std::size_t r0 = static_cast<std::size_t>(y0) * w;
    const std::size_t r1 = static_cast<std::size_t>(y1) * w;
    double gx = 0.0, gy = 0.0;
    for (int k = 0; k < c; ++k) {
      const double g = cotangent.data[p * c + k];
      const double v00 = src.data[(r0 + x0) * c + k];
      const double v01 = src.data[(r0 + x1) * c + k];
      const double v10 = src.data[(r1 + x0) * c + k];
      const double v11 = src.data[(r1 + x1) * c + k];
      gx += g * ((1.0 - fy) * (v01 - v00) + fy * (v11 - v10));
      gy += g * ((1.0 - fx) * (v10 - v00) + fx * (v11 - v01));
    }
    if (x_active) vjp.d_src_x[p] = gx;
    if (y_active) vjp.d_src_y[p] = gy;
  }
  return vjp;
}

}  // namespace advsticker
