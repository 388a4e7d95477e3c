#pragma once

// Dense row-major image container plus the handful of pixel-level operations
// the warping pipeline is built from. Intensities are doubles in [0, 1];
// pixel (0, 0) is the top-left pixel center, x grows rightward (columns),
// y grows downward (rows).

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "advsticker/errors.hpp"

namespace advsticker {

struct ImageBuffer {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;  // height * width * channels, row-major

  ImageBuffer() = default;
  ImageBuffer(int h, int w, int c, double fill = 0.0)
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t size() const { return data.size(); }

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  bool same_shape(const ImageBuffer& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

// P6 binary PPM, maxval 255. Loading maps byte b to b/255 exactly; saving
// quantizes intensity v to round-half-up(v*255) clamped to [0, 255], which
// makes save/load bit-stable across runs and platforms.
ImageBuffer load_ppm(const std::string& path);
void save_ppm(const ImageBuffer& img, const std::string& path);

// Elementwise clamp to [0, 1].
ImageBuffer clip01(const ImageBuffer& img);
void clip01_inplace(ImageBuffer& img);

// Overlay wins where mask is true, base elsewhere. mask has height*width
// entries (one per pixel, shared across channels).
ImageBuffer composite(const ImageBuffer& base, const ImageBuffer& overlay,
                      const std::vector<std::uint8_t>& mask);

// VJP of composite: routes the output cotangent to the overlay inside the
// mask and to the base outside it.
struct CompositeVjp {
  ImageBuffer d_base;
  ImageBuffer d_overlay;
};
CompositeVjp composite_vjp(const ImageBuffer& cotangent,
                           const std::vector<std::uint8_t>& mask);

// Byte value for one intensity under the save_ppm quantization rule.
std::uint8_t quantize_byte(double v);

}  // namespace advsticker
