#include "advsticker/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "advsticker/kernels.hpp"

namespace advsticker {

namespace {

// Reads one whitespace/comment-delimited decimal token from a P6 header.
int read_header_int(std::istream& in, const std::string& path) {
  int ch = in.get();
  // Skip whitespace and '#' comments (comments run to end of line).
  while (ch != EOF && (std::isspace(ch) || ch == '#')) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) {
    throw ParseError(path + ": malformed PPM header (expected integer)");
  }
  long value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    if (value > 1 << 30) throw ParseError(path + ": PPM header value out of range");
    ch = in.get();
  }
  if (ch != EOF) in.unget();
  return static_cast<int>(value);
}

}  // namespace

ImageBuffer load_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");

  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '6') {
    throw ParseError(path + ": not a P6 PPM file");
  }
  const int width = read_header_int(in, path);
  const int height = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  if (width <= 0 || height <= 0) {
    throw ParseError(path + ": malformed PPM header (non-positive dimensions)");
  }
  if (maxval != 255) {
    throw ParseError(path + ": unsupported PPM maxval " + std::to_string(maxval));
  }
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep)) {
    throw ParseError(path + ": malformed PPM header (missing separator)");
  }

  const std::size_t n_bytes = static_cast<std::size_t>(width) * height * 3;
  std::vector<unsigned char> bytes(n_bytes);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n_bytes));
  if (static_cast<std::size_t>(in.gcount()) != n_bytes) {
    throw ParseError(path + ": truncated PPM payload");
  }

  ImageBuffer img(height, width, 3);
  for (std::size_t i = 0; i < n_bytes; ++i) {
    img.data[i] = static_cast<double>(bytes[i]) / 255.0;
  }
  return img;
}

std::uint8_t quantize_byte(double v) {
  double q = std::floor(v * 255.0 + 0.5);  // round half up
  if (q < 0.0) q = 0.0;
  if (q > 255.0) q = 255.0;
  return static_cast<std::uint8_t>(q);
}

void save_ppm(const ImageBuffer& img, const std::string& path) {
  if (img.channels != 3) {
    throw ShapeError("save_ppm: image must have 3 channels, got " +
                     std::to_string(img.channels));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");

  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) bytes[i] = quantize_byte(img.data[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path + ": write failed");
}

ImageBuffer clip01(const ImageBuffer& img) {
  ImageBuffer out = img;
  clip01_inplace(out);
  return out;
}

void clip01_inplace(ImageBuffer& img) {
  kernels::active().clip01(img.data.data(), img.size());
}

ImageBuffer composite(const ImageBuffer& base, const ImageBuffer& overlay,
                      const std::vector<std::uint8_t>& mask) {
  if (!base.same_shape(overlay)) {
    throw ShapeError("composite: base and overlay shapes differ");
  }
  if (mask.size() != static_cast<std::size_t>(base.height) * base.width) {
    throw ShapeError("composite: mask size does not match image plane");
  }
  ImageBuffer out = base;
  const int c = base.channels;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (mask[p]) {
      for (int k = 0; k < c; ++k) out.data[p * c + k] = overlay.data[p * c + k];
    }
  }
  return out;
}

CompositeVjp composite_vjp(const ImageBuffer& cotangent,
                           const std::vector<std::uint8_t>& mask) {
  if (mask.size() != static_cast<std::size_t>(cotangent.height) * cotangent.width) {
    throw ShapeError("composite_vjp: mask size does not match cotangent plane");
  }
  CompositeVjp out;
  out.d_base = ImageBuffer(cotangent.height, cotangent.width, cotangent.channels);
  out.d_overlay = ImageBuffer(cotangent.height, cotangent.width, cotangent.channels);
  const int c = cotangent.channels;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    ImageBuffer& dst = mask[p] ? out.d_overlay : out.d_base;
    for (int k = 0; k < c; ++k) dst.data[p * c + k] = cotangent.data[p * c + k];
  }
  return out;
}

}  // namespace advsticker
