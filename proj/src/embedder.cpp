#include "advsticker/embedder.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "advsticker/kernels.hpp"
#include "advsticker/rng.hpp"

namespace advsticker {

namespace {

void fill_layer(std::vector<double>& w, std::size_t count, int fan_in,
                CounterRng& rng) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < count; ++i) {
    w.push_back((2.0 * rng.next_double() - 1.0) * scale);
  }
}

class LinearEmbedder final : public Embedder {
 public:
  explicit LinearEmbedder(const EmbedderConfig& cfg) : Embedder(cfg) {
    const std::size_t cols = static_cast<std::size_t>(cfg.input_h) * cfg.input_w *
                             cfg.input_c;
    CounterRng rng(cfg.seed, RngStream::kWeights);
    weights_.reserve(static_cast<std::size_t>(cfg.dim) * cols);
    fill_layer(weights_, static_cast<std::size_t>(cfg.dim) * cols,
               static_cast<int>(cols), rng);
  }

  Embedding embed(const ImageBuffer& img) const override {
    check_input(img);
    Embedding out;
    out.v.resize(cfg_.dim);
    const int cols = cfg_.input_h * cfg_.input_w * cfg_.input_c;
    kernels::active().dense_fwd(weights_.data(), cfg_.dim, cols, img.data.data(),
                                out.v.data());
    return out;
  }

  ImageBuffer embed_vjp(const ImageBuffer& img,
                        std::span<const double> cotangent) const override {
    check_input(img);
    if (cotangent.size() != static_cast<std::size_t>(cfg_.dim)) {
      throw ShapeError("embed_vjp: cotangent dimension mismatch");
    }
    ImageBuffer g(cfg_.input_h, cfg_.input_w, cfg_.input_c);
    const int cols = cfg_.input_h * cfg_.input_w * cfg_.input_c;
    kernels::active().dense_bwd(weights_.data(), cfg_.dim, cols, cotangent.data(),
                                g.data.data());
    return g;
  }

  const std::vector<double>& weights() const override { return weights_; }

 private:
  std::vector<double> weights_;
};

struct ConvShape {
  int ih, iw, ic, oc;
  int oh() const { return (ih + 2 - 3) / 2 + 1; }
  int ow() const { return (iw + 2 - 3) / 2 + 1; }
  std::size_t weight_count() const { return static_cast<std::size_t>(oc) * 9 * ic; }
};

class ToyCnnEmbedder final : public Embedder {
 public:
  explicit ToyCnnEmbedder(const EmbedderConfig& cfg) : Embedder(cfg) {
    static constexpr std::array<int, 4> kChannels = {8, 16, 32, 64};
    int h = cfg.input_h, w = cfg.input_w, c = cfg.input_c;
    for (int ch : kChannels) {
      ConvShape s{h, w, c, ch};
      shapes_.push_back(s);
      h = s.oh();
      w = s.ow();
      c = ch;
    }
    CounterRng rng(cfg.seed, RngStream::kWeights);
    std::size_t total = 0;
    for (const auto& s : shapes_) total += s.weight_count();
    total += static_cast<std::size_t>(cfg.dim) * shapes_.back().oc;
    weights_.reserve(total);
    layer_off_.clear();
    for (const auto& s : shapes_) {
      layer_off_.push_back(weights_.size());
      fill_layer(weights_, s.weight_count(), 9 * s.ic, rng);
    }
    dense_off_ = weights_.size();
    fill_layer(weights_, static_cast<std::size_t>(cfg.dim) * shapes_.back().oc,
               shapes_.back().oc, rng);
  }

  Embedding embed(const ImageBuffer& img) const override {
    std::vector<ImageBuffer> acts;
    return forward(img, acts);
  }

  ImageBuffer embed_vjp(const ImageBuffer& img,
                        std::span<const double> cotangent) const override {
    if (cotangent.size() != static_cast<std::size_t>(cfg_.dim)) {
      throw ShapeError("embed_vjp: cotangent dimension mismatch");
    }
    std::vector<ImageBuffer> acts;
    forward(img, acts);
    const auto& k = kernels::active();
    const ImageBuffer& last = acts.back();
    const int feat = last.channels;
    const double inv_px = 1.0 / (static_cast<double>(last.height) * last.width);

    // Dense, then undo the global average pooling (uniform spread).
    std::vector<double> d_feat(feat, 0.0);
    k.dense_bwd(weights_.data() + dense_off_, cfg_.dim, feat, cotangent.data(),
                d_feat.data());
    ImageBuffer d_act(last.height, last.width, feat);
    for (int y = 0; y < last.height; ++y) {
      for (int x = 0; x < last.width; ++x) {
        for (int c = 0; c < feat; ++c) {
          d_act.at(y, x, c) = d_feat[c] * inv_px;
        }
      }
    }

    for (int layer = static_cast<int>(shapes_.size()) - 1; layer >= 0; --layer) {
      const ConvShape& s = shapes_[layer];
      const ImageBuffer& input = layer == 0 ? img : acts[layer - 1];
      ImageBuffer d_in(input.height, input.width, input.channels);
      k.conv3x3s2_relu_bwd(d_act.data.data(), acts[layer].data.data(), s.oh(),
                           s.ow(), s.oc, weights_.data() + layer_off_[layer], s.ic,
                           d_in.data.data(), s.ih, s.iw);
      d_act = std::move(d_in);
    }
    return d_act;
  }

  const std::vector<double>& weights() const override { return weights_; }

  std::uint64_t activation_signature(const ImageBuffer& img) const override {
    std::vector<ImageBuffer> acts;
    forward(img, acts);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& a : acts) {
      for (double v : a.data) {
        h ^= v > 0.0 ? 0x9E3779B97F4A7C15ull : 0x2545F4914F6CDD1Dull;
        h *= 0x100000001B3ull;
      }
    }
    return h;
  }

 private:
  Embedding forward(const ImageBuffer& img, std::vector<ImageBuffer>& acts) const {
    check_input(img);
    const auto& k = kernels::active();
    acts.clear();
    const ImageBuffer* cur = &img;
    for (std::size_t layer = 0; layer < shapes_.size(); ++layer) {
      const ConvShape& s = shapes_[layer];
      ImageBuffer out(s.oh(), s.ow(), s.oc);
      k.conv3x3s2_relu(cur->data.data(), s.ih, s.iw, s.ic,
                       weights_.data() + layer_off_[layer], s.oc, out.data.data(),
                       s.oh(), s.ow());
      acts.push_back(std::move(out));
      cur = &acts.back();
    }
    const ImageBuffer& last = acts.back();
    const int feat = last.channels;
    std::vector<double> pooled(feat, 0.0);
    for (int y = 0; y < last.height; ++y) {
      for (int x = 0; x < last.width; ++x) {
        for (int c = 0; c < feat; ++c) pooled[c] += last.at(y, x, c);
      }
    }
    const double inv_px = 1.0 / (static_cast<double>(last.height) * last.width);
    for (double& v : pooled) v *= inv_px;

    Embedding out;
    out.v.resize(cfg_.dim);
    kernels::active().dense_fwd(weights_.data() + dense_off_, cfg_.dim, feat,
                                pooled.data(), out.v.data());
    return out;
  }

  std::vector<ConvShape> shapes_;
  std::vector<std::size_t> layer_off_;
  std::size_t dense_off_ = 0;
  std::vector<double> weights_;
};

void write_u32_le(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xFF),
      static_cast<unsigned char>((v >> 8) & 0xFF),
      static_cast<unsigned char>((v >> 16) & 0xFF),
      static_cast<unsigned char>((v >> 24) & 0xFF)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParseError(path + ": truncated weight dump header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

constexpr std::uint32_t kWeightMagic = 0x31574541u;  // "AEW1" little-endian

}  // namespace

void Embedder::check_input(const ImageBuffer& img) const {
  if (img.height != cfg_.input_h || img.width != cfg_.input_w ||
      img.channels != cfg_.input_c) {
    throw ShapeError("embedder input must be " + std::to_string(cfg_.input_h) + "x" +
                     std::to_string(cfg_.input_w) + "x" +
                     std::to_string(cfg_.input_c));
  }
}

std::string Embedder::label() const {
  const char* kind = cfg_.kind == EmbedderKind::kLinear ? "linear" : "toy_cnn";
  return std::string(kind) + "-s" + std::to_string(cfg_.seed);
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
  switch (cfg.kind) {
    case EmbedderKind::kLinear:
      return std::make_unique<LinearEmbedder>(cfg);
    case EmbedderKind::kToyCnn:
      return std::make_unique<ToyCnnEmbedder>(cfg);
  }
  throw ConfigError("unknown embedder kind");
}

void dump_weights(const Embedder& e, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  write_u32_le(out, kWeightMagic);
  write_u32_le(out, static_cast<std::uint32_t>(e.config().kind));
  write_u32_le(out, e.config().seed);
  write_u32_le(out, static_cast<std::uint32_t>(e.config().dim));
  for (double w : e.weights()) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(w);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
  }
  if (!out) throw IoError(path + ": write failed");
}

WeightDump load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  if (read_u32_le(in, path) != kWeightMagic) {
    throw ParseError(path + ": bad weight dump magic");
  }
  WeightDump dump;
  const std::uint32_t kind = read_u32_le(in, path);
  if (kind != 1 && kind != 2) throw ParseError(path + ": unknown embedder kind");
  dump.cfg.kind = static_cast<EmbedderKind>(kind);
  dump.cfg.seed = read_u32_le(in, path);
  dump.cfg.dim = static_cast<int>(read_u32_le(in, path));
  unsigned char b[8];
  while (in.read(reinterpret_cast<char*>(b), 8)) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    dump.weights.push_back(std::bit_cast<double>(bits));
  }
  if (in.gcount() != 0) throw ParseError(path + ": truncated weight payload");
  return dump;
}

double cosine_sim(const Embedding& u, const Embedding& v) {
  if (u.v.size() != v.v.size()) throw ShapeError("cosine_sim: dimension mismatch");
  const auto& k = kernels::active();
  const double nu = std::sqrt(k.dot(u.v.data(), u.v.data(), u.v.size()));
  const double nv = std::sqrt(k.dot(v.v.data(), v.v.data(), v.v.size()));
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine_sim: zero-norm embedding");
  double c = k.dot(u.v.data(), v.v.data(), u.v.size()) / (nu * nv);
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

std::vector<double> cosine_sim_grad_u(const Embedding& u, const Embedding& v) {
  if (u.v.size() != v.v.size()) throw ShapeError("cosine_sim: dimension mismatch");
  const auto& k = kernels::active();
  const std::size_t n = u.v.size();
  const double nu2 = k.dot(u.v.data(), u.v.data(), n);
  const double nv2 = k.dot(v.v.data(), v.v.data(), n);
  const double nu = std::sqrt(nu2);
  const double nv = std::sqrt(nv2);
  if (nu == 0.0 || nv == 0.0) throw NumericError("cosine_sim: zero-norm embedding");
  const double uv = k.dot(u.v.data(), v.v.data(), n);
  const double c1 = 1.0 / (nu * nv);
  const double c2 = uv / (nu2 * nu * nv);
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = v.v[i] * c1 - u.v[i] * c2;
  return g;
}

}  // namespace advsticker
