#pragma once

// Deterministic differentiable embedding models behind one interface, plus
// cosine similarity with its analytic gradient. These stand in for a real
// face-recognition backbone at desk scale: small enough to finite-difference,
// seeded so every platform reproduces the same weights bit for bit.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advsticker/image.hpp"

namespace advsticker {

struct Embedding {
  std::vector<double> v;
};

enum class EmbedderKind : std::uint32_t { kLinear = 1, kToyCnn = 2 };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kToyCnn;
  std::uint32_t seed = 1;
  int input_h = 112;
  int input_w = 112;
  int input_c = 3;
  int dim = 64;
};

class Embedder {
 public:
  explicit Embedder(const EmbedderConfig& cfg) : cfg_(cfg) {}
  virtual ~Embedder() = default;

  const EmbedderConfig& config() const { return cfg_; }
  std::string label() const;

  virtual Embedding embed(const ImageBuffer& img) const = 0;

  // VJP: embedding-shaped cotangent -> image-shaped cotangent.
  virtual ImageBuffer embed_vjp(const ImageBuffer& img,
                                std::span<const double> cotangent) const = 0;

  // All weights, flattened in the documented generation order.
  virtual const std::vector<double>& weights() const = 0;

  // Hash of the rectifier on/off pattern at img; constant (0) for models
  // with no kinks. Finite-difference harnesses compare signatures at the
  // two probe points and skip probes that straddle a kink.
  virtual std::uint64_t activation_signature(const ImageBuffer& img) const {
    (void)img;
    return 0;
  }

 protected:
  void check_input(const ImageBuffer& img) const;
  EmbedderConfig cfg_;
};

// linear: one dense map from the flattened image to the embedding.
// toy_cnn: four stride-2 3x3 conv+ReLU blocks (8, 16, 32, 64 channels),
// global average pooling, dense map to the embedding dimension.
// All weights are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] drawn from
// the counter RNG stream (seed, kWeights) in layer order.
std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg);

// Flat little-endian weight dump with a 16-byte header
// (magic "AEW1", kind u32, seed u32, dim u32) for cross-implementation
// comparison.
void dump_weights(const Embedder& e, const std::string& path);
struct WeightDump {
  EmbedderConfig cfg;  // kind, seed, dim filled from the header
  std::vector<double> weights;
};
WeightDump load_weights(const std::string& path);

// u . v / (|u| |v|), clamped into [-1, 1]. Throws NumericError on zero norm.
double cosine_sim(const Embedding& u, const Embedding& v);

// d cosine_sim / d u = v/(|u||v|) - (u.v) u / (|u|^3 |v|).
std::vector<double> cosine_sim_grad_u(const Embedding& u, const Embedding& v);

}  // namespace advsticker
