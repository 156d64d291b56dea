#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "xfdd/matrix.hpp"

namespace xfdd {

enum class ActivationKind { kTanh, kLinear };

std::string to_string(ActivationKind kind);
ActivationKind activation_from_string(const std::string& name);

// Supervised-autoencoder topology: encoder input_dim -> encoder_widths (the
// last one is the latent width), decoder latent -> decoder_widths (ending at
// input_dim), classifier latent -> num_classes logits.
struct NetworkSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> encoder_widths;
  std::vector<std::size_t> decoder_widths;
  std::size_t num_classes = 2;
  ActivationKind hidden_activation = ActivationKind::kTanh;
  ActivationKind reconstruction_activation = ActivationKind::kLinear;
  std::uint64_t seed = 0;

  std::size_t latent_dim() const { return encoder_widths.back(); }

  // Throws ConfigError on zero widths, an empty encoder or a decoder that
  // does not end at input_dim.
  void validate() const;

  // e.g. "52-5-10*-10-5-52"; the asterisk marks the latent layer feeding the
  // classifier.
  std::string architecture_string() const;

  // Decoder mirrors the encoder: encoder [5, 10] on 52 inputs gives
  // decoder [5, 52].
  static NetworkSpec mirrored(std::size_t input_dim, std::vector<std::size_t> encoder_widths,
                              std::size_t num_classes, std::uint64_t seed);

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// Affine layer y = W x + b with W stored (out x in).
struct DenseLayer {
  Matrix weights;
  std::vector<double> bias;

  std::size_t in_dim() const { return weights.cols(); }
  std::size_t out_dim() const { return weights.rows(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

// Parameter blocks of the three sub-networks. Also used for gradients and
// optimizer moments, which share the layout.
struct Parameters {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  DenseLayer classifier;

  // Visits every layer with a stable name such as "encoder[0]".
  void for_each(const std::function<void(const std::string&, DenseLayer&)>& fn);
  void for_each(const std::function<void(const std::string&, const DenseLayer&)>& fn) const;

  // Same shapes, every value zero.
  Parameters zeros_like() const;

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

struct Model {
  NetworkSpec spec;
  Parameters params;

  friend bool operator==(const Model&, const Model&) = default;
};

using Gradients = Parameters;

// Intermediate values of one forward pass over a batch.
struct ForwardCache {
  // encoder_acts[0] is the input batch; encoder_acts[k+1] = f(encoder_pre[k]).
  std::vector<Matrix> encoder_pre;
  std::vector<Matrix> encoder_acts;
  // decoder_acts[0] is the latent batch.
  std::vector<Matrix> decoder_pre;
  std::vector<Matrix> decoder_acts;
  Matrix logits;
  Matrix probs;

  const Matrix& input() const { return encoder_acts.front(); }
  const Matrix& latent() const { return encoder_acts.back(); }
  const Matrix& reconstruction() const { return decoder_acts.back(); }

  friend bool operator==(const ForwardCache&, const ForwardCache&) = default;
};

}  // namespace xfdd
