#include "xfdd/model.hpp"

#include <sstream>

#include "xfdd/errors.hpp"

namespace xfdd {

std::string to_string(ActivationKind kind) {
  return kind == ActivationKind::kTanh ? "tanh" : "linear";
}

ActivationKind activation_from_string(const std::string& name) {
  if (name == "tanh") return ActivationKind::kTanh;
  if (name == "linear") return ActivationKind::kLinear;
  throw ConfigError("unknown activation '" + name + "'");
}

void NetworkSpec::validate() const {
  if (input_dim == 0) throw ConfigError("network input_dim must be >= 1");
  if (encoder_widths.empty()) throw ConfigError("network needs at least one encoder layer");
  if (decoder_widths.empty()) throw ConfigError("network needs at least one decoder layer");
  if (num_classes < 2) throw ConfigError("network needs at least two classes");
  for (auto w : encoder_widths) {
    if (w == 0) throw ConfigError("encoder width 0");
  }
  for (auto w : decoder_widths) {
    if (w == 0) throw ConfigError("decoder width 0");
  }
  if (decoder_widths.back() != input_dim) {
    throw ConfigError("decoder must end at input_dim " + std::to_string(input_dim) + ", ends at " +
                      std::to_string(decoder_widths.back()));
  }
}

std::string NetworkSpec::architecture_string() const {
  std::ostringstream out;
  out << input_dim;
  for (std::size_t i = 0; i < encoder_widths.size(); ++i) {
    out << '-' << encoder_widths[i];
    if (i + 1 == encoder_widths.size()) out << '*';
  }
  out << '-' << latent_dim();
  for (auto w : decoder_widths) out << '-' << w;
  return out.str();
}

NetworkSpec NetworkSpec::mirrored(std::size_t input_dim, std::vector<std::size_t> encoder_widths,
                                  std::size_t num_classes, std::uint64_t seed) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.num_classes = num_classes;
  spec.seed = seed;
  for (std::size_t i = encoder_widths.size(); i-- > 1;) {
    spec.decoder_widths.push_back(encoder_widths[i - 1]);
  }
  spec.decoder_widths.push_back(input_dim);
  spec.encoder_widths = std::move(encoder_widths);
  return spec;
}

void Parameters::for_each(const std::function<void(const std::string&, DenseLayer&)>& fn) {
  for (std::size_t i = 0; i < encoder.size(); ++i) fn("encoder[" + std::to_string(i) + "]", encoder[i]);
  for (std::size_t i = 0; i < decoder.size(); ++i) fn("decoder[" + std::to_string(i) + "]", decoder[i]);
  fn("classifier", classifier);
}

void Parameters::for_each(
    const std::function<void(const std::string&, const DenseLayer&)>& fn) const {
  for (std::size_t i = 0; i < encoder.size(); ++i) fn("encoder[" + std::to_string(i) + "]", encoder[i]);
  for (std::size_t i = 0; i < decoder.size(); ++i) fn("decoder[" + std::to_string(i) + "]", decoder[i]);
  fn("classifier", classifier);
}

Parameters Parameters::zeros_like() const {
  Parameters out = *this;
  out.for_each([](const std::string&, DenseLayer& layer) {
    std::fill(layer.weights.data().begin(), layer.weights.data().end(), 0.0);
    std::fill(layer.bias.begin(), layer.bias.end(), 0.0);
  });
  return out;
}

}  // namespace xfdd
