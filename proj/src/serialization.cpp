#include "xfdd/serialization.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "xfdd/errors.hpp"

namespace xfdd {

using nlohmann::json;

std::string to_string(Mode mode) { return mode == Mode::kDetect ? "detect" : "diagnose"; }

Mode mode_from_string(const std::string& name) {
  if (name == "detect") return Mode::kDetect;
  if (name == "diagnose") return Mode::kDiagnose;
  throw ConfigError("unknown mode '" + name + "'");
}

void ModelBundle::check() const {
  model.spec.validate();
  const std::size_t n = variable_names.size();
  if (scaling.size() != n || active_mask.size() != n) {
    throw ConfigError("model bundle: scaling/mask length does not match the variable list");
  }
  std::size_t active = 0;
  for (bool b : active_mask) active += b;
  if (active * (lag + 1) != model.spec.input_dim) {
    throw ConfigError("model bundle: mask and lag do not match the model input width");
  }
  if (class_fault_ids.size() != model.spec.num_classes) {
    throw ConfigError("model bundle: class list does not match the model output width");
  }
}

namespace {

json layer_json(const DenseLayer& layer) {
  return json{{"rows", layer.weights.rows()},
              {"cols", layer.weights.cols()},
              {"weights", layer.weights.data()},
              {"bias", layer.bias}};
}

DenseLayer layer_from(const json& j) {
  DenseLayer layer;
  try {
    layer.weights = Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                           j.at("weights").get<std::vector<double>>());
  } catch (const ShapeError& e) {
    throw ConfigError(std::string("layer weights: ") + e.what());
  }
  layer.bias = j.at("bias").get<std::vector<double>>();
  if (layer.bias.size() != layer.weights.rows()) throw ConfigError("bias length mismatch");
  return layer;
}

}  // namespace

std::string to_json_string(const ModelBundle& b) {
  const auto& s = b.model.spec;
  json spec{{"input_dim", s.input_dim},
            {"encoder_widths", s.encoder_widths},
            {"decoder_widths", s.decoder_widths},
            {"num_classes", s.num_classes},
            {"hidden_activation", to_string(s.hidden_activation)},
            {"reconstruction_activation", to_string(s.reconstruction_activation)},
            {"seed", s.seed},
            {"architecture", s.architecture_string()}};
  json enc = json::array();
  for (const auto& l : b.model.params.encoder) enc.push_back(layer_json(l));
  json dec = json::array();
  for (const auto& l : b.model.params.decoder) dec.push_back(layer_json(l));
  json scaling = json::array();
  for (const auto& c : b.scaling) scaling.push_back({{"mean", c.mean}, {"std", c.std}});
  json mask = json::array();
  for (bool m : b.active_mask) mask.push_back(m);
  json doc{{"format_version", kModelFormatVersion},
           {"mode", to_string(b.mode)},
           {"spec", spec},
           {"weights", {{"encoder", enc}, {"decoder", dec}, {"classifier", layer_json(b.model.params.classifier)}}},
           {"variables", b.variable_names},
           {"standardization", scaling},
           {"active_mask", mask},
           {"lag", b.lag},
           {"class_fault_ids", b.class_fault_ids},
           {"loss", {{"lambda1", b.loss.lambda1},
                     {"lambda2", b.loss.lambda2},
                     {"lambda3", b.loss.lambda3},
                     {"delta", b.loss.delta}}},
           {"seed", b.seed}};
  return doc.dump(2) + "\n";
}

ModelBundle bundle_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON does not parse: ") + e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw ConfigError("unsupported model format version");
    }
    ModelBundle b;
    b.mode = mode_from_string(doc.at("mode").get<std::string>());
    const json& spec = doc.at("spec");
    auto& s = b.model.spec;
    s.input_dim = spec.at("input_dim").get<std::size_t>();
    s.encoder_widths = spec.at("encoder_widths").get<std::vector<std::size_t>>();
    s.decoder_widths = spec.at("decoder_widths").get<std::vector<std::size_t>>();
    s.num_classes = spec.at("num_classes").get<std::size_t>();
    s.hidden_activation = activation_from_string(spec.at("hidden_activation").get<std::string>());
    s.reconstruction_activation =
        activation_from_string(spec.at("reconstruction_activation").get<std::string>());
    s.seed = spec.at("seed").get<std::uint64_t>();
    const json& w = doc.at("weights");
    for (const auto& l : w.at("encoder")) b.model.params.encoder.push_back(layer_from(l));
    for (const auto& l : w.at("decoder")) b.model.params.decoder.push_back(layer_from(l));
    b.model.params.classifier = layer_from(w.at("classifier"));
    b.variable_names = doc.at("variables").get<std::vector<std::string>>();
    for (const auto& c : doc.at("standardization")) {
      b.scaling.push_back({c.at("mean").get<double>(), c.at("std").get<double>()});
    }
    for (const auto& m : doc.at("active_mask")) b.active_mask.push_back(m.get<bool>());
    b.lag = doc.at("lag").get<std::size_t>();
    b.class_fault_ids = doc.at("class_fault_ids").get<std::vector<int>>();
    const json& loss = doc.at("loss");
    b.loss = {loss.at("lambda1").get<double>(), loss.at("lambda2").get<double>(),
              loss.at("lambda3").get<double>(), loss.at("delta").get<double>()};
    b.seed = doc.at("seed").get<std::uint64_t>();
    b.check();
    // Layer shapes must chain.
    std::size_t in = s.input_dim;
    for (std::size_t k = 0; k < s.encoder_widths.size(); ++k) {
      if (k >= b.model.params.encoder.size() || b.model.params.encoder[k].in_dim() != in ||
          b.model.params.encoder[k].out_dim() != s.encoder_widths[k]) {
        throw ConfigError("encoder weights do not match the network spec");
      }
      in = s.encoder_widths[k];
    }
    in = s.latent_dim();
    for (std::size_t k = 0; k < s.decoder_widths.size(); ++k) {
      if (k >= b.model.params.decoder.size() || b.model.params.decoder[k].in_dim() != in ||
          b.model.params.decoder[k].out_dim() != s.decoder_widths[k]) {
        throw ConfigError("decoder weights do not match the network spec");
      }
      in = s.decoder_widths[k];
    }
    if (b.model.params.classifier.in_dim() != s.latent_dim() ||
        b.model.params.classifier.out_dim() != s.num_classes) {
      throw ConfigError("classifier weights do not match the network spec");
    }
    return b;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON is missing fields: ") + e.what());
  }
}

void save_bundle(const std::string& path, const ModelBundle& bundle) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << to_json_string(bundle);
}

ModelBundle load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return bundle_from_json_string(ss.str());
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

}  // namespace xfdd
