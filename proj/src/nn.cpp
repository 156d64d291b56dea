#include "xfdd/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "xfdd/errors.hpp"

namespace xfdd {
namespace {

DenseLayer make_layer(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
  const double a = 1.0 / std::sqrt(static_cast<double>(in + out));
  std::uniform_real_distribution<double> dist(-a, a);
  for (double& w : layer.weights.data()) w = dist(rng);
  return layer;
}

Matrix affine(const Matrix& in, const DenseLayer& layer) {
  const std::size_t n_out = layer.out_dim();
  const std::size_t n_in = layer.in_dim();
  if (in.cols() != n_in) {
    throw ShapeError("layer expects " + std::to_string(n_in) + " inputs, got " +
                     std::to_string(in.cols()));
  }
  Matrix out(in.rows(), n_out);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    auto x = in.row(r);
    for (std::size_t o = 0; o < n_out; ++o) {
      auto w = layer.weights.row(o);
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
      out(r, o) = acc;
    }
  }
  return out;
}

Matrix activate(const Matrix& pre, ActivationKind kind) {
  if (kind == ActivationKind::kLinear) return pre;
  Matrix out = pre;
  for (double& v : out.data()) v = std::tanh(v);
  return out;
}

// Multiplies the upstream gradient by f'(pre), given the activation output.
void through_activation(Matrix& grad, const Matrix& act, ActivationKind kind) {
  if (kind == ActivationKind::kLinear) return;
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double a = act.data()[i];
    grad.data()[i] *= 1.0 - a * a;
  }
}

// Accumulates dW = delta^T * input, db = column sums of delta and returns
// delta * W (gradient w.r.t. the layer input).
Matrix layer_backward(const DenseLayer& layer, const Matrix& input, const Matrix& delta,
                      DenseLayer& grad) {
  const std::size_t n_out = layer.out_dim();
  const std::size_t n_in = layer.in_dim();
  Matrix d_in(input.rows(), n_in);
  for (std::size_t r = 0; r < input.rows(); ++r) {
    auto x = input.row(r);
    auto dx = d_in.row(r);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = delta(r, o);
      if (d == 0.0) continue;
      auto w = layer.weights.row(o);
      auto gw = grad.weights.row(o);
      for (std::size_t i = 0; i < n_in; ++i) {
        gw[i] += d * x[i];
        dx[i] += d * w[i];
      }
      grad.bias[o] += d;
    }
  }
  return d_in;
}

}  // namespace

Model init_model(const NetworkSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  Model model{spec, {}};
  std::size_t in = spec.input_dim;
  for (auto w : spec.encoder_widths) {
    model.params.encoder.push_back(make_layer(in, w, rng));
    in = w;
  }
  in = spec.latent_dim();
  for (auto w : spec.decoder_widths) {
    model.params.decoder.push_back(make_layer(in, w, rng));
    in = w;
  }
  model.params.classifier = make_layer(spec.latent_dim(), spec.num_classes, rng);
  return model;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto z = logits.row(r);
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
      p(r, c) = std::exp(z[c] - mx);
      sum += p(r, c);
    }
    for (std::size_t c = 0; c < z.size(); ++c) p(r, c) /= sum;
  }
  return p;
}

ForwardCache forward(const Model& model, const Matrix& batch) {
  const auto& spec = model.spec;
  if (batch.cols() != spec.input_dim) {
    throw ShapeError("batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                     std::to_string(spec.input_dim));
  }
  ForwardCache cache;
  cache.encoder_acts.push_back(batch);
  for (const auto& layer : model.params.encoder) {
    cache.encoder_pre.push_back(affine(cache.encoder_acts.back(), layer));
    cache.encoder_acts.push_back(activate(cache.encoder_pre.back(), spec.hidden_activation));
  }
  cache.decoder_acts.push_back(cache.latent());
  const auto& dec = model.params.decoder;
  for (std::size_t i = 0; i < dec.size(); ++i) {
    const auto kind = i + 1 == dec.size() ? spec.reconstruction_activation : spec.hidden_activation;
    cache.decoder_pre.push_back(affine(cache.decoder_acts.back(), dec[i]));
    cache.decoder_acts.push_back(activate(cache.decoder_pre.back(), kind));
  }
  cache.logits = affine(cache.latent(), model.params.classifier);
  cache.probs = softmax_rows(cache.logits);
  return cache;
}

Gradients backward(const Model& model, const ForwardCache& cache, const Matrix& targets,
                   const CompositeLossConfig& cfg) {
  cfg.validate();
  const auto& spec = model.spec;
  const Matrix& x = cache.input();
  const std::size_t n = x.rows();
  require_shape(targets, n, spec.num_classes, "targets");
  require_one_hot(targets);
  if (cfg.delta != 1.0 && spec.num_classes != 2) {
    throw ConfigError("class weight delta only applies to two-class detection");
  }
  Gradients grads = model.params.zeros_like();
  if (n == 0) return grads;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Classification head: d/dlogits of -w log p_true is w (p - y), zero when
  // the clamp is active.
  Matrix d_logits(n, spec.num_classes);
  if (cfg.lambda2 != 0.0) {
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t true_c = 0;
      while (targets(r, true_c) != 1.0) ++true_c;
      if (cache.probs(r, true_c) < kLogClamp) continue;
      const double w = (true_c == 0 ? cfg.delta : 1.0) * cfg.lambda2 * inv_n;
      for (std::size_t c = 0; c < spec.num_classes; ++c) {
        d_logits(r, c) = w * (cache.probs(r, c) - targets(r, c));
      }
    }
  }
  Matrix d_latent =
      layer_backward(model.params.classifier, cache.latent(), d_logits, grads.classifier);

  // Reconstruction head.
  if (cfg.lambda1 != 0.0) {
    const auto& dec = model.params.decoder;
    Matrix delta(n, spec.input_dim);
    const Matrix& x_hat = cache.reconstruction();
    for (std::size_t i = 0; i < delta.size(); ++i) {
      delta.data()[i] = 2.0 * cfg.lambda1 * inv_n * (x_hat.data()[i] - x.data()[i]);
    }
    for (std::size_t k = dec.size(); k-- > 0;) {
      const auto kind = k + 1 == dec.size() ? spec.reconstruction_activation : spec.hidden_activation;
      through_activation(delta, cache.decoder_acts[k + 1], kind);
      delta = layer_backward(dec[k], cache.decoder_acts[k], delta, grads.decoder[k]);
    }
    for (std::size_t i = 0; i < d_latent.size(); ++i) d_latent.data()[i] += delta.data()[i];
  }

  // Shared encoder.
  const auto& enc = model.params.encoder;
  Matrix delta = std::move(d_latent);
  for (std::size_t k = enc.size(); k-- > 0;) {
    through_activation(delta, cache.encoder_acts[k + 1], spec.hidden_activation);
    delta = layer_backward(enc[k], cache.encoder_acts[k], delta, grads.encoder[k]);
  }

  if (cfg.lambda3 != 0.0) {
    const double scale = 2.0 * cfg.lambda3 * inv_n;
    auto add_l2 = [&](const DenseLayer& p, DenseLayer& g) {
      for (std::size_t i = 0; i < p.weights.size(); ++i) {
        g.weights.data()[i] += scale * p.weights.data()[i];
      }
    };
    for (std::size_t k = 0; k < enc.size(); ++k) add_l2(enc[k], grads.encoder[k]);
    for (std::size_t k = 0; k < model.params.decoder.size(); ++k) {
      add_l2(model.params.decoder[k], grads.decoder[k]);
    }
    add_l2(model.params.classifier, grads.classifier);
  }
  return grads;
}

std::vector<int> predict(const Model& model, const Matrix& batch) {
  const ForwardCache cache = forward(model, batch);
  std::vector<int> out(batch.rows());
  for (std::size_t r = 0; r < batch.rows(); ++r) {
    auto z = cache.logits.row(r);
    out[r] = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
  }
  return out;
}

OptimizerState OptimizerState::for_model(const Model& model, double learning_rate) {
  OptimizerState state;
  state.first_moment = model.params.zeros_like();
  state.second_moment = model.params.zeros_like();
  state.learning_rate = learning_rate;
  return state;
}

void adam_step(Model& model, const Gradients& grads, OptimizerState& state) {
  grads.for_each([](const std::string& name, const DenseLayer& g) {
    if (!g.weights.all_finite()) throw DivergenceError("non-finite gradient in " + name + ".W");
    for (double v : g.bias) {
      if (!std::isfinite(v)) throw DivergenceError("non-finite gradient in " + name + ".b");
    }
  });
  if (!(grads.encoder.size() == model.params.encoder.size() &&
        grads.decoder.size() == model.params.decoder.size())) {
    throw ShapeError("gradient layout does not match the model");
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    if (p.size() != g.size() || m.size() != g.size()) {
      throw ShapeError("gradient shape does not match parameter shape");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  };
  auto update_layer = [&](DenseLayer& p, const DenseLayer& g, DenseLayer& m, DenseLayer& v) {
    update(p.weights.data(), g.weights.data(), m.weights.data(), v.weights.data());
    update(p.bias, g.bias, m.bias, v.bias);
  };
  auto& P = model.params;
  auto& M = state.first_moment;
  auto& V = state.second_moment;
  for (std::size_t k = 0; k < P.encoder.size(); ++k) {
    update_layer(P.encoder[k], grads.encoder[k], M.encoder[k], V.encoder[k]);
  }
  for (std::size_t k = 0; k < P.decoder.size(); ++k) {
    update_layer(P.decoder[k], grads.decoder[k], M.decoder[k], V.decoder[k]);
  }
  update_layer(P.classifier, grads.classifier, M.classifier, V.classifier);
}

}  // namespace xfdd
