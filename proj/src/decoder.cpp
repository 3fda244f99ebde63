#include "dgd/decoder.hpp"

#include <cmath>

#include "dgd/errors.hpp"
#include "dgd/kernels.hpp"

namespace dgd {

namespace {
constexpr double kOutputClampLo = 1e-6;
constexpr double kOutputClampHi = 1.0 - 1e-6;
}  // namespace

DecoderNet::DecoderNet(std::vector<std::size_t> layer_sizes, Activation hidden_activation)
    : layer_sizes_(std::move(layer_sizes)), hidden_activation_(hidden_activation) {
  if (layer_sizes_.size() < 2)
    throw ContractError("DecoderNet: need at least input and output layer sizes");
  for (std::size_t s : layer_sizes_)
    if (s == 0) throw ContractError("DecoderNet: zero-sized layer");
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    weights.push_back(DiffArray::make({layer_sizes_[l], layer_sizes_[l + 1]}, true));
    biases.push_back(DiffArray::make({layer_sizes_[l + 1]}, true));
  }
}

void DecoderNet::init_params(Rng& rng) {
  // He-style uniform fan-in scaling: sqrt(2) gain on the weights keeps the
  // forward signal from shrinking through the relu stack
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const double bound = std::sqrt(2.0) / std::sqrt(static_cast<double>(layer_sizes_[l]));
    const double bias_bound = 1.0 / std::sqrt(static_cast<double>(layer_sizes_[l]));
    for (double& w : weights[l]->values) w = rng.uniform(-bound, bound);
    for (double& b : biases[l]->values) b = rng.uniform(-bias_bound, bias_bound);
  }
}

ArrayRef DecoderNet::forward(Tape& tape, const ArrayRef& z) const {
  if (z->cols() != latent_dim())
    throw DimensionError("decoder forward: input " + shape_str(z->shape()) +
                         " does not match latent dim " + std::to_string(latent_dim()));
  ArrayRef h = z;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = tape.add_rowvec(tape.matmul(h, weights[l]), biases[l]);
    if (l + 1 < weights.size()) {
      h = hidden_activation_ == Activation::kRelu ? tape.relu(h) : tape.sigmoid(h);
    } else {
      h = tape.clamp(tape.sigmoid(h), kOutputClampLo, kOutputClampHi);
    }
  }
  return h;
}

std::vector<double> DecoderNet::forward_values(const double* z, std::size_t b) const {
  std::vector<double> cur(z, z + b * latent_dim());
  std::vector<double> next;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const std::size_t in = layer_sizes_[l], out = layer_sizes_[l + 1];
    next.assign(b * out, 0.0);
    kernels::matmul_nn(cur.data(), weights[l]->values.data(), next.data(), b, in, out);
    const double* bias = biases[l]->values.data();
    const bool last = l + 1 == weights.size();
    for (std::size_t i = 0; i < b; ++i) {
      double* row = next.data() + i * out;
      for (std::size_t j = 0; j < out; ++j) {
        double v = row[j] + bias[j];
        if (last) {
          v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
          v = std::min(std::max(v, kOutputClampLo), kOutputClampHi);
        } else if (hidden_activation_ == Activation::kRelu) {
          v = v > 0.0 ? v : 0.0;
        } else {
          v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        }
        row[j] = v;
      }
    }
    cur.swap(next);
  }
  return cur;
}

std::size_t DecoderNet::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l)
    n += (layer_sizes_[l] + 1) * layer_sizes_[l + 1];
  return n;
}

std::vector<ArrayRef> DecoderNet::parameters() const {
  std::vector<ArrayRef> out = weights;
  out.insert(out.end(), biases.begin(), biases.end());
  return out;
}

std::vector<ArrayRef> DecoderNet::weight_parameters() const { return weights; }

std::string activation_name(DecoderNet::Activation a) {
  return a == DecoderNet::Activation::kRelu ? "relu" : "sigmoid";
}

DecoderNet::Activation activation_from_name(const std::string& name) {
  if (name == "relu") return DecoderNet::Activation::kRelu;
  if (name == "sigmoid") return DecoderNet::Activation::kSigmoid;
  throw ContractError("unknown activation: " + name);
}

}  // namespace dgd
