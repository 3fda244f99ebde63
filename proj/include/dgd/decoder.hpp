#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dgd/random.hpp"
#include "dgd/tensor.hpp"

namespace dgd {

// Fully connected decoder mapping latent rows to output-distribution
// parameters. The output layer is sigmoid-activated and clamped to
// [1e-6, 1-1e-6]: Bernoulli probabilities for binary data, max-normalized
// means for count data.
class DecoderNet {
 public:
  enum class Activation { kRelu, kSigmoid };

  DecoderNet() = default;
  // layer_sizes = [latent, hidden..., out]
  explicit DecoderNet(std::vector<std::size_t> layer_sizes,
                      Activation hidden_activation = Activation::kRelu);

  // U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases
  void init_params(Rng& rng);

  ArrayRef forward(Tape& tape, const ArrayRef& z) const;  // [B x out], in (0,1)
  // forward on frozen parameters without keeping a graph
  std::vector<double> forward_values(const double* z, std::size_t b) const;

  std::size_t latent_dim() const { return layer_sizes_.front(); }
  std::size_t out_dim() const { return layer_sizes_.back(); }
  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  Activation hidden_activation() const { return hidden_activation_; }
  std::size_t parameter_count() const;

  std::vector<ArrayRef> parameters() const;        // weights and biases
  std::vector<ArrayRef> weight_parameters() const;  // weight-decay targets

  std::vector<ArrayRef> weights;  // [in x out] per layer
  std::vector<ArrayRef> biases;   // [out] per layer

 private:
  std::vector<std::size_t> layer_sizes_;
  Activation hidden_activation_ = Activation::kRelu;
};

std::string activation_name(DecoderNet::Activation a);
DecoderNet::Activation activation_from_name(const std::string& name);

}  // namespace dgd
