#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "spiketrack/ann.hpp"
#include "spiketrack/error.hpp"
#include "spiketrack/tensor.hpp"

namespace spiketrack {

/// Integrate-and-fire convolution layer holding lambda-normalized weights.
struct SpikingConvLayer {
  ConvSpec spec;
  double lambda_prev = 1.0;
  double lambda_cur = 1.0;
};

/// Forwards, per output position, the spike of the input neuron with the
/// highest running firing-rate estimate in its window.
struct SpikeMaxPoolLayer {
  int window = 2;
  int stride = 2;
};

using SnnLayerDesc = std::variant<SpikingConvLayer, SpikeMaxPoolLayer>;

inline const char* snn_layer_kind_name(const SnnLayerDesc& layer) {
  return std::holds_alternative<SpikingConvLayer>(layer) ? "SpikingConv" : "SpikeMaxPool";
}

/// Converted spiking network. The layer shape chain is identical to the source
/// AnnModel's: ReLUs are absorbed into the IF dynamics and BatchNorm into the
/// conv weights.
struct SnnModel {
  Shape3 input_shape;
  std::vector<SnnLayerDesc> layers;
  ActivationStats source_lambdas;

  void validate() const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (const auto* conv = std::get_if<SpikingConvLayer>(&layers[i])) {
        conv->spec.validate();
        for (double w : conv->spec.weights) {
          if (!std::isfinite(w)) {
            throw ValidationError("layer " + std::to_string(i) +
                                  ": non-finite weight after conversion");
          }
        }
        for (double b : conv->spec.bias) {
          if (!std::isfinite(b)) {
            throw ValidationError("layer " + std::to_string(i) +
                                  ": non-finite bias after conversion");
          }
        }
      }
    }
  }
};

/// Folds inference-time batch norm into the preceding convolution:
///   w' = w * gamma / sqrt(var + eps)        (per output channel)
///   b' = (b - mean) * gamma / sqrt(var + eps) + beta
inline ConvSpec fold_batchnorm(const ConvSpec& conv, const BatchNormLayer& bn) {
  conv.validate();
  bn.validate(conv.out_ch);

  ConvSpec folded = conv;
  for (int o = 0; o < conv.out_ch; ++o) {
    const double scale = bn.gamma[o] / std::sqrt(bn.var[o] + bn.eps);
    for (int i = 0; i < conv.in_ch; ++i)
      for (int ky = 0; ky < conv.kh; ++ky)
        for (int kx = 0; kx < conv.kw; ++kx)
          folded.weight(o, i, ky, kx) = conv.weight(o, i, ky, kx) * scale;
    folded.bias[o] = (conv.bias[o] - bn.mean[o]) * scale + bn.beta[o];
  }
  return folded;
}

/// Data-based weight rescaling: w~ = w * lambda_prev / lambda_cur,
/// b~ = b / lambda_cur. lambda_prev of the first layer is 1 (inputs are
/// presumed scaled to [0,1]).
inline ConvSpec normalize_layer(const ConvSpec& conv, double lambda_prev,
                                double lambda_cur) {
  if (!(lambda_prev > 0.0) || !(lambda_cur > 0.0)) {
    throw ValidationError("normalize_layer: lambdas must be > 0, got lambda_prev=" +
                          std::to_string(lambda_prev) + " lambda_cur=" +
                          std::to_string(lambda_cur));
  }
  ConvSpec out = conv;
  const double w_scale = lambda_prev / lambda_cur;
  for (auto& w : out.weights) w *= w_scale;
  for (auto& b : out.bias) b /= lambda_cur;
  return out;
}

struct ConvertOptions {
  /// Scale choice for a final conv block without ReLU: its own recorded
  /// lambda (default) or 1.0 to leave the feature magnitudes untouched.
  enum class FinalLayerLambda { recorded, one };
  FinalLayerLambda final_layer_lambda = FinalLayerLambda::recorded;
};

/// Turns a calibrated AnnModel into an SnnModel: BatchNorm folded, every conv
/// normalized with its (lambda_prev, lambda_cur) pair, MaxPool mapped to
/// SpikeMaxPool, ReLUs dropped.
inline SnnModel convert(const AnnModel& model, const ActivationStats& stats,
                        const ConvertOptions& options = {}) {
  model.validate();
  const int blocks = model.conv_block_count();
  if (static_cast<int>(stats.lambda_per_layer.size()) != blocks) {
    throw ValidationError("convert: expected " + std::to_string(blocks) +
                          " lambdas, got " + std::to_string(stats.lambda_per_layer.size()));
  }

  SnnModel snn;
  snn.input_shape = model.input_shape;
  snn.source_lambdas = stats;

  const int n = static_cast<int>(model.layers.size());
  int block = 0;
  for (int i = 0; i < n; ++i) {
    if (const auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
      ConvSpec folded = conv->spec;
      int j = i + 1;
      if (j < n) {
        if (const auto* bn = std::get_if<BatchNormLayer>(&model.layers[j])) {
          folded = fold_batchnorm(folded, *bn);
        }
      }

      int k = j;
      if (k < n && std::holds_alternative<BatchNormLayer>(model.layers[k])) ++k;
      const bool has_relu = k < n && std::holds_alternative<ReluLayer>(model.layers[k]);

      const double lambda_prev = block == 0 ? 1.0 : stats.lambda_per_layer[block - 1];
      double lambda_cur = stats.lambda_per_layer[block];
      if (!has_relu &&
          options.final_layer_lambda == ConvertOptions::FinalLayerLambda::one) {
        lambda_cur = 1.0;
      }
      if (!(lambda_cur > 0.0)) {
        throw ValidationError("convert: missing or nonpositive lambda for conv block " +
                              std::to_string(block));
      }

      SpikingConvLayer spiking;
      spiking.spec = normalize_layer(folded, lambda_prev, lambda_cur);
      spiking.lambda_prev = lambda_prev;
      spiking.lambda_cur = lambda_cur;
      snn.layers.emplace_back(std::move(spiking));
      ++block;
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&model.layers[i])) {
      snn.layers.emplace_back(SpikeMaxPoolLayer{pool->window, pool->stride});
    }
    // BatchNorm layers are folded above; ReLUs are realized by the IF dynamics.
  }

  snn.validate();
  return snn;
}

} // namespace spiketrack
