#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "spiketrack/error.hpp"
#include "spiketrack/tensor.hpp"

namespace spiketrack {

struct ConvLayer {
  ConvSpec spec;
};

/// Per-channel batch norm folded at inference time: y = gamma*(x-mean)/sqrt(var+eps) + beta.
struct BatchNormLayer {
  std::vector<double> gamma;
  std::vector<double> beta;
  std::vector<double> mean;
  std::vector<double> var;
  double eps = 1e-5;

  void validate(int channels) const {
    const auto n = static_cast<std::size_t>(channels);
    if (gamma.size() != n || beta.size() != n || mean.size() != n || var.size() != n) {
      throw ValidationError("BatchNorm: parameter vectors must have one entry per channel");
    }
    for (double v : var) {
      if (!(v > 0.0)) throw ValidationError("BatchNorm: variance must be > 0 per channel");
    }
  }
};

struct ReluLayer {};

struct MaxPoolLayer {
  int window = 2;
  int stride = 2;
};

using LayerDesc = std::variant<ConvLayer, BatchNormLayer, ReluLayer, MaxPoolLayer>;

inline const char* layer_kind_name(const LayerDesc& layer) {
  struct Visitor {
    const char* operator()(const ConvLayer&) const { return "Conv"; }
    const char* operator()(const BatchNormLayer&) const { return "BatchNorm"; }
    const char* operator()(const ReluLayer&) const { return "ReLU"; }
    const char* operator()(const MaxPoolLayer&) const { return "MaxPool"; }
  };
  return std::visit(Visitor{}, layer);
}

/// Recorded activation scales: one lambda per conv block, in network order.
/// A block is Conv [+BatchNorm] [+ReLU]; lambda is the configured percentile
/// of the pooled post-activation values over the whole calibration set,
/// clamped below at lambda_floor.
struct ActivationStats {
  std::vector<double> lambda_per_layer;
  double percentile = 99.9;

  static constexpr double lambda_floor = 1e-6;
};

/// Float Siamese branch: an ordered layer list applied to a [C,H,W] input.
struct AnnModel {
  Shape3 input_shape;
  std::vector<LayerDesc> layers;

  int conv_block_count() const {
    int n = 0;
    for (const auto& layer : layers)
      if (std::holds_alternative<ConvLayer>(layer)) ++n;
    return n;
  }

  /// Verifies the layer grammar: BatchNorm only directly after Conv, ReLU only
  /// after Conv or BatchNorm, and every conv block except a final linear one
  /// ends in ReLU. Shape chaining is checked during forward evaluation.
  void validate() const {
    const int n = static_cast<int>(layers.size());
    for (int i = 0; i < n; ++i) {
      if (std::holds_alternative<BatchNormLayer>(layers[i])) {
        if (i == 0 || !std::holds_alternative<ConvLayer>(layers[i - 1])) {
          throw ValidationError("layer " + std::to_string(i) +
                                ": BatchNorm must directly follow a Conv layer");
        }
      }
      if (std::holds_alternative<ReluLayer>(layers[i])) {
        if (i == 0 || (!std::holds_alternative<ConvLayer>(layers[i - 1]) &&
                       !std::holds_alternative<BatchNormLayer>(layers[i - 1]))) {
          throw ValidationError("layer " + std::to_string(i) +
                                ": ReLU must directly follow Conv or BatchNorm");
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      if (!std::holds_alternative<ConvLayer>(layers[i])) continue;
      int j = i + 1;
      if (j < n && std::holds_alternative<BatchNormLayer>(layers[j])) ++j;
      const bool has_relu = j < n && std::holds_alternative<ReluLayer>(layers[j]);
      if (!has_relu && j < n) {
        throw ValidationError("layer " + std::to_string(i) +
                              ": only the final conv block may omit ReLU");
      }
    }
  }
};

inline Tensor3 apply_batchnorm(const Tensor3& input, const BatchNormLayer& bn) {
  const Shape3 s = input.shape();
  bn.validate(s.c);
  Tensor3 out(s);
  for (int c = 0; c < s.c; ++c) {
    const double scale = bn.gamma[c] / std::sqrt(bn.var[c] + bn.eps);
    for (int y = 0; y < s.h; ++y)
      for (int x = 0; x < s.w; ++x)
        out.at(c, y, x) = (input.at(c, y, x) - bn.mean[c]) * scale + bn.beta[c];
  }
  return out;
}

inline Tensor3 apply_relu(const Tensor3& input) {
  Tensor3 out = input;
  for (auto& v : out.data()) v = std::max(0.0, v);
  return out;
}

/// Evaluates the model and returns the output of every layer in order; the
/// last entry is the feature map.
inline std::vector<Tensor3> forward_ann(const AnnModel& model, const Tensor3& input) {
  model.validate();
  if (!(input.shape() == model.input_shape)) {
    throw DimensionError("forward_ann: input shape " + input.shape().str() +
                         " does not match model input shape " + model.input_shape.str());
  }

  std::vector<Tensor3> outputs;
  outputs.reserve(model.layers.size());
  const Tensor3* cur = &input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    try {
      if (const auto* conv = std::get_if<ConvLayer>(&model.layers[i])) {
        outputs.push_back(conv2d(*cur, conv->spec));
      } else if (const auto* bn = std::get_if<BatchNormLayer>(&model.layers[i])) {
        outputs.push_back(apply_batchnorm(*cur, *bn));
      } else if (std::holds_alternative<ReluLayer>(model.layers[i])) {
        outputs.push_back(apply_relu(*cur));
      } else {
        const auto& pool = std::get<MaxPoolLayer>(model.layers[i]);
        outputs.push_back(maxpool2d(*cur, pool.window, pool.stride));
      }
    } catch (const DimensionError& e) {
      throw DimensionError("layer " + std::to_string(i) + ": " + e.what());
    }
    cur = &outputs.back();
  }
  return outputs;
}

/// Percentile in (0,100] over a value list, linearly interpolated between
/// order statistics (rank = p/100 * (n-1) on the sorted values).
inline double percentile_interpolated(std::vector<double> values, double percentile) {
  if (values.empty()) throw UsageError("percentile: empty value list");
  if (!(percentile > 0.0) || percentile > 100.0) {
    throw UsageError("percentile: must lie in (0, 100], got " + std::to_string(percentile));
  }
  std::sort(values.begin(), values.end());
  const double rank = percentile / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

/// Layer indices (into forward_ann outputs) whose tensors define each conv
/// block's activation scale: the ReLU output when present, otherwise the raw
/// block output of a final linear layer.
inline std::vector<int> lambda_point_indices(const AnnModel& model) {
  model.validate();
  std::vector<int> points;
  const int n = static_cast<int>(model.layers.size());
  for (int i = 0; i < n; ++i) {
    if (!std::holds_alternative<ConvLayer>(model.layers[i])) continue;
    int j = i + 1;
    if (j < n && std::holds_alternative<BatchNormLayer>(model.layers[j])) ++j;
    if (j < n && std::holds_alternative<ReluLayer>(model.layers[j])) {
      points.push_back(j);
    } else {
      points.push_back(j - 1);
    }
  }
  return points;
}

/// Records lambda for every conv block: the percentile over the pooled
/// distribution of all post-activation values across all calibration inputs.
inline ActivationStats record_lambdas(const AnnModel& model,
                                      const std::vector<Tensor3>& calibration_set,
                                      double percentile = 99.9) {
  if (calibration_set.empty()) {
    throw UsageError("record_lambdas: calibration set must not be empty");
  }
  if (!(percentile > 0.0) || percentile > 100.0) {
    throw UsageError("record_lambdas: percentile must lie in (0, 100]");
  }

  const std::vector<int> points = lambda_point_indices(model);
  std::vector<std::vector<double>> pooled(points.size());

  for (const Tensor3& input : calibration_set) {
    const std::vector<Tensor3> outputs = forward_ann(model, input);
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto& values = outputs[points[k]].data();
      pooled[k].insert(pooled[k].end(), values.begin(), values.end());
    }
  }

  ActivationStats stats;
  stats.percentile = percentile;
  stats.lambda_per_layer.reserve(points.size());
  for (auto& values : pooled) {
    const double lambda = percentile_interpolated(std::move(values), percentile);
    stats.lambda_per_layer.push_back(std::max(lambda, ActivationStats::lambda_floor));
  }
  return stats;
}

/// Runs the model on an input of any spatial size (the layer stack is fully
/// convolutional) and returns the final feature map.
inline Tensor3 extract_features(const AnnModel& model, const Tensor3& input) {
  AnnModel branch = model;
  branch.input_shape = input.shape();
  return forward_ann(branch, input).back();
}

/// SiamFC-style response: valid cross-correlation of the two final feature
/// maps plus a constant bias at every location.
inline ResponseMap ann_response(const AnnModel& model, const Tensor3& exemplar,
                                const Tensor3& search, double bias = 0.0) {
  const Tensor3 exemplar_feat = extract_features(model, exemplar);
  const Tensor3 search_feat = extract_features(model, search);

  ResponseMap map = xcorr_valid(exemplar_feat, search_feat);
  map.provenance = ResponseMap::Provenance::ann;
  for (auto& v : map.values) v += bias;
  return map;
}

} // namespace spiketrack
