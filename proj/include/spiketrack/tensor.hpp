#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spiketrack/error.hpp"

namespace spiketrack {

/// Dense [channels, height, width] extent.
struct Shape3 {
  int c = 0;
  int h = 0;
  int w = 0;

  bool operator==(const Shape3&) const = default;

  std::size_t volume() const {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }

  std::string str() const {
    std::ostringstream os;
    os << "[" << c << "x" << h << "x" << w << "]";
    return os.str();
  }
};

/// Dense row-major [C,H,W] tensor of doubles. The float path and the
/// membrane-potential path share this type.
class Tensor3 {
public:
  Tensor3() = default;

  explicit Tensor3(Shape3 shape, double fill = 0.0)
      : shape_(shape), data_(checked_volume(shape), fill) {}

  Tensor3(Shape3 shape, std::vector<double> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != checked_volume(shape)) {
      throw DimensionError("Tensor3: data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_.str());
    }
  }

  const Shape3& shape() const { return shape_; }
  bool empty() const { return data_.empty(); }
  std::size_t size() const { return data_.size(); }

  double& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  double at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * shape_.h + y) * shape_.w + x;
  }

private:
  static std::size_t checked_volume(const Shape3& s) {
    if (s.c < 1 || s.h < 1 || s.w < 1) {
      throw DimensionError("Tensor3: all dimensions must be >= 1, got " + s.str());
    }
    return s.volume();
  }

  Shape3 shape_;
  std::vector<double> data_;
};

/// Valid-mode convolution kernel: weights laid out [out_ch][in_ch][kh][kw]
/// row-major, one bias per output channel. No padding.
struct ConvSpec {
  int out_ch = 0;
  int in_ch = 0;
  int kh = 0;
  int kw = 0;
  int stride = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_ch) * in_ch * kh * kw;
  }

  double weight(int o, int i, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(o) * in_ch + i) * kh + ky) * kw + kx];
  }

  double& weight(int o, int i, int ky, int kx) {
    return weights[((static_cast<std::size_t>(o) * in_ch + i) * kh + ky) * kw + kx];
  }

  std::string kernel_shape_str() const {
    std::ostringstream os;
    os << "[" << out_ch << "x" << in_ch << "x" << kh << "x" << kw << "]";
    return os.str();
  }

  void validate() const {
    if (out_ch < 1 || in_ch < 1 || kh < 1 || kw < 1) {
      throw DimensionError("ConvSpec: kernel dims must be >= 1, got " +
                           kernel_shape_str());
    }
    if (stride < 1) {
      throw DimensionError("ConvSpec: stride must be >= 1, got " +
                           std::to_string(stride));
    }
    if (weights.size() != weight_count()) {
      throw DimensionError("ConvSpec: weight count " + std::to_string(weights.size()) +
                           " does not match kernel shape " + kernel_shape_str());
    }
    if (bias.size() != static_cast<std::size_t>(out_ch)) {
      throw DimensionError("ConvSpec: bias length " + std::to_string(bias.size()) +
                           " does not match out_ch " + std::to_string(out_ch));
    }
  }
};

/// 2D grid of similarity scores between an exemplar and all sub-windows of a
/// search region, tagged with the estimator that produced it.
struct ResponseMap {
  enum class Provenance { raw, ann, pse, tse, wtse, hse };

  int h = 0;
  int w = 0;
  std::vector<double> values;
  Provenance provenance = Provenance::raw;

  ResponseMap() = default;
  ResponseMap(int height, int width, Provenance tag = Provenance::raw)
      : h(height), w(width), values(static_cast<std::size_t>(height) * width, 0.0),
        provenance(tag) {}

  double& at(int y, int x) { return values[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * w + x]; }

  /// Position of the maximum; ties resolve to the smallest row, then column.
  std::pair<int, int> argmax() const {
    int best_y = 0, best_x = 0;
    double best = values.empty() ? 0.0 : values[0];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = at(y, x);
        if (v > best) {
          best = v;
          best_y = y;
          best_x = x;
        }
      }
    }
    return {best_y, best_x};
  }
};

/// Valid-mode 2D convolution.
inline Tensor3 conv2d(const Tensor3& input, const ConvSpec& spec) {
  spec.validate();
  const Shape3 in = input.shape();
  if (in.c != spec.in_ch) {
    throw DimensionError("conv2d: input shape " + in.str() +
                         " incompatible with kernel " + spec.kernel_shape_str());
  }
  const int out_h = (in.h - spec.kh) / spec.stride + 1;
  const int out_w = (in.w - spec.kw) / spec.stride + 1;
  if (in.h < spec.kh || in.w < spec.kw || out_h < 1 || out_w < 1) {
    throw DimensionError("conv2d: kernel " + spec.kernel_shape_str() +
                         " does not fit input " + in.str());
  }

  Tensor3 out(Shape3{spec.out_ch, out_h, out_w});
  for (int o = 0; o < spec.out_ch; ++o) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double acc = spec.bias[o];
        for (int i = 0; i < spec.in_ch; ++i) {
          for (int ky = 0; ky < spec.kh; ++ky) {
            for (int kx = 0; kx < spec.kw; ++kx) {
              acc += spec.weight(o, i, ky, kx) *
                     input.at(i, oy * spec.stride + ky, ox * spec.stride + kx);
            }
          }
        }
        out.at(o, oy, ox) = acc;
      }
    }
  }
  return out;
}

/// Per-channel max over each window.
inline Tensor3 maxpool2d(const Tensor3& input, int window, int stride) {
  const Shape3 in = input.shape();
  if (window < 1 || stride < 1) {
    throw DimensionError("maxpool2d: window and stride must be >= 1");
  }
  if (window > in.h || window > in.w) {
    throw DimensionError("maxpool2d: window " + std::to_string(window) +
                         " larger than input " + in.str());
  }
  const int out_h = (in.h - window) / stride + 1;
  const int out_w = (in.w - window) / stride + 1;

  Tensor3 out(Shape3{in.c, out_h, out_w});
  for (int c = 0; c < in.c; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        double best = input.at(c, oy * stride, ox * stride);
        for (int ky = 0; ky < window; ++ky) {
          for (int kx = 0; kx < window; ++kx) {
            best = std::max(best, input.at(c, oy * stride + ky, ox * stride + kx));
          }
        }
        out.at(c, oy, ox) = best;
      }
    }
  }
  return out;
}

/// Dense valid cross-correlation of an exemplar feature map against every
/// sub-window of a search feature map, summed over channels.
inline ResponseMap xcorr_valid(const Tensor3& exemplar, const Tensor3& search) {
  const Shape3 e = exemplar.shape();
  const Shape3 s = search.shape();
  if (e.c != s.c) {
    throw DimensionError("xcorr_valid: channel mismatch between exemplar " +
                         e.str() + " and search " + s.str());
  }
  if (e.h > s.h || e.w > s.w) {
    throw DimensionError("xcorr_valid: exemplar " + e.str() +
                         " larger than search " + s.str());
  }

  ResponseMap map(s.h - e.h + 1, s.w - e.w + 1);
  for (int y = 0; y < map.h; ++y) {
    for (int x = 0; x < map.w; ++x) {
      double acc = 0.0;
      for (int c = 0; c < e.c; ++c) {
        for (int dy = 0; dy < e.h; ++dy) {
          for (int dx = 0; dx < e.w; ++dx) {
            acc += exemplar.at(c, dy, dx) * search.at(c, y + dy, x + dx);
          }
        }
      }
      map.at(y, x) = acc;
    }
  }
  return map;
}

/// Multiply-accumulate count of one xcorr_valid call with these operands.
inline std::uint64_t xcorr_mac_count(const Shape3& exemplar, const Shape3& search) {
  const std::uint64_t map_cells =
      static_cast<std::uint64_t>(search.h - exemplar.h + 1) *
      static_cast<std::uint64_t>(search.w - exemplar.w + 1);
  return map_cells * exemplar.volume();
}

} // namespace spiketrack
