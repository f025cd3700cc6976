#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spiketrack/error.hpp"
#include "spiketrack/rng.hpp"
#include "spiketrack/tensor.hpp"

namespace spiketrack {

/// Axis-aligned box: center and size in pixels (x = column, y = row).
struct Box {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;
};

/// Intersection-over-union of two axis-aligned boxes.
inline double iou(const Box& a, const Box& b) {
  const double ax0 = a.cx - a.w / 2.0, ax1 = a.cx + a.w / 2.0;
  const double ay0 = a.cy - a.h / 2.0, ay1 = a.cy + a.h / 2.0;
  const double bx0 = b.cx - b.w / 2.0, bx1 = b.cx + b.w / 2.0;
  const double by0 = b.cy - b.h / 2.0, by1 = b.cy + b.h / 2.0;

  const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

struct SequenceParams {
  int frames = 10;
  int channels = 1;
  int height = 64;
  int width = 64;
  int object_w = 8;
  int object_h = 8;
  double start_cx = 32.0;
  double start_cy = 32.0;
  double vx = 1.0;
  double vy = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

/// Frames in [0,1] plus per-frame ground-truth boxes. The object is a rigid
/// random-texture rectangle translating at constant velocity over a dark
/// background with optional per-pixel uniform noise.
struct SyntheticSequence {
  std::vector<Tensor3> frames;
  std::vector<Box> ground_truth;
  SequenceParams params;
};

/// Deterministic under seed: the texture is drawn once, then per-frame noise
/// in fixed pixel order. Object centers are rounded to the pixel grid before
/// rendering and the ground truth reports the rendered position.
inline SyntheticSequence generate_sequence(const SequenceParams& p) {
  if (p.frames < 1 || p.channels < 1 || p.height < 1 || p.width < 1) {
    throw UsageError("generate_sequence: dimensions and frame count must be >= 1");
  }
  if (p.object_w < 1 || p.object_h < 1 || p.object_w > p.width || p.object_h > p.height) {
    throw UsageError("generate_sequence: object does not fit in the frame");
  }
  if (!(p.noise >= 0.0 && p.noise <= 1.0)) {
    throw UsageError("generate_sequence: noise level must lie in [0,1]");
  }

  Rng rng(p.seed);

  Tensor3 texture(Shape3{p.channels, p.object_h, p.object_w});
  for (auto& v : texture.data()) v = rng.uniform(0.35, 1.0);

  SyntheticSequence seq;
  seq.params = p;
  seq.frames.reserve(p.frames);
  seq.ground_truth.reserve(p.frames);

  for (int f = 0; f < p.frames; ++f) {
    const double cx = p.start_cx + f * p.vx;
    const double cy = p.start_cy + f * p.vy;
    const int left = static_cast<int>(std::lround(cx - p.object_w / 2.0));
    const int top = static_cast<int>(std::lround(cy - p.object_h / 2.0));
    if (left < 0 || top < 0 || left + p.object_w > p.width || top + p.object_h > p.height) {
      throw UsageError("generate_sequence: object leaves frame bounds at frame " +
                       std::to_string(f + 1));
    }

    Tensor3 frame(Shape3{p.channels, p.height, p.width});
    if (p.noise > 0.0) {
      for (auto& v : frame.data()) v = rng.uniform(0.0, p.noise);
    }
    for (int c = 0; c < p.channels; ++c) {
      for (int y = 0; y < p.object_h; ++y) {
        for (int x = 0; x < p.object_w; ++x) {
          frame.at(c, top + y, left + x) = texture.at(c, y, x);
        }
      }
    }

    seq.frames.push_back(std::move(frame));
    seq.ground_truth.push_back(Box{left + p.object_w / 2.0, top + p.object_h / 2.0,
                                   static_cast<double>(p.object_w),
                                   static_cast<double>(p.object_h)});
  }
  return seq;
}

} // namespace spiketrack
