#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "spiketrack/convert.hpp"
#include "spiketrack/error.hpp"
#include "spiketrack/schedule.hpp"
#include "spiketrack/tensor.hpp"

namespace spiketrack {

/// One spike: position within the layer grid and the emitting threshold
/// V_th(t) stamped as magnitude at fire time.
struct SpikeEvent {
  int c = 0;
  int y = 0;
  int x = 0;
  double magnitude = 0.0;
};

/// Binary spike events over a [C,H,W] grid across T discrete steps. Events are
/// stored per step in neuron scan order; at most one event per neuron per step.
class SpikeTensor {
public:
  SpikeTensor() = default;

  SpikeTensor(Shape3 shape, int steps) : shape_(shape), by_step_(steps) {
    if (steps < 1) throw UsageError("SpikeTensor: need at least one time step");
    if (shape.c < 1 || shape.h < 1 || shape.w < 1) {
      throw DimensionError("SpikeTensor: all dimensions must be >= 1, got " + shape.str());
    }
  }

  const Shape3& shape() const { return shape_; }
  int steps() const { return static_cast<int>(by_step_.size()); }

  void add(int t, int c, int y, int x, double magnitude) {
    check_step(t);
    if (c < 0 || c >= shape_.c || y < 0 || y >= shape_.h || x < 0 || x >= shape_.w) {
      throw DimensionError("SpikeTensor::add: position out of bounds for " + shape_.str());
    }
    if (!(magnitude > 0.0)) {
      throw UsageError("SpikeTensor::add: spike magnitudes must be > 0");
    }
    by_step_[t - 1].push_back(SpikeEvent{c, y, x, magnitude});
  }

  void add_events(int t, std::vector<SpikeEvent> events) {
    check_step(t);
    by_step_[t - 1] = std::move(events);
  }

  const std::vector<SpikeEvent>& at_step(int t) const {
    check_step(t);
    return by_step_[t - 1];
  }

  /// Dense magnitude frame at step t (zeros where no spike fired).
  Tensor3 frame(int t) const {
    Tensor3 out(shape_);
    for (const SpikeEvent& e : at_step(t)) out.at(e.c, e.y, e.x) = e.magnitude;
    return out;
  }

  /// Sum of spike magnitudes per neuron over all steps.
  Tensor3 potential_sum() const {
    Tensor3 out(shape_);
    for (const auto& events : by_step_)
      for (const SpikeEvent& e : events) out.at(e.c, e.y, e.x) += e.magnitude;
    return out;
  }

  /// Spike count per neuron over all steps.
  Tensor3 spike_counts() const {
    Tensor3 out(shape_);
    for (const auto& events : by_step_)
      for (const SpikeEvent& e : events) out.at(e.c, e.y, e.x) += 1.0;
    return out;
  }

  std::size_t total_events() const {
    std::size_t n = 0;
    for (const auto& events : by_step_) n += events.size();
    return n;
  }

private:
  void check_step(int t) const {
    if (t < 1 || t > steps()) {
      throw UsageError("SpikeTensor: step " + std::to_string(t) +
                       " outside 1.." + std::to_string(steps()));
    }
  }

  Shape3 shape_;
  std::vector<std::vector<SpikeEvent>> by_step_;
};

/// Spike count / T per neuron; magnitudes are ignored.
inline Tensor3 firing_rate(const SpikeTensor& train) {
  Tensor3 rates = train.spike_counts();
  const double steps = static_cast<double>(train.steps());
  for (auto& v : rates.data()) v /= steps;
  return rates;
}

/// Synaptic-operation counts: one op per (presynaptic spike x postsynaptic
/// fan-out connection) plus one op per neuron per step for bias injection.
struct OpCounter {
  std::vector<std::uint64_t> per_layer;
  std::uint64_t total = 0;

  void add(std::size_t layer, std::uint64_t ops) {
    if (layer >= per_layer.size()) per_layer.resize(layer + 1, 0);
    per_layer[layer] += ops;
    total += ops;
  }
};

/// Membrane potentials of one layer plus the per-neuron threshold state that
/// burst coding needs.
struct MembraneState {
  Tensor3 v_mem;
  std::vector<double> burst_threshold;

  explicit MembraneState(Shape3 shape) : v_mem(shape) {}

  void enable_burst(double base) {
    burst_threshold.assign(v_mem.size(), base);
  }
};

struct SimConfig {
  int steps = 20;
  ThresholdSchedule schedule = ThresholdSchedule::two_status();
  std::uint64_t seed = 0;

  void validate() const {
    if (steps < 1) throw UsageError("SimConfig: need at least one time step");
    schedule.validate();
  }
};

namespace detail {

/// Scatters one presynaptic spike through the kernel into the input-current
/// grid; returns the number of weighted accumulations performed.
inline std::uint64_t scatter_event(const SpikeEvent& e, const ConvSpec& spec,
                                   Tensor3& current) {
  const Shape3 out = current.shape();
  const int s = spec.stride;
  int oy_lo = (e.y - spec.kh + 1 + s - 1) / s;  // ceil for nonnegative offsets
  if (e.y - spec.kh + 1 < 0) oy_lo = 0;
  int oy_hi = e.y / s;
  int ox_lo = (e.x - spec.kw + 1 + s - 1) / s;
  if (e.x - spec.kw + 1 < 0) ox_lo = 0;
  int ox_hi = e.x / s;
  oy_lo = std::max(oy_lo, 0);
  ox_lo = std::max(ox_lo, 0);
  oy_hi = std::min(oy_hi, out.h - 1);
  ox_hi = std::min(ox_hi, out.w - 1);

  std::uint64_t macs = 0;
  for (int oy = oy_lo; oy <= oy_hi; ++oy) {
    for (int ox = ox_lo; ox <= ox_hi; ++ox) {
      const int ky = e.y - oy * s;
      const int kx = e.x - ox * s;
      for (int o = 0; o < spec.out_ch; ++o) {
        current.at(o, oy, ox) += spec.weight(o, e.c, ky, kx) * e.magnitude;
        ++macs;
      }
    }
  }
  return macs;
}

/// Integrates a precomputed input current and fires; reset by subtraction.
/// Returns spikes in neuron scan order. With an infinite threshold (two-status
/// depression) the comparison fails for every finite potential, so no neuron
/// fires and no reset arithmetic touches the infinity.
inline std::vector<SpikeEvent> integrate_and_fire(MembraneState& state,
                                                  const Tensor3& current,
                                                  const ThresholdSchedule& schedule,
                                                  int t) {
  const Shape3 shape = state.v_mem.shape();
  const bool burst = schedule.kind == ThresholdSchedule::Kind::burst;
  const double scheduled_vth = burst ? 0.0 : threshold_at(schedule, t);

  std::vector<SpikeEvent> spikes;
  std::size_t idx = 0;
  for (int c = 0; c < shape.c; ++c) {
    for (int y = 0; y < shape.h; ++y) {
      for (int x = 0; x < shape.w; ++x, ++idx) {
        double v = state.v_mem.at(c, y, x) + current.at(c, y, x);
        const double vth = burst ? state.burst_threshold[idx] : scheduled_vth;
        bool fired = false;
        if (v >= vth) {
          spikes.push_back(SpikeEvent{c, y, x, vth});
          v -= vth;
          fired = true;
        }
        state.v_mem.at(c, y, x) = v;
        if (burst) {
          state.burst_threshold[idx] =
              fired ? std::max(state.burst_threshold[idx] / 2.0, schedule.burst_floor)
                    : schedule.burst_base;
        }
      }
    }
  }
  return spikes;
}

} // namespace detail

/// One IF timestep of a spiking conv layer driven by presynaptic spikes:
/// input current z = sum of w * magnitude over incoming spikes plus the bias
/// injected every step, V += z, fire-and-subtract at V >= V_th(t).
inline std::vector<SpikeEvent> step_layer(MembraneState& state, const ConvSpec& weights,
                                          const std::vector<SpikeEvent>& in_spikes,
                                          const ThresholdSchedule& schedule, int t,
                                          OpCounter* ops = nullptr,
                                          std::size_t layer_index = 0) {
  const Shape3 out_shape = state.v_mem.shape();
  Tensor3 current(out_shape);
  for (int o = 0; o < weights.out_ch; ++o)
    for (int y = 0; y < out_shape.h; ++y)
      for (int x = 0; x < out_shape.w; ++x) current.at(o, y, x) = weights.bias[o];

  std::uint64_t macs = 0;
  for (const SpikeEvent& e : in_spikes) macs += detail::scatter_event(e, weights, current);
  if (ops) ops->add(layer_index, macs + out_shape.volume());

  return detail::integrate_and_fire(state, current, schedule, t);
}

/// One IF timestep of the first spiking layer under real input coding: the
/// analog image is applied as a constant current (conv of the raw values plus
/// bias) at every step.
inline std::vector<SpikeEvent> step_layer_analog(MembraneState& state,
                                                 const ConvSpec& weights,
                                                 const Tensor3& constant_current,
                                                 const ThresholdSchedule& schedule, int t,
                                                 OpCounter* ops = nullptr,
                                                 std::size_t layer_index = 0) {
  const Shape3 out_shape = state.v_mem.shape();
  if (ops) {
    const std::uint64_t macs = out_shape.volume() *
                               static_cast<std::uint64_t>(weights.in_ch) *
                               weights.kh * weights.kw;
    ops->add(layer_index, macs + out_shape.volume());
  }
  return detail::integrate_and_fire(state, constant_current, schedule, t);
}

/// Running-rate state for spike max-pooling: cumulative spike counts per input
/// neuron, updated before each selection.
struct PoolState {
  Tensor3 cumulative_counts;

  explicit PoolState(Shape3 input_shape) : cumulative_counts(input_shape) {}
};

/// Forwards, per output window, the current spike (if any) of the input neuron
/// with the highest running firing-rate estimate (cumulative count / t); ties
/// break to the lowest linear neuron index.
inline std::vector<SpikeEvent> spike_maxpool(PoolState& state,
                                             const std::vector<SpikeEvent>& in_spikes,
                                             int window, int stride) {
  const Shape3 in = state.cumulative_counts.shape();
  if (window > in.h || window > in.w) {
    throw DimensionError("spike_maxpool: window " + std::to_string(window) +
                         " larger than input " + in.str());
  }

  Tensor3 frame(in);
  for (const SpikeEvent& e : in_spikes) {
    state.cumulative_counts.at(e.c, e.y, e.x) += 1.0;
    frame.at(e.c, e.y, e.x) = e.magnitude;
  }

  const int out_h = (in.h - window) / stride + 1;
  const int out_w = (in.w - window) / stride + 1;
  std::vector<SpikeEvent> out;
  for (int c = 0; c < in.c; ++c) {
    for (int oy = 0; oy < out_h; ++oy) {
      for (int ox = 0; ox < out_w; ++ox) {
        int best_y = oy * stride, best_x = ox * stride;
        double best_count = -1.0;
        for (int ky = 0; ky < window; ++ky) {
          for (int kx = 0; kx < window; ++kx) {
            const int y = oy * stride + ky;
            const int x = ox * stride + kx;
            const double count = state.cumulative_counts.at(c, y, x);
            if (count > best_count) {
              best_count = count;
              best_y = y;
              best_x = x;
            }
          }
        }
        const double magnitude = frame.at(c, best_y, best_x);
        if (magnitude > 0.0) out.push_back(SpikeEvent{c, oy, ox, magnitude});
      }
    }
  }
  return out;
}

/// Per-layer spike trains plus the op ledger of one simulation run.
struct RunResult {
  std::vector<SpikeTensor> layer_trains;
  OpCounter ops;
  int steps = 0;

  const SpikeTensor& output_train() const { return layer_trains.back(); }
};

/// Output shape of each SNN layer given the model input shape.
inline std::vector<Shape3> snn_layer_shapes(const SnnModel& model) {
  std::vector<Shape3> shapes;
  Shape3 cur = model.input_shape;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (const auto* conv = std::get_if<SpikingConvLayer>(&model.layers[i])) {
      const ConvSpec& s = conv->spec;
      if (cur.c != s.in_ch || cur.h < s.kh || cur.w < s.kw) {
        throw DimensionError("layer " + std::to_string(i) + ": input " + cur.str() +
                             " incompatible with kernel " + s.kernel_shape_str());
      }
      cur = Shape3{s.out_ch, (cur.h - s.kh) / s.stride + 1, (cur.w - s.kw) / s.stride + 1};
    } else {
      const auto& pool = std::get<SpikeMaxPoolLayer>(model.layers[i]);
      if (pool.window > cur.h || pool.window > cur.w) {
        throw DimensionError("layer " + std::to_string(i) + ": pool window larger than " +
                             cur.str());
      }
      cur = Shape3{cur.c, (cur.h - pool.window) / pool.stride + 1,
                   (cur.w - pool.window) / pool.stride + 1};
    }
    shapes.push_back(cur);
  }
  return shapes;
}

/// Time-stepped simulation of a converted network on one input in [0,1].
/// The first layer integrates the analog input as a constant current; every
/// subsequent layer consumes the spikes of its predecessor within the same
/// step (layers are stepped in topological order).
inline RunResult run_network(const SnnModel& model, const Tensor3& input,
                             const SimConfig& cfg) {
  cfg.validate();
  model.validate();
  if (model.layers.empty() || !std::holds_alternative<SpikingConvLayer>(model.layers[0])) {
    throw ValidationError("run_network: model must start with a SpikingConv layer");
  }
  for (double v : input.data()) {
    if (!(v >= 0.0 && v <= 1.0 + 1e-9)) {
      throw UsageError("run_network: inputs must lie in [0,1]");
    }
  }

  std::vector<Shape3> shapes;
  {
    SnnModel probe = model;
    probe.input_shape = input.shape();
    shapes = snn_layer_shapes(probe);
  }

  const std::size_t n_layers = model.layers.size();
  std::vector<MembraneState> conv_states;
  std::vector<PoolState> pool_states;
  std::vector<int> state_index(n_layers, -1);
  Shape3 prev_shape = input.shape();
  for (std::size_t i = 0; i < n_layers; ++i) {
    if (std::holds_alternative<SpikingConvLayer>(model.layers[i])) {
      MembraneState state(shapes[i]);
      if (cfg.schedule.kind == ThresholdSchedule::Kind::burst) {
        state.enable_burst(cfg.schedule.burst_base);
      }
      state_index[i] = static_cast<int>(conv_states.size());
      conv_states.push_back(std::move(state));
    } else {
      state_index[i] = static_cast<int>(pool_states.size());
      pool_states.emplace_back(prev_shape);
    }
    prev_shape = shapes[i];
  }

  // Real input coding: the analog current through the first layer is constant
  // across steps, so the conv is evaluated once and re-injected every step.
  const ConvSpec& first_spec = std::get<SpikingConvLayer>(model.layers[0]).spec;
  const Tensor3 first_current = conv2d(input, first_spec);

  RunResult result;
  result.steps = cfg.steps;
  result.ops.per_layer.assign(n_layers, 0);
  result.layer_trains.reserve(n_layers);
  for (std::size_t i = 0; i < n_layers; ++i) {
    result.layer_trains.emplace_back(shapes[i], cfg.steps);
  }

  for (int t = 1; t <= cfg.steps; ++t) {
    std::vector<SpikeEvent> carried;
    for (std::size_t i = 0; i < n_layers; ++i) {
      if (const auto* conv = std::get_if<SpikingConvLayer>(&model.layers[i])) {
        std::vector<SpikeEvent> out;
        if (i == 0) {
          out = step_layer_analog(conv_states[state_index[i]], conv->spec, first_current,
                                  cfg.schedule, t, &result.ops, i);
        } else {
          out = step_layer(conv_states[state_index[i]], conv->spec, carried,
                           cfg.schedule, t, &result.ops, i);
        }
        carried = std::move(out);
      } else {
        const auto& pool = std::get<SpikeMaxPoolLayer>(model.layers[i]);
        carried = spike_maxpool(pool_states[state_index[i]], carried, pool.window,
                                pool.stride);
      }
      result.layer_trains[i].add_events(t, carried);
    }
  }
  return result;
}

} // namespace spiketrack
