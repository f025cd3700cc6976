#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <vector>

#include "spiketrack/error.hpp"
#include "spiketrack/snn.hpp"
#include "spiketrack/tensor.hpp"

namespace spiketrack {

/// Spike-train similarity configuration.
struct HseConfig {
  enum class Mode { pse, tse, wtse, hse };

  /// Weight applied to the windowed-temporal term inside the hybrid blend.
  ///   four_t_tau        — 1 / (2T * 2tau), with 2tau replaced by 1 at tau=0
  ///   two_t_2tau_plus_1 — 1 / (2T * (2tau + 1))
  enum class TemporalWeight { four_t_tau, two_t_2tau_plus_1 };

  int steps = 20;
  int tau = 1;
  double bias = 0.0;
  Mode mode = Mode::hse;
  TemporalWeight temporal_weight = TemporalWeight::four_t_tau;

  void validate() const {
    if (steps < 1) throw UsageError("HseConfig: T must be >= 1");
    if (tau < 0) throw UsageError("HseConfig: tau must be >= 0");
  }

  double wtse_blend_weight() const {
    const double denom = temporal_weight == TemporalWeight::four_t_tau
                             ? 2.0 * steps * std::max(2 * tau, 1)
                             : 2.0 * steps * (2 * tau + 1);
    return 1.0 / denom;
  }
};

inline const char* mode_name(HseConfig::Mode mode) {
  switch (mode) {
    case HseConfig::Mode::pse: return "pse";
    case HseConfig::Mode::tse: return "tse";
    case HseConfig::Mode::wtse: return "wtse";
    case HseConfig::Mode::hse: return "hse";
  }
  return "?";
}

namespace detail {

inline void check_train_pair(const SpikeTensor& z, const SpikeTensor& x) {
  if (z.steps() != x.steps()) {
    throw UsageError("similarity: spike trains cover different periods (T=" +
                     std::to_string(z.steps()) + " vs T=" + std::to_string(x.steps()) + ")");
  }
  if (z.shape().c != x.shape().c) {
    throw DimensionError("similarity: channel mismatch between " + z.shape().str() +
                         " and " + x.shape().str());
  }
  if (z.shape().h > x.shape().h || z.shape().w > x.shape().w) {
    throw DimensionError("similarity: exemplar features " + z.shape().str() +
                         " larger than search features " + x.shape().str());
  }
}

inline void accumulate(ResponseMap& into, const ResponseMap& term, double weight) {
  for (std::size_t i = 0; i < into.values.size(); ++i) {
    into.values[i] += weight * term.values[i];
  }
}

} // namespace detail

/// Potential similarity: accumulate each stream's spike magnitudes over time,
/// then correlate the two potential tensors once.
inline ResponseMap pse(const SpikeTensor& z_train, const SpikeTensor& x_train,
                       std::uint64_t* mac_count = nullptr) {
  detail::check_train_pair(z_train, x_train);
  ResponseMap map = xcorr_valid(z_train.potential_sum(), x_train.potential_sum());
  map.provenance = ResponseMap::Provenance::pse;
  if (mac_count) *mac_count += xcorr_mac_count(z_train.shape(), x_train.shape());
  return map;
}

/// Temporal similarity: correlate the two streams step by step and sum the
/// per-step response maps. Steps where either stream is silent contribute
/// nothing and are skipped.
inline ResponseMap tse(const SpikeTensor& z_train, const SpikeTensor& x_train,
                       std::uint64_t* mac_count = nullptr) {
  detail::check_train_pair(z_train, x_train);
  ResponseMap map(x_train.shape().h - z_train.shape().h + 1,
                  x_train.shape().w - z_train.shape().w + 1,
                  ResponseMap::Provenance::tse);
  for (int t = 1; t <= z_train.steps(); ++t) {
    if (z_train.at_step(t).empty() || x_train.at_step(t).empty()) continue;
    detail::accumulate(map, xcorr_valid(z_train.frame(t), x_train.frame(t)), 1.0);
    if (mac_count) *mac_count += xcorr_mac_count(z_train.shape(), x_train.shape());
  }
  return map;
}

/// Windowed temporal similarity: every exemplar step m within tau of a search
/// step t contributes its correlation attenuated by 1/(2|t-m|+1); steps
/// outside [1,T] count as silent.
inline ResponseMap wtse(const SpikeTensor& z_train, const SpikeTensor& x_train, int tau,
                        std::uint64_t* mac_count = nullptr) {
  detail::check_train_pair(z_train, x_train);
  if (tau < 0) throw UsageError("wtse: tau must be >= 0");

  const int steps = z_train.steps();
  ResponseMap map(x_train.shape().h - z_train.shape().h + 1,
                  x_train.shape().w - z_train.shape().w + 1,
                  ResponseMap::Provenance::wtse);
  for (int t = 1; t <= steps; ++t) {
    if (x_train.at_step(t).empty()) continue;
    const Tensor3 x_frame = x_train.frame(t);
    for (int m = t - tau; m <= t + tau; ++m) {
      if (m < 1 || m > steps) continue;
      if (z_train.at_step(m).empty()) continue;
      const double weight = 1.0 / (2.0 * std::abs(t - m) + 1.0);
      detail::accumulate(map, xcorr_valid(z_train.frame(m), x_frame), weight);
      if (mac_count) *mac_count += xcorr_mac_count(z_train.shape(), x_train.shape());
    }
  }
  return map;
}

/// Hybrid response: magnitude-normalized blend of the potential and windowed
/// temporal maps plus a constant bias at every position.
inline ResponseMap hse(const SpikeTensor& z_train, const SpikeTensor& x_train,
                       const HseConfig& cfg, std::uint64_t* mac_count = nullptr) {
  cfg.validate();
  detail::check_train_pair(z_train, x_train);
  if (z_train.steps() != cfg.steps) {
    throw UsageError("hse: config T=" + std::to_string(cfg.steps) +
                     " does not match train T=" + std::to_string(z_train.steps()));
  }

  const ResponseMap potential = pse(z_train, x_train, mac_count);
  const ResponseMap temporal = wtse(z_train, x_train, cfg.tau, mac_count);

  ResponseMap map(potential.h, potential.w, ResponseMap::Provenance::hse);
  const double t_steps = static_cast<double>(cfg.steps);
  const double pse_weight = 1.0 / (t_steps * t_steps);
  const double wtse_weight = cfg.wtse_blend_weight();
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    map.values[i] =
        pse_weight * potential.values[i] + wtse_weight * temporal.values[i] + cfg.bias;
  }
  return map;
}

/// Dispatch per configured mode. PSE/TSE/WTSE maps are returned raw (no bias);
/// the hybrid map applies the blend weights and bias.
inline ResponseMap estimate_response(const SpikeTensor& z_train, const SpikeTensor& x_train,
                                     const HseConfig& cfg,
                                     std::uint64_t* mac_count = nullptr) {
  cfg.validate();
  switch (cfg.mode) {
    case HseConfig::Mode::pse: return pse(z_train, x_train, mac_count);
    case HseConfig::Mode::tse: return tse(z_train, x_train, mac_count);
    case HseConfig::Mode::wtse: return wtse(z_train, x_train, cfg.tau, mac_count);
    case HseConfig::Mode::hse: return hse(z_train, x_train, cfg, mac_count);
  }
  throw UsageError("estimate_response: unknown mode");
}

} // namespace spiketrack
