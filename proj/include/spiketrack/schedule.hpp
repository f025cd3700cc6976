#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "spiketrack/error.hpp"

namespace spiketrack {

/// Firing-threshold schedule V_th(t) for integrate-and-fire layers.
///
/// Variants:
///   constant    — fixed threshold v.
///   phase       — V_th(t) = 2^-(1 + ((t-1) mod K)); K steps encode K bits.
///   burst       — per-neuron: threshold halves after each consecutive spike
///                 (down to halving_floor) and resets to base after a silent
///                 step. The pure per-step query returns the base value; the
///                 layer stepper owns the per-neuron state.
///   two_status  — alternating potentiation windows (threshold beta, length p)
///                 and depression windows (threshold alpha, typically +inf so
///                 no spike can fire and the membrane accumulates).
struct ThresholdSchedule {
  enum class Kind { constant, phase, burst, two_status };

  Kind kind = Kind::constant;

  // constant
  double value = 1.0;

  // phase
  int period_k = 8;

  // burst
  double burst_base = 1.0;
  double burst_floor = 0.125;

  // two_status
  int status_period = 5;
  double alpha = std::numeric_limits<double>::infinity();
  double beta = 0.5;
  bool potentiation_first = true;

  static ThresholdSchedule constant(double v) {
    ThresholdSchedule s;
    s.kind = Kind::constant;
    s.value = v;
    return s;
  }

  static ThresholdSchedule phase(int k) {
    ThresholdSchedule s;
    s.kind = Kind::phase;
    s.period_k = k;
    return s;
  }

  static ThresholdSchedule burst(double base = 1.0, double floor = 0.125) {
    ThresholdSchedule s;
    s.kind = Kind::burst;
    s.burst_base = base;
    s.burst_floor = floor;
    return s;
  }

  static ThresholdSchedule two_status(int p = 5,
                                      double alpha = std::numeric_limits<double>::infinity(),
                                      double beta = 0.5,
                                      bool potentiation_first = true) {
    ThresholdSchedule s;
    s.kind = Kind::two_status;
    s.status_period = p;
    s.alpha = alpha;
    s.beta = beta;
    s.potentiation_first = potentiation_first;
    return s;
  }

  void validate() const {
    switch (kind) {
      case Kind::constant:
        if (!(value > 0.0)) throw ValidationError("constant schedule: threshold must be > 0");
        break;
      case Kind::phase:
        if (period_k < 1) throw ValidationError("phase schedule: K must be >= 1");
        break;
      case Kind::burst:
        if (!(burst_base > 0.0) || !(burst_floor > 0.0) || burst_floor > burst_base)
          throw ValidationError("burst schedule: need 0 < halving_floor <= base");
        break;
      case Kind::two_status:
        if (status_period < 1) throw ValidationError("two_status schedule: p must be >= 1");
        if (!(beta > 0.0)) throw ValidationError("two_status schedule: beta must be > 0");
        if (!(alpha > beta)) throw ValidationError("two_status schedule: alpha must be > beta");
        break;
    }
  }

  /// True when step t (1-based) falls in a depression window.
  bool in_depression(int t) const {
    if (kind != Kind::two_status) return false;
    const int status = ((t - 1) / status_period) % 2;
    return potentiation_first ? status == 1 : status == 0;
  }

  std::string name() const {
    switch (kind) {
      case Kind::constant: return "constant";
      case Kind::phase: return "phase";
      case Kind::burst: return "burst";
      case Kind::two_status: return "two_status";
    }
    return "?";
  }
};

/// V_th at step t >= 1. May return +inf (two-status depression); callers must
/// gate firing on a comparison against the returned value and never feed an
/// infinite threshold into reset arithmetic.
inline double threshold_at(const ThresholdSchedule& schedule, int t) {
  if (t < 1) {
    throw UsageError("threshold_at: time steps are 1-based, got t=" + std::to_string(t));
  }
  schedule.validate();
  switch (schedule.kind) {
    case ThresholdSchedule::Kind::constant:
      return schedule.value;
    case ThresholdSchedule::Kind::phase:
      return std::pow(2.0, -(1 + ((t - 1) % schedule.period_k)));
    case ThresholdSchedule::Kind::burst:
      return schedule.burst_base;
    case ThresholdSchedule::Kind::two_status:
      return schedule.in_depression(t) ? schedule.alpha : schedule.beta;
  }
  throw UsageError("threshold_at: unknown schedule kind");
}

} // namespace spiketrack
