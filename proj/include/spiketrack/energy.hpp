#pragma once

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "spiketrack/error.hpp"
#include "spiketrack/snn.hpp"

namespace spiketrack {

/// Published per-frame cost of a reference tracker on its original hardware.
/// These rows are carried as constants for report formatting only.
struct EnergyBaseline {
  std::string name;
  double flops = 0.0;  // 0 when the source does not report FLOPs
  double watts = 0.0;
  double time_ms = 0.0;
  double joules = 0.0;
};

/// Neuromorphic cost model: synaptic operations per second per Watt and the
/// global clock period.
struct EnergyModel {
  double sops_per_watt = 4.0e11;
  double timestep_seconds = 1e-3;
  std::vector<EnergyBaseline> baselines = default_baselines();

  void validate() const {
    if (!(sops_per_watt > 0.0) || !(timestep_seconds > 0.0)) {
      throw ValidationError("EnergyModel: constants must be positive");
    }
  }

  static std::vector<EnergyBaseline> default_baselines() {
    return {
        {"SiamFC", 5.44e9, 250.0, 11.63, 2.91},
        {"SiamRPN++", 1.42e10, 250.0, 28.57, 7.14},
        {"DSTfc", 0.0, 250.0, 4.35, 1.10},
        {"ECO", 0.0, 120.0, 452.49, 54.3},
    };
  }
};

/// Estimated cost of one simulated run.
struct EnergyReport {
  std::uint64_t total_sops = 0;
  int run_steps = 0;
  double sops_rate = 0.0;  // ops per wall-clock second
  double power_watts = 0.0;
  double wall_ms = 0.0;
  double energy_joules = 0.0;
};

/// Converts an op count into power/time/energy:
///   rate   = total_ops / (steps * timestep)
///   power  = rate / sops_per_watt
///   wall   = steps * timestep
///   energy = power * wall  (== total_ops / sops_per_watt)
inline EnergyReport estimate(const OpCounter& counter, int steps,
                             const EnergyModel& model = {}) {
  model.validate();
  if (steps < 1) throw UsageError("estimate: need at least one step");

  EnergyReport report;
  report.total_sops = counter.total;
  report.run_steps = steps;
  const double wall_seconds = steps * model.timestep_seconds;
  report.sops_rate = static_cast<double>(counter.total) / wall_seconds;
  report.power_watts = report.sops_rate / model.sops_per_watt;
  report.wall_ms = wall_seconds * 1000.0;
  report.energy_joules = report.power_watts * wall_seconds;
  return report;
}

/// Aligned plain-text comparison table: the baseline rows followed by the
/// measured run.
inline std::string format_energy_table(const EnergyReport& snn,
                                       const std::vector<EnergyBaseline>& baselines,
                                       const std::string& snn_name = "SNN (this run)") {
  std::ostringstream os;
  os << std::left << std::setw(16) << "Method" << std::right << std::setw(12)
     << "FLOPs/SOPS" << std::setw(12) << "Power (W)" << std::setw(12) << "Time (ms)"
     << std::setw(14) << "Energy (J)" << "\n";

  auto sci = [](double v) {
    std::ostringstream s;
    if (v == 0.0) {
      s << "--";
    } else {
      s << std::scientific << std::setprecision(2) << v;
    }
    return s.str();
  };
  auto fixed = [](double v, int prec) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(prec) << v;
    return s.str();
  };

  for (const EnergyBaseline& row : baselines) {
    os << std::left << std::setw(16) << row.name << std::right << std::setw(12)
       << sci(row.flops) << std::setw(12) << fixed(row.watts, 2) << std::setw(12)
       << fixed(row.time_ms, 2) << std::setw(14) << fixed(row.joules, 4) << "\n";
  }
  os << std::left << std::setw(16) << snn_name << std::right << std::setw(12)
     << sci(snn.sops_rate) << std::setw(12) << sci(snn.power_watts) << std::setw(12)
     << fixed(snn.wall_ms, 2) << std::setw(14) << sci(snn.energy_joules) << "\n";
  return os.str();
}

} // namespace spiketrack
