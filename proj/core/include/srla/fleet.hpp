#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace srla {

/// One observed flight cycle of a unit: operating settings, sensor readings,
/// and optional ground-truth annotations (synthetic fleets carry them, real
/// C-MAPSS files do not).
struct CycleRecord {
  int cycle_index = 0;  // 1-based, contiguous within a unit
  std::vector<double> op_settings;
  std::vector<double> sensors;
  std::optional<double> health;    // in [0, 1], 1 = new
  std::optional<int> rul_truth;    // remaining cycles before failure
};

/// One engine's run-to-failure time series. The final cycle is the failure
/// cycle by construction.
struct UnitRun {
  int unit_id = 0;
  std::vector<CycleRecord> cycles;
  std::vector<int> phase_truth;  // generator phase per cycle; empty when unknown

  int lifetime() const { return static_cast<int>(cycles.size()); }
  Eigen::MatrixXd sensor_matrix() const;   // T x M
  Eigen::MatrixXd setting_matrix() const;  // T x S
  /// First `t` cycles as matrices (prefix views used by online policies).
  Eigen::MatrixXd sensor_prefix(int t) const;
  Eigen::MatrixXd setting_prefix(int t) const;
};

struct Fleet {
  std::vector<UnitRun> units;
  std::vector<std::string> feature_names;  // sensor columns
  std::uint64_t split_seed = 0;

  int n_units() const { return static_cast<int>(units.size()); }
  int n_settings() const;
  int n_sensors() const;
  bool has_annotations() const;

  /// Checks run-to-failure invariants: contiguous 1..T cycle indices, shared
  /// setting/sensor dimensions, unique unit ids. Throws on violation.
  void validate() const;
};

}  // namespace srla
