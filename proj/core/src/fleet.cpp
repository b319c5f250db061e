#include "srla/fleet.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace srla {

namespace {

Eigen::MatrixXd rows_to_matrix(const std::vector<CycleRecord>& cycles, int t,
                               bool sensors) {
  if (t < 0 || t > static_cast<int>(cycles.size())) {
    throw std::invalid_argument("UnitRun: prefix length out of range");
  }
  const int cols = cycles.empty()
                       ? 0
                       : static_cast<int>(sensors ? cycles.front().sensors.size()
                                                  : cycles.front().op_settings.size());
  Eigen::MatrixXd m(t, cols);
  for (int i = 0; i < t; ++i) {
    const auto& src = sensors ? cycles[i].sensors : cycles[i].op_settings;
    for (int j = 0; j < cols; ++j) m(i, j) = src[j];
  }
  return m;
}

}  // namespace

Eigen::MatrixXd UnitRun::sensor_matrix() const {
  return rows_to_matrix(cycles, lifetime(), true);
}

Eigen::MatrixXd UnitRun::setting_matrix() const {
  return rows_to_matrix(cycles, lifetime(), false);
}

Eigen::MatrixXd UnitRun::sensor_prefix(int t) const {
  return rows_to_matrix(cycles, t, true);
}

Eigen::MatrixXd UnitRun::setting_prefix(int t) const {
  return rows_to_matrix(cycles, t, false);
}

int Fleet::n_settings() const {
  if (units.empty() || units.front().cycles.empty()) return 0;
  return static_cast<int>(units.front().cycles.front().op_settings.size());
}

int Fleet::n_sensors() const {
  if (units.empty() || units.front().cycles.empty()) return 0;
  return static_cast<int>(units.front().cycles.front().sensors.size());
}

bool Fleet::has_annotations() const {
  if (units.empty()) return false;
  for (const auto& u : units) {
    for (const auto& c : u.cycles) {
      if (!c.health.has_value() || !c.rul_truth.has_value()) return false;
    }
  }
  return true;
}

void Fleet::validate() const {
  const int s = n_settings();
  const int m = n_sensors();
  std::set<int> ids;
  for (const auto& u : units) {
    if (!ids.insert(u.unit_id).second) {
      throw std::runtime_error("Fleet: duplicate unit id " + std::to_string(u.unit_id));
    }
    if (u.cycles.empty()) {
      throw std::runtime_error("Fleet: unit " + std::to_string(u.unit_id) + " has no cycles");
    }
    for (std::size_t i = 0; i < u.cycles.size(); ++i) {
      const auto& c = u.cycles[i];
      if (c.cycle_index != static_cast<int>(i) + 1) {
        throw std::runtime_error("Fleet: unit " + std::to_string(u.unit_id) +
                                 " has non-contiguous cycle indices at position " +
                                 std::to_string(i + 1));
      }
      if (static_cast<int>(c.op_settings.size()) != s ||
          static_cast<int>(c.sensors.size()) != m) {
        throw std::runtime_error("Fleet: unit " + std::to_string(u.unit_id) +
                                 " has inconsistent feature dimensions");
      }
    }
    if (!u.phase_truth.empty() && u.phase_truth.size() != u.cycles.size()) {
      throw std::runtime_error("Fleet: unit " + std::to_string(u.unit_id) +
                               " has phase annotations of the wrong length");
    }
  }
}

}  // namespace srla
