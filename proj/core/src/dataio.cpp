#include "srla/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "srla/rng.hpp"

namespace srla {

namespace {

using nlohmann::json;

std::vector<std::string> default_sensor_names(int m) {
  std::vector<std::string> names;
  names.reserve(m);
  for (int j = 1; j <= m; ++j) names.push_back("s" + std::to_string(j));
  return names;
}

void stats_for_block(const Fleet& fleet, bool sensors, NormalizerKind kind,
                     Eigen::VectorXd& offset, Eigen::VectorXd& scale,
                     std::vector<std::uint8_t>& passthrough) {
  const int dim = sensors ? fleet.n_sensors() : fleet.n_settings();
  offset = Eigen::VectorXd::Zero(dim);
  scale = Eigen::VectorXd::Ones(dim);
  passthrough.assign(dim, 0);
  if (dim == 0) return;

  long count = 0;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd mn = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  Eigen::VectorXd mx = Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
  for (const auto& u : fleet.units) {
    for (const auto& c : u.cycles) {
      const auto& row = sensors ? c.sensors : c.op_settings;
      for (int j = 0; j < dim; ++j) {
        sum(j) += row[j];
        sum_sq(j) += row[j] * row[j];
        mn(j) = std::min(mn(j), row[j]);
        mx(j) = std::max(mx(j), row[j]);
      }
      ++count;
    }
  }
  for (int j = 0; j < dim; ++j) {
    if (kind == NormalizerKind::kStandard) {
      const double mean = sum(j) / static_cast<double>(count);
      const double var = sum_sq(j) / static_cast<double>(count) - mean * mean;
      const double sd = var > 0.0 ? std::sqrt(var) : 0.0;
      if (sd > 0.0) {
        offset(j) = mean;
        scale(j) = sd;
      } else {
        passthrough[j] = 1;
      }
    } else {
      if (mx(j) > mn(j)) {
        offset(j) = mn(j);
        scale(j) = mx(j) - mn(j);
      } else {
        passthrough[j] = 1;
      }
    }
  }
}

void apply_block(const Eigen::VectorXd& offset, const Eigen::VectorXd& scale,
                 std::vector<double>& row) {
  for (std::size_t j = 0; j < row.size(); ++j) {
    row[j] = (row[j] - offset(static_cast<int>(j))) / scale(static_cast<int>(j));
  }
}

}  // namespace

Fleet load_cmapss(const std::filesystem::path& file, int n_settings, int n_sensors) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("load_cmapss: cannot open " + file.string());

  std::map<int, UnitRun> by_id;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::istringstream ls(line);
    int unit_id = 0;
    CycleRecord rec;
    if (!(ls >> unit_id >> rec.cycle_index)) {
      throw std::runtime_error("load_cmapss: parse error at line " +
                               std::to_string(line_no));
    }
    rec.op_settings.resize(n_settings);
    rec.sensors.resize(n_sensors);
    for (int j = 0; j < n_settings; ++j) {
      if (!(ls >> rec.op_settings[j])) {
        throw std::runtime_error("load_cmapss: parse error at line " +
                                 std::to_string(line_no));
      }
    }
    for (int j = 0; j < n_sensors; ++j) {
      if (!(ls >> rec.sensors[j])) {
        throw std::runtime_error("load_cmapss: parse error at line " +
                                 std::to_string(line_no));
      }
    }
    std::string extra;
    if (ls >> extra) {
      throw std::runtime_error("load_cmapss: parse error at line " +
                               std::to_string(line_no) + " (unexpected extra field)");
    }
    auto& unit = by_id[unit_id];
    unit.unit_id = unit_id;
    unit.cycles.push_back(std::move(rec));
  }

  Fleet fleet;
  fleet.feature_names = default_sensor_names(n_sensors);
  for (auto& [id, unit] : by_id) {
    std::sort(unit.cycles.begin(), unit.cycles.end(),
              [](const CycleRecord& a, const CycleRecord& b) {
                return a.cycle_index < b.cycle_index;
              });
    for (std::size_t i = 0; i < unit.cycles.size(); ++i) {
      if (unit.cycles[i].cycle_index != static_cast<int>(i) + 1) {
        throw std::runtime_error("load_cmapss: unit " + std::to_string(id) +
                                 " has non-contiguous cycle indices");
      }
    }
    fleet.units.push_back(std::move(unit));
  }
  return fleet;
}

void write_cmapss(const Fleet& fleet, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_cmapss: cannot open " + file.string());
  out << std::setprecision(17);
  for (const auto& u : fleet.units) {
    for (const auto& c : u.cycles) {
      out << u.unit_id << ' ' << c.cycle_index;
      for (double v : c.op_settings) out << ' ' << v;
      for (double v : c.sensors) out << ' ' << v;
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write_cmapss: write failed for " + file.string());
}

std::pair<Fleet, Fleet> split_fleet(const Fleet& fleet, double train_fraction,
                                    std::uint64_t seed) {
  if (train_fraction <= 0.0 || train_fraction >= 1.0) {
    throw std::invalid_argument("split_fleet: train_fraction must be in (0, 1)");
  }
  const int n = fleet.n_units();
  if (n < 2) throw std::invalid_argument("split_fleet: need at least 2 units");

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "fleet-split"));
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  const int n_train =
      static_cast<int>(std::lround(train_fraction * static_cast<double>(n)));

  Fleet train, test;
  train.feature_names = test.feature_names = fleet.feature_names;
  train.split_seed = test.split_seed = seed;
  for (int i = 0; i < n; ++i) {
    (i < n_train ? train : test).units.push_back(fleet.units[order[i]]);
  }
  auto by_id = [](const UnitRun& a, const UnitRun& b) { return a.unit_id < b.unit_id; };
  std::sort(train.units.begin(), train.units.end(), by_id);
  std::sort(test.units.begin(), test.units.end(), by_id);
  return {std::move(train), std::move(test)};
}

Normalizer fit_normalizer(const Fleet& fleet, NormalizerKind kind) {
  if (fleet.units.empty()) throw std::invalid_argument("fit_normalizer: empty fleet");
  Normalizer norm;
  norm.kind = kind;
  stats_for_block(fleet, false, kind, norm.setting_offset, norm.setting_scale,
                  norm.setting_passthrough);
  stats_for_block(fleet, true, kind, norm.sensor_offset, norm.sensor_scale,
                  norm.sensor_passthrough);
  return norm;
}

Fleet apply_normalizer(const Normalizer& norm, const Fleet& fleet) {
  if (fleet.n_settings() != norm.setting_offset.size() ||
      fleet.n_sensors() != norm.sensor_offset.size()) {
    throw std::invalid_argument("apply_normalizer: dimension mismatch");
  }
  Fleet out = fleet;
  for (auto& u : out.units) {
    for (auto& c : u.cycles) {
      apply_block(norm.setting_offset, norm.setting_scale, c.op_settings);
      apply_block(norm.sensor_offset, norm.sensor_scale, c.sensors);
    }
  }
  return out;
}

RegimeNormalizer fit_regime_normalizer(const Fleet& fleet, NormalizerKind kind) {
  if (fleet.units.empty()) {
    throw std::invalid_argument("fit_regime_normalizer: empty fleet");
  }
  // Group cycles by rounded setting vector; regimes in the data are discrete.
  std::map<std::string, std::pair<Eigen::VectorXd, Fleet>> groups;
  const int s_dim = fleet.n_settings();
  for (const auto& u : fleet.units) {
    for (const auto& c : u.cycles) {
      std::ostringstream key;
      key << std::setprecision(6);
      Eigen::VectorXd settings(s_dim);
      for (int j = 0; j < s_dim; ++j) {
        key << std::round(c.op_settings[j] * 1e6) / 1e6 << '|';
        settings(j) = c.op_settings[j];
      }
      auto& slot = groups[key.str()];
      if (slot.second.units.empty()) {
        slot.first = settings;
        slot.second.units.push_back(UnitRun{0, {}, {}});
        slot.second.feature_names = fleet.feature_names;
      }
      slot.second.units.front().cycles.push_back(c);
      slot.second.units.front().cycles.back().cycle_index =
          static_cast<int>(slot.second.units.front().cycles.size());
    }
  }
  RegimeNormalizer norm;
  norm.kind = kind;
  for (auto& [key, slot] : groups) {
    norm.regime_settings.push_back(slot.first);
    norm.per_regime.push_back(fit_normalizer(slot.second, kind));
  }
  return norm;
}

Fleet apply_regime_normalizer(const RegimeNormalizer& norm, const Fleet& fleet) {
  if (norm.per_regime.empty()) {
    throw std::invalid_argument("apply_regime_normalizer: no regimes fitted");
  }
  Fleet out = fleet;
  for (auto& u : out.units) {
    for (auto& c : u.cycles) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < norm.regime_settings.size(); ++r) {
        double d = 0.0;
        for (int j = 0; j < norm.regime_settings[r].size(); ++j) {
          const double diff = c.op_settings[j] - norm.regime_settings[r](j);
          d += diff * diff;
        }
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(r);
        }
      }
      apply_block(norm.per_regime[best].sensor_offset, norm.per_regime[best].sensor_scale,
                  c.sensors);
    }
  }
  return out;
}

void SyntheticSpec::validate() const {
  if (n_units < 1) throw std::invalid_argument("SyntheticSpec: need at least 1 unit");
  if (n_sensors < 1 || n_settings < 0) {
    throw std::invalid_argument("SyntheticSpec: bad feature dimensions");
  }
  if (n_failure_modes < 1 || n_failure_modes >= n_phases) {
    throw std::invalid_argument("SyntheticSpec: failure modes must leave progression phases");
  }
  if (min_lifetime <= 0 || max_lifetime <= 0 || min_lifetime > max_lifetime) {
    throw std::invalid_argument("SyntheticSpec: lifetimes must be positive and ordered");
  }
  if (min_lifetime < n_progression_phases() + 1) {
    throw std::invalid_argument(
        "SyntheticSpec: min_lifetime shorter than the fastest possible path");
  }
  if (static_cast<int>(advance_prob.size()) != n_progression_phases()) {
    throw std::invalid_argument("SyntheticSpec: advance_prob per progression phase");
  }
  for (double p : advance_prob) {
    if (p <= 0.0 || p > 1.0) {
      throw std::invalid_argument("SyntheticSpec: advance probabilities must be in (0, 1]");
    }
  }
  if (phase_means.rows() != n_phases || phase_means.cols() != n_sensors ||
      phase_stddev.rows() != n_phases || phase_stddev.cols() != n_sensors) {
    throw std::invalid_argument("SyntheticSpec: phase moment shapes must be n_phases x n_sensors");
  }
  if ((phase_stddev.array() <= 0.0).any()) {
    throw std::invalid_argument("SyntheticSpec: phase stddev must be positive");
  }
  for (const auto& r : regimes) {
    if (static_cast<int>(r.settings.size()) != n_settings ||
        static_cast<int>(r.sensor_shift.size()) != n_sensors) {
      throw std::invalid_argument("SyntheticSpec: regime dimensions mismatch");
    }
  }
}

SyntheticSpec default_synthetic_spec(int n_units, int n_sensors, int n_phases,
                                     int n_failure_modes, int min_lifetime,
                                     int max_lifetime) {
  SyntheticSpec spec;
  spec.n_units = n_units;
  spec.n_sensors = n_sensors;
  spec.n_phases = n_phases;
  spec.n_failure_modes = n_failure_modes;
  spec.min_lifetime = min_lifetime;
  spec.max_lifetime = max_lifetime;

  const int progression = spec.n_progression_phases();
  const double target_mean = 0.5 * (min_lifetime + max_lifetime);
  // Short critical tail phase (mean ~8 cycles) so replacement decisions have
  // a detectable window; earlier phases share the remaining life evenly.
  const double tail_mean = std::min(8.0, std::max(2.0, (target_mean - 1.0) / progression));
  spec.advance_prob.assign(progression, 0.0);
  spec.advance_prob.back() = 1.0 / tail_mean;
  if (progression > 1) {
    const double head_mean =
        std::max(1.0, (target_mean - 1.0 - tail_mean) / (progression - 1));
    for (int k = 0; k + 1 < progression; ++k) spec.advance_prob[k] = 1.0 / head_mean;
  }

  spec.phase_means.resize(n_phases, n_sensors);
  spec.phase_stddev = Eigen::MatrixXd::Constant(n_phases, n_sensors, 0.5);
  for (int p = 0; p < n_phases; ++p) {
    for (int j = 0; j < n_sensors; ++j) {
      const double direction = (j % 3 == 0) ? 1.0 : (j % 3 == 1 ? -0.8 : 0.6);
      spec.phase_means(p, j) = 2.5 * p * direction;
    }
  }
  // Failure modes get distinct planted bumps so interpretation has ground truth.
  for (int m = 0; m < n_failure_modes; ++m) {
    const int p = progression + m;
    spec.phase_means(p, (2 * m) % n_sensors) += 4.0;
    spec.phase_means(p, (2 * m + 1) % n_sensors) += 4.0;
  }
  return spec;
}

Fleet generate_synthetic_fleet(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(derive_seed(seed, "synthetic-fleet"));
  const int progression = spec.n_progression_phases();
  const double health_rate = 5.0;
  const double health_floor = std::exp(-health_rate);

  Fleet fleet;
  fleet.feature_names = default_sensor_names(spec.n_sensors);
  for (int unit = 1; unit <= spec.n_units; ++unit) {
    const int mode = spec.n_failure_modes == 1
                         ? 0
                         : static_cast<int>(rng.below(spec.n_failure_modes));
    std::vector<int> phases;
    for (int attempt = 0;; ++attempt) {
      if (attempt >= 10000) {
        throw std::runtime_error(
            "generate_synthetic_fleet: lifetime range rejected 10000 paths; "
            "advance probabilities are inconsistent with the range");
      }
      phases.clear();
      int phase = 0;
      while (true) {
        phases.push_back(phase);
        if (static_cast<int>(phases.size()) > spec.max_lifetime) break;
        if (rng.uniform() < spec.advance_prob[phase]) {
          ++phase;
          if (phase == progression) {
            phases.push_back(progression + mode);  // failure cycle
            break;
          }
        }
      }
      const int t_len = static_cast<int>(phases.size());
      if (phases.back() >= progression && t_len >= spec.min_lifetime &&
          t_len <= spec.max_lifetime) {
        break;
      }
    }

    UnitRun run;
    run.unit_id = unit;
    run.phase_truth = phases;
    const int t_len = static_cast<int>(phases.size());
    for (int t = 1; t <= t_len; ++t) {
      CycleRecord rec;
      rec.cycle_index = t;
      const OperatingRegime* regime = nullptr;
      if (!spec.regimes.empty()) {
        regime = &spec.regimes[rng.below(spec.regimes.size())];
        rec.op_settings = regime->settings;
      } else {
        rec.op_settings.assign(spec.n_settings, 0.0);
      }
      rec.sensors.resize(spec.n_sensors);
      const int phase = phases[t - 1];
      for (int j = 0; j < spec.n_sensors; ++j) {
        double mean = spec.phase_means(phase, j);
        if (regime) mean += regime->sensor_shift[j];
        rec.sensors[j] = rng.normal(mean, spec.phase_stddev(phase, j));
      }
      const double pos = static_cast<double>(t) / static_cast<double>(t_len);
      rec.health = (std::exp(-health_rate * pos) - health_floor) / (1.0 - health_floor);
      rec.rul_truth = t_len - t;
      run.cycles.push_back(std::move(rec));
    }
    fleet.units.push_back(std::move(run));
  }
  fleet.validate();
  return fleet;
}

void write_truth_sidecar(const Fleet& fleet, const std::filesystem::path& file) {
  json doc;
  doc["format_version"] = 1;
  doc["kind"] = "fleet_truth";
  doc["n_settings"] = fleet.n_settings();
  doc["n_sensors"] = fleet.n_sensors();
  doc["units"] = json::array();
  for (const auto& u : fleet.units) {
    json ju;
    ju["unit_id"] = u.unit_id;
    ju["phase"] = u.phase_truth;
    json health = json::array();
    json rul = json::array();
    for (const auto& c : u.cycles) {
      health.push_back(c.health.value_or(-1.0));
      rul.push_back(c.rul_truth.value_or(-1));
    }
    ju["health"] = std::move(health);
    ju["rul"] = std::move(rul);
    doc["units"].push_back(std::move(ju));
  }
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_truth_sidecar: cannot open " + file.string());
  out << doc.dump(2) << '\n';
}

namespace {

json load_json_checked(const std::filesystem::path& file, const char* kind) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error(std::string(kind) + ": cannot open " + file.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string(kind) + ": malformed file " + file.string() +
                             " (" + e.what() + ")");
  }
  if (!doc.contains("format_version")) {
    throw std::runtime_error(std::string(kind) + ": missing format_version in " +
                             file.string());
  }
  if (doc["format_version"].get<int>() != 1) {
    throw std::runtime_error(std::string(kind) + ": unsupported format_version in " +
                             file.string());
  }
  return doc;
}

}  // namespace

void apply_truth_sidecar(Fleet& fleet, const std::filesystem::path& file) {
  const json doc = load_json_checked(file, "apply_truth_sidecar");
  std::map<int, const json*> by_id;
  for (const auto& ju : doc.at("units")) {
    by_id[ju.at("unit_id").get<int>()] = &ju;
  }
  for (auto& u : fleet.units) {
    const auto it = by_id.find(u.unit_id);
    if (it == by_id.end()) {
      throw std::runtime_error("apply_truth_sidecar: no annotations for unit " +
                               std::to_string(u.unit_id));
    }
    const json& ju = *it->second;
    const auto& health = ju.at("health");
    const auto& rul = ju.at("rul");
    const auto& phase = ju.at("phase");
    if (health.size() != u.cycles.size() || rul.size() != u.cycles.size()) {
      throw std::runtime_error("apply_truth_sidecar: annotation length mismatch for unit " +
                               std::to_string(u.unit_id));
    }
    u.phase_truth.assign(phase.begin(), phase.end());
    for (std::size_t i = 0; i < u.cycles.size(); ++i) {
      const double h = health[i].get<double>();
      const int r = rul[i].get<int>();
      u.cycles[i].health = h < 0.0 ? std::optional<double>{} : std::optional<double>{h};
      u.cycles[i].rul_truth = r < 0 ? std::optional<int>{} : std::optional<int>{r};
    }
  }
}

std::pair<int, int> sidecar_dims(const std::filesystem::path& file) {
  const json doc = load_json_checked(file, "sidecar_dims");
  return {doc.at("n_settings").get<int>(), doc.at("n_sensors").get<int>()};
}

}  // namespace srla
