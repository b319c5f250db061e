#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>
#include <vector>

#include "srla/fleet.hpp"

namespace srla {

/// Parses a C-MAPSS-layout text file: one cycle per line, whitespace
/// separated, columns = unit id, cycle index, operating settings, sensors.
/// The public dataset layout is 3 settings + 21 sensors.
Fleet load_cmapss(const std::filesystem::path& file, int n_settings = 3,
                  int n_sensors = 21);

/// Writes a fleet back in the same text layout (annotations are not part of
/// this format; see the truth sidecar).
void write_cmapss(const Fleet& fleet, const std::filesystem::path& file);

/// Unit-level split: round(train_fraction * N) training units, disjoint,
/// deterministic per seed.
std::pair<Fleet, Fleet> split_fleet(const Fleet& fleet, double train_fraction,
                                    std::uint64_t seed);

enum class NormalizerKind { kStandard, kMinMax };

/// Per-feature affine map fitted on training units only; covers the setting
/// block and the sensor block. Zero-variance features are flagged and passed
/// through unscaled so feature indices stay stable.
struct Normalizer {
  NormalizerKind kind = NormalizerKind::kStandard;
  Eigen::VectorXd setting_offset, setting_scale;
  Eigen::VectorXd sensor_offset, sensor_scale;
  std::vector<std::uint8_t> setting_passthrough, sensor_passthrough;
};

Normalizer fit_normalizer(const Fleet& fleet, NormalizerKind kind);
Fleet apply_normalizer(const Normalizer& norm, const Fleet& fleet);

/// Per-regime variant: statistics are fitted separately for each distinct
/// operating-condition regime (cycles grouped by nearest setting centroid).
/// Off by default everywhere; exists behind an explicit flag.
struct RegimeNormalizer {
  NormalizerKind kind = NormalizerKind::kStandard;
  std::vector<Eigen::VectorXd> regime_settings;  // centroid per regime
  std::vector<Normalizer> per_regime;            // sensor stats per regime
};

RegimeNormalizer fit_regime_normalizer(const Fleet& fleet, NormalizerKind kind);
Fleet apply_regime_normalizer(const RegimeNormalizer& norm, const Fleet& fleet);

/// One operating-condition regime of the synthetic generator: the setting
/// vector emitted while the regime is active and the additive shift it puts
/// on every sensor mean.
struct OperatingRegime {
  std::vector<double> settings;
  std::vector<double> sensor_shift;
};

/// Generator specification: a left-to-right phase chain whose final
/// `n_failure_modes` phases are absorbing failure phases. Each cycle may
/// advance to the next phase with the phase's advance probability; entering
/// a failure phase is the unit's final (failure) cycle. Lifetimes outside
/// [min_lifetime, max_lifetime] are rejection-sampled away.
struct SyntheticSpec {
  int n_units = 100;
  int n_settings = 3;
  int n_sensors = 21;
  int n_phases = 4;          // total, including failure phases
  int n_failure_modes = 1;   // trailing phases that are absorbing
  int min_lifetime = 50;
  int max_lifetime = 150;
  std::vector<double> advance_prob;  // per progression phase, in (0, 1]
  Eigen::MatrixXd phase_means;       // n_phases x n_sensors
  Eigen::MatrixXd phase_stddev;      // n_phases x n_sensors, > 0
  std::vector<OperatingRegime> regimes;  // empty: settings are all zero

  int n_progression_phases() const { return n_phases - n_failure_modes; }
  void validate() const;
};

/// Well-separated default spec used by tests and the CLI: progression
/// phases with distinct sensor levels, a short critical tail phase, one or
/// more absorbing failure modes.
SyntheticSpec default_synthetic_spec(int n_units, int n_sensors, int n_phases,
                                     int n_failure_modes, int min_lifetime,
                                     int max_lifetime);

/// Samples a fleet from the spec. Ground-truth phase labels, health (an
/// exponential decay over position in life) and true RUL are recorded on
/// every cycle. Byte-deterministic per (spec, seed).
Fleet generate_synthetic_fleet(const SyntheticSpec& spec, std::uint64_t seed);

/// Sidecar with the annotations the text format cannot carry (dims, phase
/// labels, health, RUL). JSON, versioned.
void write_truth_sidecar(const Fleet& fleet, const std::filesystem::path& file);
/// Attaches sidecar annotations to a fleet loaded from the text format.
void apply_truth_sidecar(Fleet& fleet, const std::filesystem::path& file);
/// Reads the (n_settings, n_sensors) pair recorded in a sidecar.
std::pair<int, int> sidecar_dims(const std::filesystem::path& file);

}  // namespace srla
