#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srla/dataio.hpp"
#include "srla/qlearn.hpp"
#include "srla/srla.hpp"

namespace srla {

/// Harness configurations. They differ only in observation assembly and the
/// sequence model in front of the agent:
///   system1  raw sensors, standard normalization
///   system2  raw sensors + operating settings, standard normalization
///   system3  minmax normalization, plain model posterior
///   system4  minmax normalization, input-conditioned model posterior
///   srla     system4 plus the specialized-state gate
enum class SystemKind { kSystem1, kSystem2, kSystem3, kSystem4, kSrla };

SystemKind system_kind_from_string(const std::string& name);
std::string to_string(SystemKind kind);

struct PipelineConfig {
  SystemKind system = SystemKind::kSrla;
  int n_states = 15;
  CostSpec costs;
  TrainConfig agent;  // epochs required; seed is overridden by `seed` below
  int model_max_iter = 60;
  double model_tol = 1e-3;
  int expansion_depth = 30;
  double failure_support_fraction = 0.05;
  bool normalize_per_regime = false;
  std::uint64_t seed = 1;
};

struct TrainedSystem {
  SystemKind system = SystemKind::kSrla;
  Normalizer normalizer;
  std::optional<RegimeNormalizer> regime_normalizer;
  std::optional<HmmModel> hmm;
  std::optional<IohmmModel> iohmm;
  std::optional<SpecializedStateSet> specialized;
  QFunction q;
  std::vector<EpisodeLog> training_log;
  std::vector<int> excluded_units;

  bool uses_sequence_model() const;
  /// The sequence model in front of the agent (throws for systems 1-2).
  SeqModel sequence_model() const;
  Fleet normalize(const Fleet& fleet) const;
};

/// Trains every stage of the selected configuration on the raw training
/// fleet. All randomness flows from config.seed through named sub-streams.
TrainedSystem train_system(const Fleet& train_fleet, const PipelineConfig& config);

/// The evaluation policy matching a trained configuration.
std::unique_ptr<Policy> make_policy(const TrainedSystem& system);

/// Normalizes the test fleet with the training statistics and evaluates the
/// matching policy over it.
EvalResult evaluate_system(const TrainedSystem& system, const Fleet& test_fleet,
                           const CostSpec& costs);

}  // namespace srla
