#include "srla/pipeline.hpp"

#include <stdexcept>

namespace srla {

namespace {

std::vector<Eigen::MatrixXd> sensor_sequences(const Fleet& fleet) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(fleet.units.size());
  for (const auto& u : fleet.units) out.push_back(u.sensor_matrix());
  return out;
}

std::vector<Eigen::MatrixXd> setting_sequences(const Fleet& fleet) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(fleet.units.size());
  for (const auto& u : fleet.units) out.push_back(u.setting_matrix());
  return out;
}

}  // namespace

SystemKind system_kind_from_string(const std::string& name) {
  if (name == "system1") return SystemKind::kSystem1;
  if (name == "system2") return SystemKind::kSystem2;
  if (name == "system3") return SystemKind::kSystem3;
  if (name == "system4") return SystemKind::kSystem4;
  if (name == "srla") return SystemKind::kSrla;
  throw std::invalid_argument("unknown system selector '" + name + "'");
}

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::kSystem1: return "system1";
    case SystemKind::kSystem2: return "system2";
    case SystemKind::kSystem3: return "system3";
    case SystemKind::kSystem4: return "system4";
    case SystemKind::kSrla: return "srla";
  }
  return "unknown";
}

bool TrainedSystem::uses_sequence_model() const {
  return system == SystemKind::kSystem3 || system == SystemKind::kSystem4 ||
         system == SystemKind::kSrla;
}

SeqModel TrainedSystem::sequence_model() const {
  if (hmm) return SeqModel(*hmm);
  if (iohmm) return SeqModel(*iohmm);
  throw std::logic_error("TrainedSystem: no sequence model for this configuration");
}

Fleet TrainedSystem::normalize(const Fleet& fleet) const {
  if (regime_normalizer) return apply_regime_normalizer(*regime_normalizer, fleet);
  return apply_normalizer(normalizer, fleet);
}

TrainedSystem train_system(const Fleet& train_fleet, const PipelineConfig& config) {
  if (train_fleet.units.empty()) throw std::invalid_argument("train_system: empty fleet");
  config.costs.validate();

  TrainedSystem out;
  out.system = config.system;

  const NormalizerKind norm_kind =
      (config.system == SystemKind::kSystem1 || config.system == SystemKind::kSystem2)
          ? NormalizerKind::kStandard
          : NormalizerKind::kMinMax;
  out.normalizer = fit_normalizer(train_fleet, norm_kind);
  if (config.normalize_per_regime) {
    out.regime_normalizer = fit_regime_normalizer(train_fleet, norm_kind);
  }
  const Fleet normalized = out.normalize(train_fleet);

  const std::uint64_t model_seed = derive_seed(config.seed, "sequence-model");
  const std::uint64_t env_seed = derive_seed(config.seed, "environment");

  std::vector<EpisodeTrack> tracks;
  switch (config.system) {
    case SystemKind::kSystem1:
      tracks = make_raw_tracks(normalized, false);
      break;
    case SystemKind::kSystem2:
      tracks = make_raw_tracks(normalized, true);
      break;
    case SystemKind::kSystem3: {
      out.hmm = fit_hmm(sensor_sequences(normalized), config.n_states, model_seed,
                        config.model_max_iter, config.model_tol);
      tracks = make_posterior_tracks(normalized, out.sequence_model()).tracks;
      break;
    }
    case SystemKind::kSystem4: {
      out.iohmm = fit_iohmm(setting_sequences(normalized), sensor_sequences(normalized),
                            config.n_states, model_seed, config.model_max_iter,
                            config.model_tol);
      tracks = make_posterior_tracks(normalized, out.sequence_model()).tracks;
      break;
    }
    case SystemKind::kSrla: {
      out.iohmm = fit_iohmm(setting_sequences(normalized), sensor_sequences(normalized),
                            config.n_states, model_seed, config.model_max_iter,
                            config.model_tol);
      const SeqModel model = out.sequence_model();
      out.specialized = derive_specialized_states(model, normalized, config.expansion_depth,
                                                  config.failure_support_fraction);
      PosteriorTrackBuild build = make_posterior_tracks(normalized, model, &*out.specialized);
      out.excluded_units = build.excluded_units;
      if (build.tracks.empty()) {
        throw std::runtime_error("train_system: no unit enters the specialized states");
      }
      tracks = std::move(build.tracks);
      break;
    }
  }

  ReplacementEnv env(std::move(tracks), config.costs, env_seed);
  TrainConfig agent_config = config.agent;
  agent_config.seed = derive_seed(config.seed, "agent");
  TrainResult trained = train(env, agent_config);
  out.q = std::move(trained.q);
  out.training_log = std::move(trained.log);
  return out;
}

std::unique_ptr<Policy> make_policy(const TrainedSystem& system) {
  switch (system.system) {
    case SystemKind::kSystem1:
      return std::make_unique<AgentPolicy>(system.q, false);
    case SystemKind::kSystem2:
      return std::make_unique<AgentPolicy>(system.q, true);
    case SystemKind::kSystem3:
    case SystemKind::kSystem4:
      return std::make_unique<PosteriorAgentPolicy>(system.sequence_model(), system.q);
    case SystemKind::kSrla:
      if (!system.specialized) {
        throw std::logic_error("make_policy: srla configuration lacks specialized states");
      }
      return std::make_unique<SrlaPolicy>(system.sequence_model(), system.q,
                                          *system.specialized);
  }
  throw std::logic_error("make_policy: unknown system");
}

EvalResult evaluate_system(const TrainedSystem& system, const Fleet& test_fleet,
                           const CostSpec& costs) {
  const Fleet normalized = system.normalize(test_fleet);
  const std::unique_ptr<Policy> policy = make_policy(system);
  return evaluate_policy(*policy, normalized, costs);
}

}  // namespace srla
