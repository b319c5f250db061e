#include "srla/env.hpp"

#include <fstream>
#include <stdexcept>

namespace srla {

void CostSpec::validate() const {
  if (replace_cost <= 0.0 || failure_cost <= 0.0) {
    throw std::invalid_argument("CostSpec: costs must be strictly positive");
  }
}

double replacement_reward(Action action, int t, int lifetime, const CostSpec& costs) {
  if (t < 1 || t > lifetime) {
    throw std::invalid_argument("replacement_reward: t outside 1..T");
  }
  if (t == lifetime) {
    return -(costs.replace_cost + costs.failure_cost) / static_cast<double>(lifetime);
  }
  if (action == Action::kReplace) {
    return -costs.replace_cost / static_cast<double>(t);
  }
  return 0.0;
}

ReplacementEnv::ReplacementEnv(std::vector<EpisodeTrack> tracks, CostSpec costs,
                               std::uint64_t seed)
    : tracks_(std::move(tracks)), costs_(costs), rng_(derive_seed(seed, "env-reset")) {
  costs_.validate();
  if (tracks_.empty()) throw std::invalid_argument("ReplacementEnv: empty fleet");
  const auto dim = tracks_.front().observations.cols();
  for (const auto& tr : tracks_) {
    if (tr.lifetime < 1 || tr.observations.rows() != tr.lifetime ||
        tr.observations.cols() != dim || tr.start_cycle < 1 ||
        tr.start_cycle > tr.lifetime) {
      throw std::invalid_argument("ReplacementEnv: malformed episode track");
    }
  }
}

int ReplacementEnv::observation_dim() const {
  return static_cast<int>(tracks_.front().observations.cols());
}

EnvState ReplacementEnv::reset() {
  current_track_ = static_cast<int>(rng_.below(tracks_.size()));
  const EpisodeTrack& track = tracks_[current_track_];
  t_ = track.start_cycle;
  active_ = true;
  return EnvState{track.unit_id, t_, track.observations.row(t_ - 1).transpose()};
}

StepResult ReplacementEnv::step(Action action) {
  if (!active_) {
    throw std::logic_error("ReplacementEnv::step called on a finished episode");
  }
  const EpisodeTrack& track = tracks_[current_track_];
  const int lifetime = track.lifetime;

  StepResult result;
  result.reward = replacement_reward(action, t_, lifetime, costs_);
  result.info.remaining_cycles_at_action = lifetime - t_;
  result.info.failed = (t_ == lifetime);
  result.episode_ended = (action == Action::kReplace) || (t_ == lifetime);

  if (result.episode_ended) {
    active_ = false;
    result.next_observation = track.observations.row(t_ - 1).transpose();
  } else {
    ++t_;
    result.next_observation = track.observations.row(t_ - 1).transpose();
  }
  return result;
}

std::vector<EpisodeTrack> make_raw_tracks(const Fleet& fleet, bool include_settings) {
  std::vector<EpisodeTrack> tracks;
  tracks.reserve(fleet.units.size());
  for (const auto& u : fleet.units) {
    EpisodeTrack tr;
    tr.unit_id = u.unit_id;
    tr.lifetime = u.lifetime();
    if (include_settings) {
      const Eigen::MatrixXd sensors = u.sensor_matrix();
      const Eigen::MatrixXd settings = u.setting_matrix();
      tr.observations.resize(tr.lifetime, sensors.cols() + settings.cols());
      tr.observations << sensors, settings;
    } else {
      tr.observations = u.sensor_matrix();
    }
    tracks.push_back(std::move(tr));
  }
  return tracks;
}

void write_trace_csv(const std::filesystem::path& file, const std::vector<TraceRow>& rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_trace_csv: cannot open " + file.string());
  out << "cycle,action,reward,failed\n";
  for (const auto& r : rows) {
    out << r.cycle << ',' << (r.action == Action::kReplace ? "replace" : "hold") << ','
        << r.reward << ',' << (r.failed ? 1 : 0) << '\n';
  }
}

}  // namespace srla
