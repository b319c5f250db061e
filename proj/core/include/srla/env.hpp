#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "srla/fleet.hpp"
#include "srla/rng.hpp"

namespace srla {

enum class Action { kHold = 0, kReplace = 1 };
inline constexpr int kNumActions = 2;

struct CostSpec {
  double replace_cost = 100.0;  // c_r
  double failure_cost = 1000.0; // c_f
  void validate() const;
};

/// Dynamic reward of the replacement problem. Replacing early costs c_r
/// spread over the cycles already used; reaching the final cycle costs
/// c_r + c_f spread over the full life, whichever action is taken there.
double replacement_reward(Action action, int t, int lifetime, const CostSpec& costs);

/// One unit's episode material: true lifetime, the cycle where episodes
/// begin (specialized environments skip ahead), and the observation row
/// handed to the agent at each cycle.
struct EpisodeTrack {
  int unit_id = 0;
  int lifetime = 0;
  int start_cycle = 1;
  Eigen::MatrixXd observations;  // lifetime x obs_dim, row t-1 is cycle t
};

struct EnvState {
  int unit_id = 0;
  int t = 0;
  Eigen::VectorXd observation;
};

struct StepInfo {
  int remaining_cycles_at_action = 0;  // T_j - t
  bool failed = false;                 // action happened at t = T_j
};

struct StepResult {
  Eigen::VectorXd next_observation;  // echoes the final observation on episode end
  double reward = 0.0;
  bool episode_ended = false;
  StepInfo info;
};

/// Episodic hold/replace environment over a fleet. reset() picks a unit
/// uniformly from a seed-determined stream; step() advances one cycle.
/// Stepping a finished episode is a contract violation.
class ReplacementEnv {
 public:
  ReplacementEnv(std::vector<EpisodeTrack> tracks, CostSpec costs, std::uint64_t seed);

  EnvState reset();
  StepResult step(Action action);

  bool episode_active() const { return active_; }
  int observation_dim() const;
  int n_tracks() const { return static_cast<int>(tracks_.size()); }
  const CostSpec& costs() const { return costs_; }
  int current_t() const { return t_; }
  int current_lifetime() const { return tracks_[current_track_].lifetime; }

 private:
  std::vector<EpisodeTrack> tracks_;
  CostSpec costs_;
  Rng rng_;
  int current_track_ = -1;
  int t_ = 0;
  bool active_ = false;
};

/// Raw-feature tracks for the baseline harness configurations: sensors only,
/// or sensors with the operating settings appended.
std::vector<EpisodeTrack> make_raw_tracks(const Fleet& fleet, bool include_settings);

struct TraceRow {
  int cycle = 0;
  Action action = Action::kHold;
  double reward = 0.0;
  bool failed = false;
};

void write_trace_csv(const std::filesystem::path& file, const std::vector<TraceRow>& rows);

}  // namespace srla
