#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "srla/env.hpp"
#include "srla/fleet.hpp"
#include "srla/interpret.hpp"
#include "srla/qlearn.hpp"
#include "srla/seq_model.hpp"

namespace srla {

/// Latent states flagged imminent-to-failure: the failure states plus every
/// state decoded within `expansion_depth` cycles of some unit's end.
struct SpecializedStateSet {
  std::vector<int> states;          // sorted, superset of failure_states
  std::vector<int> failure_states;
  int expansion_depth = 0;
  bool contains(int state) const;
};

SpecializedStateSet derive_specialized_states(const SeqModel& model, const Fleet& fleet,
                                              int expansion_depth = 30,
                                              double support_fraction = 0.05);

/// Episode tracks whose observations are the filtered posterior (the
/// posterior over the prefix seen so far, which is what inference-time
/// gating sees). When `specialized` is given, episodes begin at the first
/// cycle whose decoded state enters the set; units that never enter are
/// dropped and reported.
struct PosteriorTrackBuild {
  std::vector<EpisodeTrack> tracks;
  std::vector<int> excluded_units;
};

PosteriorTrackBuild make_posterior_tracks(const Fleet& fleet, const SeqModel& model,
                                          const SpecializedStateSet* specialized = nullptr);

/// Specialized environment per the hierarchical scheme: pre-entry cycles are
/// skipped (implicit hold, zero reward), reward timing still uses the true
/// cycle index and lifetime. Throws if every unit is excluded.
ReplacementEnv build_specialized_env(const Fleet& fleet, const SeqModel& model,
                                     const SpecializedStateSet& specialized,
                                     const CostSpec& costs, std::uint64_t seed,
                                     std::vector<int>* excluded_units = nullptr);

/// One gated decision: decode the history, act greedily inside the
/// specialized set, hold outside it.
Action srla_act(const SeqModel& model, const QFunction& q,
                const SpecializedStateSet& specialized,
                const Eigen::MatrixXd& input_history,
                const Eigen::MatrixXd& output_history);

/// A replacement policy driven one cycle at a time over a test unit.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action decide(const UnitRun& unit, int t) = 0;
  virtual std::string name() const = 0;
  /// Reset any per-unit state before a new unit is evaluated.
  virtual void begin_unit(const UnitRun& unit) { (void)unit; }
};

/// Never replaces; every unit runs to failure (attains the corrective cost).
class HoldPolicy final : public Policy {
 public:
  Action decide(const UnitRun&, int) override { return Action::kHold; }
  std::string name() const override { return "hold"; }
};

/// Replaces exactly one cycle before failure (attains the ideal cost).
class OraclePolicy final : public Policy {
 public:
  Action decide(const UnitRun& unit, int t) override {
    return t == unit.lifetime() - 1 ? Action::kReplace : Action::kHold;
  }
  std::string name() const override { return "oracle"; }
};

/// Greedy agent over per-cycle observations: raw sensors, optionally with
/// settings appended (baseline harness configurations).
class AgentPolicy final : public Policy {
 public:
  AgentPolicy(QFunction q, bool include_settings);
  Action decide(const UnitRun& unit, int t) override;
  std::string name() const override { return "agent"; }

 private:
  QFunction q_;
  bool include_settings_;
  Rng rng_;  // only consulted at epsilon > 0; kept for interface parity
};

/// Greedy agent over the filtered posterior of a sequence model (the
/// posterior-fed harness configurations).
class PosteriorAgentPolicy final : public Policy {
 public:
  PosteriorAgentPolicy(SeqModel model, QFunction q);
  void begin_unit(const UnitRun& unit) override;
  Action decide(const UnitRun& unit, int t) override;
  std::string name() const override { return "posterior-agent"; }

 private:
  SeqModel model_;
  QFunction q_;
  Eigen::MatrixXd filtered_;
  Rng rng_;
};

struct GateEvent {
  int unit_id = 0;
  int t = 0;
  int decoded_state = 0;
  Action action = Action::kHold;
};

/// The hierarchical policy: decode the observed history each cycle, let the
/// agent act only inside the specialized set.
class SrlaPolicy final : public Policy {
 public:
  SrlaPolicy(SeqModel model, QFunction q, SpecializedStateSet specialized);
  void begin_unit(const UnitRun& unit) override;
  Action decide(const UnitRun& unit, int t) override;
  std::string name() const override { return "srla"; }
  const std::vector<GateEvent>& gate_log() const { return gate_log_; }

 private:
  SeqModel model_;
  QFunction q_;
  SpecializedStateSet specialized_;
  Eigen::MatrixXd filtered_;
  std::vector<GateEvent> gate_log_;
};

/// Fleet evaluation summary. avg_q_star is the fleet's cost per consumed
/// cycle (total charges over total cycles to episode end), which makes the
/// pure-hold policy attain the corrective cost exactly and the oracle attain
/// the ideal cost exactly.
struct EvalReport {
  double avg_q_star = 0.0;
  double imc = 0.0;
  double cmc = 0.0;
  double imc_ratio = 0.0;  // imc / avg_q_star
  double failed_fraction = 0.0;
  double avg_remaining_cycles = 0.0;
  int n_units = 0;
};

struct UnitOutcome {
  int unit_id = 0;
  int lifetime = 0;
  int t_end = 0;       // replacement cycle, or lifetime on failure
  bool failed = false;
  double charge = 0.0;     // c_r, or c_r + c_f on failure
  double cost_rate = 0.0;  // charge / t_end (episode cost magnitude)
};

struct EvalResult {
  EvalReport report;
  std::vector<UnitOutcome> outcomes;
};

/// Ideal maintenance cost of a fleet: replacement one cycle before failure.
double ideal_maintenance_cost(const Fleet& fleet, const CostSpec& costs);
/// Corrective maintenance cost of a fleet: replacement after failure.
double corrective_maintenance_cost(const Fleet& fleet, const CostSpec& costs);

/// Runs the policy once over every unit and aggregates the cost metrics.
EvalResult evaluate_policy(Policy& policy, const Fleet& fleet, const CostSpec& costs);

void write_eval_csv(const std::filesystem::path& file, const EvalResult& result);
/// Text table with the comparison columns used in reports.
std::string format_eval_table(const std::string& label, const EvalReport& report);

}  // namespace srla
