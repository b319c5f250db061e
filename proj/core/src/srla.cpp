#include "srla/srla.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>

#include "srla/stats.hpp"

namespace srla {

bool SpecializedStateSet::contains(int state) const {
  return std::binary_search(states.begin(), states.end(), state);
}

SpecializedStateSet derive_specialized_states(const SeqModel& model, const Fleet& fleet,
                                              int expansion_depth,
                                              double support_fraction) {
  if (expansion_depth < 0) {
    throw std::invalid_argument("derive_specialized_states: negative expansion depth");
  }
  const FailureStateSet failure = identify_failure_states(model, fleet, support_fraction);

  std::set<int> selected(failure.states.begin(), failure.states.end());
  for (const auto& u : fleet.units) {
    const auto path = model.viterbi(u.setting_matrix(), u.sensor_matrix()).path;
    const int t_len = static_cast<int>(path.size());
    for (int t = 1; t <= t_len; ++t) {
      if (t_len - t <= expansion_depth) selected.insert(path[t - 1]);
    }
  }

  SpecializedStateSet set;
  set.states.assign(selected.begin(), selected.end());
  set.failure_states = failure.states;
  set.expansion_depth = expansion_depth;
  return set;
}

PosteriorTrackBuild make_posterior_tracks(const Fleet& fleet, const SeqModel& model,
                                          const SpecializedStateSet* specialized) {
  PosteriorTrackBuild build;
  for (const auto& u : fleet.units) {
    const Eigen::MatrixXd inputs = u.setting_matrix();
    const Eigen::MatrixXd outputs = u.sensor_matrix();

    int start_cycle = 1;
    if (specialized) {
      const auto path = model.viterbi(inputs, outputs).path;
      start_cycle = 0;
      for (int t = 1; t <= static_cast<int>(path.size()); ++t) {
        if (specialized->contains(path[t - 1])) {
          start_cycle = t;
          break;
        }
      }
      if (start_cycle == 0) {
        build.excluded_units.push_back(u.unit_id);
        continue;
      }
    }

    EpisodeTrack track;
    track.unit_id = u.unit_id;
    track.lifetime = u.lifetime();
    track.start_cycle = start_cycle;
    track.observations = model.filtered(inputs, outputs);
    build.tracks.push_back(std::move(track));
  }
  return build;
}

ReplacementEnv build_specialized_env(const Fleet& fleet, const SeqModel& model,
                                     const SpecializedStateSet& specialized,
                                     const CostSpec& costs, std::uint64_t seed,
                                     std::vector<int>* excluded_units) {
  PosteriorTrackBuild build = make_posterior_tracks(fleet, model, &specialized);
  if (excluded_units) *excluded_units = build.excluded_units;
  if (build.tracks.empty()) {
    throw std::runtime_error(
        "build_specialized_env: no unit ever enters the specialized states");
  }
  return ReplacementEnv(std::move(build.tracks), costs, seed);
}

Action srla_act(const SeqModel& model, const QFunction& q,
                const SpecializedStateSet& specialized,
                const Eigen::MatrixXd& input_history,
                const Eigen::MatrixXd& output_history) {
  if (output_history.rows() < 1) {
    throw std::invalid_argument("srla_act: empty observation history");
  }
  const auto decoded = model.viterbi(input_history, output_history);
  if (!specialized.contains(decoded.path.back())) return Action::kHold;
  const Eigen::MatrixXd filtered = model.filtered(input_history, output_history);
  const Eigen::VectorXd observation = filtered.row(filtered.rows() - 1).transpose();
  return static_cast<Action>(argmax_lowest(q_values(q, observation)));
}

AgentPolicy::AgentPolicy(QFunction q, bool include_settings)
    : q_(std::move(q)), include_settings_(include_settings), rng_(0) {}

Action AgentPolicy::decide(const UnitRun& unit, int t) {
  const auto& cycle = unit.cycles.at(t - 1);
  Eigen::VectorXd obs(cycle.sensors.size() +
                      (include_settings_ ? cycle.op_settings.size() : 0));
  for (std::size_t j = 0; j < cycle.sensors.size(); ++j) obs(static_cast<int>(j)) = cycle.sensors[j];
  if (include_settings_) {
    for (std::size_t j = 0; j < cycle.op_settings.size(); ++j) {
      obs(static_cast<int>(cycle.sensors.size() + j)) = cycle.op_settings[j];
    }
  }
  return select_action(q_, obs, 0.0, rng_);
}

PosteriorAgentPolicy::PosteriorAgentPolicy(SeqModel model, QFunction q)
    : model_(std::move(model)), q_(std::move(q)), rng_(0) {}

void PosteriorAgentPolicy::begin_unit(const UnitRun& unit) {
  // Row t of the filtered track depends only on the prefix up to t, so one
  // forward pass per unit serves every online decision.
  filtered_ = model_.filtered(unit.setting_matrix(), unit.sensor_matrix());
}

Action PosteriorAgentPolicy::decide(const UnitRun&, int t) {
  return select_action(q_, filtered_.row(t - 1).transpose(), 0.0, rng_);
}

SrlaPolicy::SrlaPolicy(SeqModel model, QFunction q, SpecializedStateSet specialized)
    : model_(std::move(model)), q_(std::move(q)), specialized_(std::move(specialized)) {}

void SrlaPolicy::begin_unit(const UnitRun& unit) {
  filtered_ = model_.filtered(unit.setting_matrix(), unit.sensor_matrix());
}

Action SrlaPolicy::decide(const UnitRun& unit, int t) {
  const auto decoded = model_.viterbi(unit.setting_prefix(t), unit.sensor_prefix(t));
  Action action = Action::kHold;
  if (specialized_.contains(decoded.path.back())) {
    action = static_cast<Action>(
        argmax_lowest(q_values(q_, filtered_.row(t - 1).transpose())));
  }
  gate_log_.push_back(GateEvent{unit.unit_id, t, decoded.path.back(), action});
  return action;
}

double ideal_maintenance_cost(const Fleet& fleet, const CostSpec& costs) {
  if (fleet.units.empty()) throw std::invalid_argument("ideal_maintenance_cost: empty fleet");
  double denom = 0.0;
  for (const auto& u : fleet.units) denom += static_cast<double>(u.lifetime() - 1);
  if (denom <= 0.0) {
    throw std::runtime_error("ideal_maintenance_cost: fleet has no usable cycles");
  }
  return static_cast<double>(fleet.n_units()) * costs.replace_cost / denom;
}

double corrective_maintenance_cost(const Fleet& fleet, const CostSpec& costs) {
  if (fleet.units.empty()) {
    throw std::invalid_argument("corrective_maintenance_cost: empty fleet");
  }
  double denom = 0.0;
  for (const auto& u : fleet.units) denom += static_cast<double>(u.lifetime());
  return static_cast<double>(fleet.n_units()) * (costs.replace_cost + costs.failure_cost) /
         denom;
}

EvalResult evaluate_policy(Policy& policy, const Fleet& fleet, const CostSpec& costs) {
  if (fleet.units.empty()) throw std::invalid_argument("evaluate_policy: empty fleet");
  costs.validate();

  EvalResult result;
  double total_charge = 0.0;
  double total_cycles = 0.0;
  int failed = 0;
  double remaining_sum = 0.0;
  for (const auto& unit : fleet.units) {
    policy.begin_unit(unit);
    const int lifetime = unit.lifetime();
    UnitOutcome outcome;
    outcome.unit_id = unit.unit_id;
    outcome.lifetime = lifetime;
    for (int t = 1; t <= lifetime; ++t) {
      const Action action = policy.decide(unit, t);
      if (action == Action::kReplace || t == lifetime) {
        outcome.t_end = t;
        outcome.failed = (t == lifetime);
        outcome.charge = outcome.failed ? costs.replace_cost + costs.failure_cost
                                        : costs.replace_cost;
        outcome.cost_rate = outcome.charge / static_cast<double>(t);
        break;
      }
    }
    total_charge += outcome.charge;
    total_cycles += static_cast<double>(outcome.t_end);
    if (outcome.failed) {
      ++failed;
    } else {
      remaining_sum += static_cast<double>(lifetime - outcome.t_end);
    }
    result.outcomes.push_back(outcome);
  }

  EvalReport& report = result.report;
  report.n_units = fleet.n_units();
  report.avg_q_star = total_charge / total_cycles;
  report.imc = ideal_maintenance_cost(fleet, costs);
  report.cmc = corrective_maintenance_cost(fleet, costs);
  report.imc_ratio = report.imc / report.avg_q_star;
  report.failed_fraction = static_cast<double>(failed) / static_cast<double>(report.n_units);
  const int survived = report.n_units - failed;
  report.avg_remaining_cycles = survived > 0 ? remaining_sum / survived : 0.0;
  return result;
}

void write_eval_csv(const std::filesystem::path& file, const EvalResult& result) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_eval_csv: cannot open " + file.string());
  out.precision(17);
  out << "metric,value\n";
  out << "avg_q_star," << result.report.avg_q_star << '\n';
  out << "imc," << result.report.imc << '\n';
  out << "cmc," << result.report.cmc << '\n';
  out << "imc_ratio," << result.report.imc_ratio << '\n';
  out << "failed_fraction," << result.report.failed_fraction << '\n';
  out << "avg_remaining_cycles," << result.report.avg_remaining_cycles << '\n';
  out << "n_units," << result.report.n_units << '\n';
  out << '\n';
  out << "unit_id,lifetime,t_end,failed,charge,cost_rate\n";
  for (const auto& o : result.outcomes) {
    out << o.unit_id << ',' << o.lifetime << ',' << o.t_end << ',' << (o.failed ? 1 : 0)
        << ',' << o.charge << ',' << o.cost_rate << '\n';
  }
}

std::string format_eval_table(const std::string& label, const EvalReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "methodology" << std::right << std::setw(9) << "q*"
      << std::setw(9) << "imc" << std::setw(9) << "cmc" << std::setw(10) << "imc/q*"
      << std::setw(10) << "failed" << std::setw(12) << "avg rem" << '\n';
  out << std::left << std::setw(18) << label << std::right << std::fixed
      << std::setprecision(2) << std::setw(9) << report.avg_q_star << std::setw(9)
      << report.imc << std::setw(9) << report.cmc << std::setw(10) << report.imc_ratio
      << std::setw(9) << 100.0 * report.failed_fraction << '%' << std::setw(12)
      << report.avg_remaining_cycles << '\n';
  return out.str();
}

}  // namespace srla
