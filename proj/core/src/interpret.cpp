#include "srla/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "srla/stats.hpp"

namespace srla {

namespace {

Eigen::MatrixXd logistic_fit(const std::vector<int>& class_of_row,
                             const Eigen::MatrixXd& features, int n_classes) {
  const int n = static_cast<int>(features.rows());
  const int f_dim = static_cast<int>(features.cols());
  constexpr int kIters = 400;
  constexpr double kStep = 0.5;
  constexpr double kL2 = 1e-4;

  Eigen::MatrixXd x(n, f_dim + 1);
  x.col(0).setOnes();
  x.rightCols(f_dim) = features;

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n_classes, f_dim + 1);
  for (int iter = 0; iter < kIters; ++iter) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(n_classes, f_dim + 1);
    for (int r = 0; r < n; ++r) {
      Eigen::VectorXd logits = w * x.row(r).transpose();
      Eigen::VectorXd probs = (logits.array() - log_sum_exp(logits)).exp();
      probs(class_of_row[r]) -= 1.0;
      grad -= probs * x.row(r);
    }
    grad /= static_cast<double>(n);
    grad.rightCols(f_dim) -= kL2 * w.rightCols(f_dim);
    w += kStep * grad;
  }
  return w;
}

std::vector<std::vector<int>> decode_fleet(const SeqModel& model, const Fleet& fleet) {
  std::vector<std::vector<int>> decoded;
  decoded.reserve(fleet.units.size());
  for (const auto& u : fleet.units) {
    decoded.push_back(model.viterbi(u.setting_matrix(), u.sensor_matrix()).path);
  }
  return decoded;
}

}  // namespace

bool FailureStateSet::contains(int state) const {
  return std::find(states.begin(), states.end(), state) != states.end();
}

FailureStateSet identify_failure_states(const SeqModel& model, const Fleet& fleet,
                                        double support_fraction) {
  if (fleet.units.empty()) {
    throw std::invalid_argument("identify_failure_states: empty fleet");
  }
  std::map<int, int> counts;
  for (const auto& u : fleet.units) {
    const auto path = model.viterbi(u.setting_matrix(), u.sensor_matrix()).path;
    counts[path.back()] += 1;
  }
  FailureStateSet set;
  const double threshold = support_fraction * static_cast<double>(fleet.n_units());
  for (const auto& [state, count] : counts) {
    if (static_cast<double>(count) >= threshold) {
      set.states.push_back(state);
      set.support.push_back(count);
    }
  }
  return set;
}

ImportanceReport feature_importance(const std::vector<int>& labels,
                                    const Eigen::MatrixXd& features, std::uint64_t seed) {
  if (static_cast<long>(labels.size()) != features.rows()) {
    throw std::invalid_argument("feature_importance: labels and feature rows must align");
  }
  if (labels.empty()) throw std::invalid_argument("feature_importance: empty input");

  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) {
    throw std::invalid_argument("feature_importance: need at least two distinct classes");
  }
  std::map<int, int> class_index;
  for (std::size_t i = 0; i < classes.size(); ++i) class_index[classes[i]] = static_cast<int>(i);
  std::vector<int> class_of_row(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) class_of_row[i] = class_index[labels[i]];

  const int n_classes = static_cast<int>(classes.size());
  const int f_dim = static_cast<int>(features.cols());
  const Eigen::MatrixXd w = logistic_fit(class_of_row, features, n_classes);

  ImportanceReport report;
  report.class_states = classes;
  report.scores = w.rightCols(f_dim);
  report.max_abs_score = report.scores.array().abs().maxCoeff();

  report.ranking.resize(n_classes);
  for (int k = 0; k < n_classes; ++k) {
    std::vector<int> order(f_dim);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return std::abs(report.scores(k, a)) > std::abs(report.scores(k, b));
    });
    report.ranking[k] = std::move(order);
  }

  // Permuted-label baseline: comparable scores mean the labels carry no
  // feature signal worth reporting.
  std::vector<int> permuted(class_of_row);
  Rng rng(derive_seed(seed, "importance-permutation"));
  for (int i = static_cast<int>(permuted.size()) - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
    std::swap(permuted[i], permuted[j]);
  }
  const Eigen::MatrixXd w_perm = logistic_fit(permuted, features, n_classes);
  report.permuted_max_abs_score = w_perm.rightCols(f_dim).array().abs().maxCoeff();
  report.low_confidence = report.max_abs_score < 2.0 * report.permuted_max_abs_score;
  return report;
}

RulEstimate estimate_rul(const SeqModel& model, const Eigen::MatrixXd& inputs_prefix,
                         const Eigen::MatrixXd& outputs_prefix,
                         const FailureStateSet& failure_states, const RulOptions& options) {
  if (outputs_prefix.rows() < 1) {
    throw std::invalid_argument("estimate_rul: empty observation prefix");
  }
  if (failure_states.states.empty()) {
    throw std::invalid_argument("estimate_rul: empty failure state set");
  }
  if (options.rollouts < 1 || options.horizon_cap < 1) {
    throw std::invalid_argument("estimate_rul: rollouts and horizon_cap must be positive");
  }

  const int start_state = model.viterbi(inputs_prefix, outputs_prefix).path.back();
  RulEstimate estimate;
  estimate.rollouts = options.rollouts;
  estimate.horizon_cap = options.horizon_cap;
  if (failure_states.contains(start_state)) return estimate;

  const Eigen::VectorXd u_last =
      inputs_prefix.rows() > 0
          ? Eigen::VectorXd(inputs_prefix.row(inputs_prefix.rows() - 1).transpose())
          : Eigen::VectorXd();

  Rng rng(derive_seed(options.seed, "rul-rollout"));
  double total_steps = 0.0;
  for (int k = 0; k < options.rollouts; ++k) {
    int steps = 0;
    if (!options.resample_observations) {
      int state = start_state;
      while (steps < options.horizon_cap) {
        const Eigen::VectorXd probs = model.transition_from(state, u_last);
        state = rng.categorical(probs);
        ++steps;
        if (failure_states.contains(state)) break;
      }
      if (!failure_states.contains(state)) ++estimate.capped;
    } else {
      // Paper-style variant: sample an observation for the sampled state,
      // append it, and trust the re-decoded path for the stopping test.
      Eigen::MatrixXd in_ext = inputs_prefix;
      Eigen::MatrixXd out_ext = outputs_prefix;
      int state = start_state;
      bool reached = false;
      while (steps < options.horizon_cap) {
        const Eigen::VectorXd probs = model.transition_from(state, u_last);
        const int next = rng.categorical(probs);
        const Eigen::VectorXd obs = model.sample_emission(next, u_last, rng);
        in_ext.conservativeResize(in_ext.rows() + 1, Eigen::NoChange);
        if (in_ext.cols() > 0) in_ext.row(in_ext.rows() - 1) = u_last.transpose();
        out_ext.conservativeResize(out_ext.rows() + 1, Eigen::NoChange);
        out_ext.row(out_ext.rows() - 1) = obs.transpose();
        ++steps;
        state = model.viterbi(in_ext, out_ext).path.back();
        if (failure_states.contains(state)) {
          reached = true;
          break;
        }
      }
      if (!reached) ++estimate.capped;
    }
    total_steps += static_cast<double>(steps);
  }
  if (2 * estimate.capped > options.rollouts) {
    throw std::runtime_error(
        "estimate_rul: more than half the rollouts hit the horizon cap; "
        "failure states are unreachable from here");
  }
  estimate.rul = total_steps / static_cast<double>(options.rollouts);
  return estimate;
}

std::vector<RulEstimate> rul_curve(const SeqModel& model, const Eigen::MatrixXd& inputs,
                                   const Eigen::MatrixXd& outputs,
                                   const FailureStateSet& failure_states,
                                   const RulOptions& options) {
  std::vector<RulEstimate> curve;
  curve.reserve(outputs.rows());
  for (int t = 1; t <= outputs.rows(); ++t) {
    RulOptions per_cycle = options;
    per_cycle.seed = derive_seed(options.seed, "rul-cycle-" + std::to_string(t));
    curve.push_back(estimate_rul(model, inputs.topRows(std::min<long>(t, inputs.rows())),
                                 outputs.topRows(t), failure_states, per_cycle));
  }
  return curve;
}

const char* condition_band_name(ConditionBand band) {
  switch (band) {
    case ConditionBand::kNormal: return "normal";
    case ConditionBand::kPotentialFault: return "potential fault";
    case ConditionBand::kFailureProgression: return "failure progression";
    case ConditionBand::kFaultPoint: return "fault point";
    case ConditionBand::kFailure: return "failure";
  }
  return "unknown";
}

std::vector<StateConditionRow> map_health_states(const SeqModel& model, const Fleet& fleet) {
  if (!fleet.has_annotations()) {
    throw std::invalid_argument("map_health_states: fleet lacks health/RUL annotations");
  }
  const auto decoded = decode_fleet(model, fleet);

  struct Acc {
    long count = 0;
    double health = 0.0, rul = 0.0, position = 0.0;
  };
  std::map<int, Acc> by_state;
  std::vector<double> degradation;
  for (std::size_t k = 0; k < fleet.units.size(); ++k) {
    const auto& u = fleet.units[k];
    const double t_len = static_cast<double>(u.lifetime());
    for (int t = 0; t < u.lifetime(); ++t) {
      Acc& acc = by_state[decoded[k][t]];
      acc.count += 1;
      acc.health += *u.cycles[t].health;
      acc.rul += static_cast<double>(*u.cycles[t].rul_truth);
      acc.position += static_cast<double>(t + 1) / t_len;
      degradation.push_back(1.0 - *u.cycles[t].health);
    }
  }

  const double q25 = quantile(degradation, 0.25);
  const double q50 = quantile(degradation, 0.50);
  const double q75 = quantile(degradation, 0.75);
  const double q95 = quantile(degradation, 0.95);

  std::vector<StateConditionRow> rows;
  for (const auto& [state, acc] : by_state) {
    StateConditionRow row;
    row.state = state;
    row.cycles = static_cast<int>(acc.count);
    row.mean_health = acc.health / static_cast<double>(acc.count);
    row.mean_rul = acc.rul / static_cast<double>(acc.count);
    row.mean_position = acc.position / static_cast<double>(acc.count);
    const double d = 1.0 - row.mean_health;
    if (d <= q25) {
      row.band = ConditionBand::kNormal;
    } else if (d <= q50) {
      row.band = ConditionBand::kPotentialFault;
    } else if (d <= q75) {
      row.band = ConditionBand::kFailureProgression;
    } else if (d <= q95) {
      row.band = ConditionBand::kFaultPoint;
    } else {
      row.band = ConditionBand::kFailure;
    }
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const StateConditionRow& a, const StateConditionRow& b) {
                     return a.mean_health > b.mean_health;
                   });
  return rows;
}

Projection2D project_2d(const Eigen::MatrixXd& features) {
  if (features.rows() < 2 || features.cols() < 2) {
    throw std::invalid_argument("project_2d: need at least 2 rows and 2 features");
  }
  const Eigen::RowVectorXd mean = features.colwise().mean();
  const Eigen::MatrixXd centered = features.rowwise() - mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(features.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("project_2d: eigendecomposition failed");
  }
  const int f_dim = static_cast<int>(features.cols());
  const Eigen::VectorXd evals = solver.eigenvalues();  // ascending
  const double total = std::max(evals.sum(), 0.0);

  Projection2D proj;
  proj.components.resize(2, f_dim);
  for (int c = 0; c < 2; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(f_dim - 1 - c);
    int pivot = 0;
    for (int j = 1; j < f_dim; ++j) {
      if (std::abs(v(j)) > std::abs(v(pivot))) pivot = j;
    }
    if (v(pivot) < 0.0) v = -v;
    proj.components.row(c) = v.transpose();
  }

  const double second = std::max(evals(f_dim - 2), 0.0);
  const double first = std::max(evals(f_dim - 1), 0.0);
  if (total <= 0.0 || second <= 1e-12 * std::max(total, 1e-300)) {
    proj.rank_deficient = true;
    proj.components.row(1).setZero();
  }
  proj.points = centered * proj.components.transpose();
  proj.explained_variance =
      total > 0.0 ? Eigen::Vector2d(first / total, second / total) : Eigen::Vector2d(0, 0);
  if (proj.rank_deficient) proj.explained_variance(1) = 0.0;
  return proj;
}

}  // namespace srla
