#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "srla/fleet.hpp"
#include "srla/seq_model.hpp"

namespace srla {

/// Latent states observed at units' final cycles, with how many units ended
/// in each.
struct FailureStateSet {
  std::vector<int> states;
  std::vector<int> support;
  bool contains(int state) const;
};

/// Viterbi-decodes every unit and collects final-cycle states whose support
/// reaches `support_fraction` of the fleet.
FailureStateSet identify_failure_states(const SeqModel& model, const Fleet& fleet,
                                        double support_fraction = 0.05);

/// Per-(state, feature) coefficients of a multinomial linear classifier fit
/// with decoded states as classes. `low_confidence` is set when the scores
/// do not clearly beat a permuted-label baseline.
struct ImportanceReport {
  std::vector<int> class_states;           // decoded state per row of `scores`
  Eigen::MatrixXd scores;                  // n_classes x n_features
  std::vector<std::vector<int>> ranking;   // per class, features by |score| desc
  bool low_confidence = false;
  double max_abs_score = 0.0;
  double permuted_max_abs_score = 0.0;
};

ImportanceReport feature_importance(const std::vector<int>& labels,
                                    const Eigen::MatrixXd& features,
                                    std::uint64_t seed = 0);

struct RulOptions {
  int rollouts = 100;
  int horizon_cap = 1000;
  bool resample_observations = false;  // paper-style variant: sample emissions
                                       // and re-decode instead of walking the chain
  std::uint64_t seed = 0;
};

struct RulEstimate {
  double rul = 0.0;
  int rollouts = 0;
  int horizon_cap = 0;
  int capped = 0;  // rollouts that hit the horizon
};

/// Monte-Carlo remaining-useful-life estimate from an observed prefix:
/// decode the prefix, then average over independent rollouts the number of
/// transitions until a failure state is entered (inputs held at the last
/// observed value). Errors out if more than half the rollouts hit the cap.
RulEstimate estimate_rul(const SeqModel& model, const Eigen::MatrixXd& inputs_prefix,
                         const Eigen::MatrixXd& outputs_prefix,
                         const FailureStateSet& failure_states,
                         const RulOptions& options = {});

/// Per-cycle RUL curve over one unit (prefix lengths 1..T).
std::vector<RulEstimate> rul_curve(const SeqModel& model, const Eigen::MatrixXd& inputs,
                                   const Eigen::MatrixXd& outputs,
                                   const FailureStateSet& failure_states,
                                   const RulOptions& options = {});

enum class ConditionBand {
  kNormal,
  kPotentialFault,
  kFailureProgression,
  kFaultPoint,
  kFailure,
};

const char* condition_band_name(ConditionBand band);

struct StateConditionRow {
  int state = 0;
  int cycles = 0;             // decoded occurrences
  double mean_health = 0.0;
  double mean_rul = 0.0;
  double mean_position = 0.0;  // mean t / T_j
  ConditionBand band = ConditionBand::kNormal;
};

/// Maps decoded states to condition bands using fleet-wide degradation
/// quantiles {0.25, 0.5, 0.75, 0.95}; rows ordered healthiest first.
/// Requires ground-truth health/RUL annotations.
std::vector<StateConditionRow> map_health_states(const SeqModel& model,
                                                 const Fleet& fleet);

struct Projection2D {
  Eigen::MatrixXd points;      // n x 2
  Eigen::MatrixXd components;  // 2 x n_features
  Eigen::Vector2d explained_variance;  // fractions of total variance
  bool rank_deficient = false;
};

/// Projection onto the top two principal components of the covariance
/// matrix, mean-centered, with the largest-magnitude loading of each
/// component made positive.
Projection2D project_2d(const Eigen::MatrixXd& features);

}  // namespace srla
