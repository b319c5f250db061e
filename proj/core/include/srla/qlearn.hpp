#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "srla/env.hpp"
#include "srla/rng.hpp"

namespace srla {

/// Feedforward action-value approximator: rectifier hidden layers, linear
/// output, one value per action. The production architecture is
/// [input, 128, 256, n_actions]; make() accepts arbitrary sizes for small
/// analytic cases.
struct QFunction {
  std::vector<Eigen::MatrixXd> weights;  // layer l: out x in
  std::vector<Eigen::VectorXd> biases;

  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int n_actions() const { return static_cast<int>(weights.back().rows()); }
  int n_layers() const { return static_cast<int>(weights.size()); }
  bool all_finite() const;

  /// Fan-in scaled uniform initialization, deterministic per seed.
  static QFunction make(const std::vector<int>& layer_sizes, std::uint64_t seed);
  static QFunction make_default(int input_dim, int n_actions, std::uint64_t seed);
};

/// Deterministic forward pass; one value per action.
Eigen::VectorXd q_values(const QFunction& q, const Eigen::VectorXd& observation);

/// Epsilon-greedy: uniform random action with probability epsilon, else the
/// argmax (lowest index on ties). Evaluation callers pass epsilon = 0.
int select_action_index(const QFunction& q, const Eigen::VectorXd& observation,
                        double epsilon, Rng& rng);
Action select_action(const QFunction& q, const Eigen::VectorXd& observation,
                     double epsilon, Rng& rng);

struct QTransition {
  Eigen::VectorXd s;
  int action = 0;
  double reward = 0.0;
  Eigen::VectorXd s_next;
  bool terminal = false;
};

/// One backpropagated gradient step on the squared TD error of the chosen
/// action. Target is reward alone on terminal transitions, else
/// reward + discount * max_a' Q(s_next, a'). Returns the pre-update loss.
/// Throws if the update produces non-finite parameters.
double td_update(QFunction& q, const QTransition& transition, double discount,
                 double learning_rate);

struct TrainConfig {
  double discount = 0.95;
  double learning_rate = 1e-4;
  double epsilon0 = 0.5;
  double epsilon_decay = 0.99;
  int epochs = 0;  // episodes to run; required
  std::uint64_t seed = 0;
  void validate() const;
};

struct EpisodeLog {
  int episode = 0;
  double total_reward = 0.0;
  double epsilon = 0.0;
  bool failed = false;
};

struct TrainResult {
  QFunction q;
  std::vector<EpisodeLog> log;
};

/// Online TD training: epsilon-greedy rollouts, one td_update per step,
/// epsilon multiplied by the decay rate after every episode. Deterministic
/// per config seed (the environment carries its own seed stream).
TrainResult train(ReplacementEnv& env, const TrainConfig& config);

void write_training_log_csv(const std::filesystem::path& file,
                            const std::vector<EpisodeLog>& log);

}  // namespace srla
