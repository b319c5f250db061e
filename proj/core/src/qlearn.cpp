#include "srla/qlearn.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "srla/stats.hpp"

namespace srla {

bool QFunction::all_finite() const {
  for (const auto& w : weights) {
    if (!w.allFinite()) return false;
  }
  for (const auto& b : biases) {
    if (!b.allFinite()) return false;
  }
  return true;
}

QFunction QFunction::make(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw std::invalid_argument("QFunction::make: need at least input and output sizes");
  }
  for (int s : layer_sizes) {
    if (s < 1) throw std::invalid_argument("QFunction::make: layer sizes must be positive");
  }
  Rng rng(derive_seed(seed, "qfunction-init"));
  QFunction q;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::MatrixXd w(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = (2.0 * rng.uniform() - 1.0) * bound;
    }
    q.weights.push_back(std::move(w));
    q.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return q;
}

QFunction QFunction::make_default(int input_dim, int n_actions, std::uint64_t seed) {
  return make({input_dim, 128, 256, n_actions}, seed);
}

Eigen::VectorXd q_values(const QFunction& q, const Eigen::VectorXd& observation) {
  if (observation.size() != q.input_dim()) {
    throw std::invalid_argument("q_values: observation dimension mismatch");
  }
  Eigen::VectorXd act = observation;
  for (int l = 0; l < q.n_layers(); ++l) {
    act = q.weights[l] * act + q.biases[l];
    if (l + 1 < q.n_layers()) act = act.cwiseMax(0.0);
  }
  return act;
}

int select_action_index(const QFunction& q, const Eigen::VectorXd& observation,
                        double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) {
    throw std::invalid_argument("select_action_index: epsilon outside [0, 1]");
  }
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    return static_cast<int>(rng.below(static_cast<std::uint64_t>(q.n_actions())));
  }
  return argmax_lowest(q_values(q, observation));
}

Action select_action(const QFunction& q, const Eigen::VectorXd& observation,
                     double epsilon, Rng& rng) {
  return static_cast<Action>(select_action_index(q, observation, epsilon, rng));
}

double td_update(QFunction& q, const QTransition& transition, double discount,
                 double learning_rate) {
  const int n_layers = q.n_layers();

  // Forward pass keeping pre-activations for the backward sweep.
  std::vector<Eigen::VectorXd> activations(n_layers + 1);
  std::vector<Eigen::VectorXd> pre(n_layers);
  activations[0] = transition.s;
  for (int l = 0; l < n_layers; ++l) {
    pre[l] = q.weights[l] * activations[l] + q.biases[l];
    activations[l + 1] = (l + 1 < n_layers) ? pre[l].cwiseMax(0.0).eval() : pre[l];
  }

  double target = transition.reward;
  if (!transition.terminal) {
    target += discount * q_values(q, transition.s_next).maxCoeff();
  }

  const double predicted = activations[n_layers](transition.action);
  const double error = predicted - target;
  const double loss = error * error;

  // Squared-error gradient flows only through the chosen action's output.
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(q.n_actions());
  delta(transition.action) = 2.0 * error;
  for (int l = n_layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd grad_w = delta * activations[l].transpose();
    Eigen::VectorXd delta_prev;
    if (l > 0) {
      delta_prev = q.weights[l].transpose() * delta;
      delta_prev = (pre[l - 1].array() > 0.0).select(delta_prev, 0.0);
    }
    q.weights[l] -= learning_rate * grad_w;
    q.biases[l] -= learning_rate * delta;
    if (l > 0) delta = std::move(delta_prev);
  }

  if (!std::isfinite(loss) || !q.all_finite()) {
    std::ostringstream msg;
    msg << "td_update: non-finite update (target=" << target << ", predicted=" << predicted
        << ", reward=" << transition.reward << ")";
    throw std::runtime_error(msg.str());
  }
  return loss;
}

void TrainConfig::validate() const {
  if (discount < 0.0 || discount > 1.0) throw std::invalid_argument("TrainConfig: discount outside [0, 1]");
  if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning rate must be positive");
  if (epsilon0 < 0.0 || epsilon0 > 1.0) throw std::invalid_argument("TrainConfig: epsilon0 outside [0, 1]");
  if (epsilon_decay < 0.0 || epsilon_decay > 1.0) throw std::invalid_argument("TrainConfig: epsilon decay outside [0, 1]");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be at least 1");
}

TrainResult train(ReplacementEnv& env, const TrainConfig& config) {
  config.validate();
  TrainResult result;
  result.q = QFunction::make_default(env.observation_dim(), kNumActions,
                                     derive_seed(config.seed, "agent-weights"));
  Rng explore(derive_seed(config.seed, "agent-explore"));

  double epsilon = config.epsilon0;
  for (int episode = 1; episode <= config.epochs; ++episode) {
    EnvState state = env.reset();
    Eigen::VectorXd obs = state.observation;
    double total_reward = 0.0;
    bool failed = false;
    while (true) {
      const int action = select_action_index(result.q, obs, epsilon, explore);
      const StepResult sr = env.step(static_cast<Action>(action));
      total_reward += sr.reward;
      td_update(result.q,
                QTransition{obs, action, sr.reward, sr.next_observation, sr.episode_ended},
                config.discount, config.learning_rate);
      obs = sr.next_observation;
      if (sr.episode_ended) {
        failed = sr.info.failed;
        break;
      }
    }
    result.log.push_back(EpisodeLog{episode, total_reward, epsilon, failed});
    epsilon *= config.epsilon_decay;
  }
  return result;
}

void write_training_log_csv(const std::filesystem::path& file,
                            const std::vector<EpisodeLog>& log) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("write_training_log_csv: cannot open " + file.string());
  out << "episode,total_reward,epsilon,failed\n";
  out.precision(17);
  for (const auto& e : log) {
    out << e.episode << ',' << e.total_reward << ',' << e.epsilon << ','
        << (e.failed ? 1 : 0) << '\n';
  }
}

}  // namespace srla
