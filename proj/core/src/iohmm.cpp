#include "srla/iohmm.hpp"

#include <cmath>
#include <stdexcept>

#include "hmm_engine.hpp"
#include "srla/rng.hpp"
#include "srla/stats.hpp"

namespace srla {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;
constexpr int kLogisticSteps = 50;
constexpr double kLogisticStepSize = 0.1;
constexpr double kRidge = 1e-9;

Eigen::VectorXd augment(const Eigen::VectorXd& u) {
  Eigen::VectorXd a(u.size() + 1);
  a(0) = 1.0;
  a.tail(u.size()) = u;
  return a;
}

/// Rows of log softmax(W * u_aug) per origin state, for one input.
Eigen::MatrixXd log_conditional_transition(const IohmmModel& model,
                                           const Eigen::VectorXd& u_aug) {
  const int n = model.n_states;
  Eigen::MatrixXd out(n, n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd logits = model.transition_weights[i] * u_aug;
    out.row(i) = (logits.array() - log_sum_exp(logits)).transpose();
  }
  return out;
}

/// log_emit(t, i) = log N(y_t; W_i [1;u_t], diag(var_i)).
Eigen::MatrixXd io_log_density(const IohmmModel& model, const Eigen::MatrixXd& inputs,
                               const Eigen::MatrixXd& outputs) {
  const int t_len = static_cast<int>(outputs.rows());
  const int n = model.n_states;
  Eigen::MatrixXd out(t_len, n);
  Eigen::VectorXd log_norm(n);
  for (int i = 0; i < n; ++i) {
    log_norm(i) =
        -0.5 * (model.emission_var.cols() * kLog2Pi +
                model.emission_var.row(i).array().log().sum());
  }
  for (int t = 0; t < t_len; ++t) {
    const Eigen::VectorXd ua = augment(inputs.row(t).transpose());
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd mean = model.emission_weights[i] * ua;
      const double quad = ((outputs.row(t).transpose() - mean).array().square() /
                           model.emission_var.row(i).transpose().array())
                              .sum();
      out(t, i) = log_norm(i) - 0.5 * quad;
    }
  }
  return out;
}

std::vector<Eigen::MatrixXd> per_step_log_transitions(const IohmmModel& model,
                                                      const Eigen::MatrixXd& inputs) {
  std::vector<Eigen::MatrixXd> log_trans;
  log_trans.reserve(std::max<long>(0, inputs.rows() - 1));
  for (int t = 1; t < inputs.rows(); ++t) {
    log_trans.push_back(
        log_conditional_transition(model, augment(inputs.row(t).transpose())));
  }
  return log_trans;
}

void check_pairing(const std::vector<Eigen::MatrixXd>& inputs,
                   const std::vector<Eigen::MatrixXd>& outputs, bool for_fit) {
  if (inputs.size() != outputs.size() || outputs.empty()) {
    throw std::invalid_argument("fit_iohmm: inputs and outputs must pair up");
  }
  const auto s = inputs.front().cols();
  const auto m = outputs.front().cols();
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (inputs[k].rows() != outputs[k].rows()) {
      throw std::invalid_argument("fit_iohmm: paired sequences differ in length");
    }
    if (for_fit && outputs[k].rows() < 2) {
      throw std::invalid_argument("fit_iohmm: every sequence needs at least 2 rows");
    }
    if (inputs[k].cols() != s || outputs[k].cols() != m) {
      throw std::invalid_argument("fit_iohmm: sequences disagree on feature counts");
    }
  }
}

double weighted_logistic_objective(const Eigen::MatrixXd& weights,
                                   const Eigen::MatrixXd& u_rows,
                                   const Eigen::MatrixXd& targets) {
  double obj = 0.0;
  for (int r = 0; r < u_rows.rows(); ++r) {
    Eigen::VectorXd logits = weights * u_rows.row(r).transpose();
    const Eigen::VectorXd log_probs = logits.array() - log_sum_exp(logits);
    obj += targets.row(r).dot(log_probs);
  }
  return obj;
}

/// Gradient ascent with a fixed step budget on the expected transition
/// log-likelihood; returns the best iterate visited (never worse than the
/// starting point, which keeps the EM surrogate monotone).
Eigen::MatrixXd fit_transition_logits(Eigen::MatrixXd weights,
                                      const Eigen::MatrixXd& u_rows,
                                      const Eigen::MatrixXd& targets) {
  const double total_weight = targets.sum();
  if (total_weight <= 0.0 || u_rows.rows() == 0) return weights;

  Eigen::MatrixXd best = weights;
  double best_obj = weighted_logistic_objective(weights, u_rows, targets);
  for (int step = 0; step < kLogisticSteps; ++step) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(weights.rows(), weights.cols());
    for (int r = 0; r < u_rows.rows(); ++r) {
      Eigen::VectorXd logits = weights * u_rows.row(r).transpose();
      Eigen::VectorXd probs = (logits.array() - log_sum_exp(logits)).exp();
      const double row_weight = targets.row(r).sum();
      grad += (targets.row(r).transpose() - row_weight * probs) * u_rows.row(r);
    }
    weights += (kLogisticStepSize / total_weight) * grad;
    const double obj = weighted_logistic_objective(weights, u_rows, targets);
    if (obj > best_obj) {
      best_obj = obj;
      best = weights;
    }
  }
  return best;
}

}  // namespace

Eigen::MatrixXd IohmmModel::conditional_transition(const Eigen::VectorXd& u) const {
  if (u.size() != n_inputs()) {
    throw std::invalid_argument("conditional_transition: input dimension mismatch");
  }
  const Eigen::VectorXd ua = augment(u);
  Eigen::MatrixXd rows(n_states, n_states);
  for (int i = 0; i < n_states; ++i) {
    Eigen::VectorXd logits = transition_weights[i] * ua;
    rows.row(i) = (logits.array() - log_sum_exp(logits)).exp().transpose();
    rows.row(i) /= rows.row(i).sum();
  }
  return rows;
}

Eigen::VectorXd IohmmModel::emission_mean(int state, const Eigen::VectorXd& u) const {
  return emission_weights.at(state) * augment(u);
}

void IohmmModel::validate() const {
  if (n_states < 1) throw std::runtime_error("IohmmModel: n_states < 1");
  if (initial_probs.size() != n_states ||
      static_cast<int>(transition_weights.size()) != n_states ||
      static_cast<int>(emission_weights.size()) != n_states ||
      emission_var.rows() != n_states) {
    throw std::runtime_error("IohmmModel: inconsistent dimensions");
  }
  if ((initial_probs.array() < -1e-12).any() ||
      std::abs(initial_probs.sum() - 1.0) > 1e-9) {
    throw std::runtime_error("IohmmModel: initial_probs is not a simplex");
  }
  const int cols = static_cast<int>(transition_weights.front().cols());
  for (const auto& w : transition_weights) {
    if (w.rows() != n_states || w.cols() != cols) {
      throw std::runtime_error("IohmmModel: transition weight shape mismatch");
    }
  }
  for (const auto& w : emission_weights) {
    if (w.rows() != emission_var.cols() || w.cols() != cols) {
      throw std::runtime_error("IohmmModel: emission weight shape mismatch");
    }
  }
  if ((emission_var.array() < kVarianceFloor - 1e-15).any()) {
    throw std::runtime_error("IohmmModel: emission variance below floor");
  }
}

IohmmModel fit_iohmm(const std::vector<Eigen::MatrixXd>& inputs,
                     const std::vector<Eigen::MatrixXd>& outputs, int n_states,
                     std::uint64_t seed, int max_iter, double tol,
                     std::vector<double>* ll_log) {
  if (n_states < 1) throw std::invalid_argument("fit_iohmm: n_states < 1");
  check_pairing(inputs, outputs, true);
  Rng rng(derive_seed(seed, "iohmm-init"));

  const int s_dim = static_cast<int>(inputs.front().cols());
  const int m_dim = static_cast<int>(outputs.front().cols());

  IohmmModel model;
  model.n_states = n_states;
  Eigen::MatrixXd mean, var;
  detail::kmeans_moments(outputs, n_states, rng, mean, var);
  model.emission_var = var;
  model.emission_weights.assign(n_states, Eigen::MatrixXd::Zero(m_dim, s_dim + 1));
  for (int i = 0; i < n_states; ++i) {
    model.emission_weights[i].col(0) = mean.row(i).transpose();
  }
  model.initial_probs = detail::jittered_uniform(n_states, rng);
  model.transition_weights.assign(n_states, Eigen::MatrixXd::Zero(n_states, s_dim + 1));
  for (int i = 0; i < n_states; ++i) {
    model.transition_weights[i].col(0) =
        detail::jittered_uniform(n_states, rng).array().log();
  }

  long total_rows = 0, total_steps = 0;
  for (const auto& y : outputs) {
    total_rows += y.rows();
    total_steps += y.rows() - 1;
  }

  Eigen::MatrixXd u_rows(total_rows, s_dim + 1);    // [1; u_t] per cycle
  Eigen::MatrixXd u_steps(total_steps, s_dim + 1);  // [1; u_t] per transition target step
  Eigen::MatrixXd y_rows(total_rows, m_dim);
  {
    long r = 0, st = 0;
    for (const auto& u : inputs) {
      for (int t = 0; t < u.rows(); ++t) {
        u_rows.row(r) = augment(u.row(t).transpose()).transpose();
        if (t >= 1) u_steps.row(st++) = u_rows.row(r);
        ++r;
      }
    }
    r = 0;
    for (const auto& y : outputs) {
      y_rows.middleRows(r, y.rows()) = y;
      r += y.rows();
    }
  }

  Eigen::MatrixXd gamma_rows(total_rows, n_states);
  std::vector<Eigen::MatrixXd> xi_by_origin(
      n_states, Eigen::MatrixXd::Zero(total_steps, n_states));

  double prev_ll = kNegInf;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd init_acc = Eigen::VectorXd::Zero(n_states);
    double total_ll = 0.0;
    long r = 0, st = 0;
    for (std::size_t k = 0; k < outputs.size(); ++k) {
      const Eigen::MatrixXd log_emit = io_log_density(model, inputs[k], outputs[k]);
      const std::vector<Eigen::MatrixXd> log_trans =
          per_step_log_transitions(model, inputs[k]);
      const Eigen::VectorXd log_init = model.initial_probs.array().log();
      const detail::ForwardBackward fb =
          detail::forward_backward(log_init, detail::PerStepTrans{log_trans}, log_emit);
      total_ll += fb.log_likelihood;

      Eigen::MatrixXd gamma =
          ((fb.log_alpha + fb.log_beta).array() - fb.log_likelihood).exp();
      for (int t = 0; t < gamma.rows(); ++t) gamma.row(t) /= gamma.row(t).sum();
      gamma_rows.middleRows(r, gamma.rows()) = gamma;
      init_acc += gamma.row(0).transpose();

      for (int t = 1; t < outputs[k].rows(); ++t) {
        Eigen::MatrixXd xi(n_states, n_states);
        for (int i = 0; i < n_states; ++i) {
          for (int j = 0; j < n_states; ++j) {
            xi(i, j) = std::exp(fb.log_alpha(t - 1, i) + log_trans[t - 1](i, j) +
                                log_emit(t, j) + fb.log_beta(t, j) - fb.log_likelihood);
          }
        }
        const double xsum = xi.sum();
        if (xsum > 0.0) xi /= xsum;
        for (int i = 0; i < n_states; ++i) xi_by_origin[i].row(st) = xi.row(i);
        ++st;
      }
      r += outputs[k].rows();
    }

    if (ll_log) ll_log->push_back(total_ll);

    model.initial_probs = init_acc / init_acc.sum();
    for (int i = 0; i < n_states; ++i) {
      model.transition_weights[i] =
          fit_transition_logits(model.transition_weights[i], u_steps, xi_by_origin[i]);
    }
    for (int i = 0; i < n_states; ++i) {
      const Eigen::VectorXd g = gamma_rows.col(i);
      const double wsum = g.sum();
      if (wsum <= 1e-12) continue;
      const Eigen::MatrixXd xw = u_rows.array().colwise() * g.array();
      Eigen::MatrixXd gram = xw.transpose() * u_rows;
      gram.diagonal().array() += kRidge;
      const Eigen::MatrixXd rhs = xw.transpose() * y_rows;
      model.emission_weights[i] = gram.ldlt().solve(rhs).transpose();
      const Eigen::MatrixXd resid = y_rows - u_rows * model.emission_weights[i].transpose();
      model.emission_var.row(i) =
          ((resid.array().square().colwise() * g.array()).colwise().sum() / wsum)
              .cwiseMax(kVarianceFloor);
    }

    if (iter > 0 && total_ll - prev_ll < tol) break;
    prev_ll = total_ll;
  }
  return model;
}

PosteriorTrack io_posterior(const IohmmModel& model, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& outputs) {
  check_pairing({inputs}, {outputs}, false);
  if (inputs.cols() != model.n_inputs() || outputs.cols() != model.n_features()) {
    throw std::invalid_argument("io_posterior: dimension mismatch with model");
  }
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_emit = io_log_density(model, inputs, outputs);
  const std::vector<Eigen::MatrixXd> log_trans = per_step_log_transitions(model, inputs);
  return detail::smoothed_posterior(log_init, detail::PerStepTrans{log_trans}, log_emit);
}

ViterbiResult io_viterbi(const IohmmModel& model, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& outputs) {
  check_pairing({inputs}, {outputs}, false);
  if (inputs.cols() != model.n_inputs() || outputs.cols() != model.n_features()) {
    throw std::invalid_argument("io_viterbi: dimension mismatch with model");
  }
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_emit = io_log_density(model, inputs, outputs);
  const std::vector<Eigen::MatrixXd> log_trans = per_step_log_transitions(model, inputs);
  return detail::viterbi_path(log_init, detail::PerStepTrans{log_trans}, log_emit);
}

double io_sequence_log_likelihood(const IohmmModel& model, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& outputs) {
  check_pairing({inputs}, {outputs}, false);
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_emit = io_log_density(model, inputs, outputs);
  const std::vector<Eigen::MatrixXd> log_trans = per_step_log_transitions(model, inputs);
  double ll = 0.0;
  detail::forward_pass(log_init, detail::PerStepTrans{log_trans}, log_emit, &ll);
  return ll;
}

Eigen::MatrixXd io_filtered_posterior(const IohmmModel& model,
                                      const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& outputs) {
  check_pairing({inputs}, {outputs}, false);
  if (inputs.cols() != model.n_inputs() || outputs.cols() != model.n_features()) {
    throw std::invalid_argument("io_filtered_posterior: dimension mismatch with model");
  }
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_emit = io_log_density(model, inputs, outputs);
  const std::vector<Eigen::MatrixXd> log_trans = per_step_log_transitions(model, inputs);
  const Eigen::MatrixXd la =
      detail::forward_pass(log_init, detail::PerStepTrans{log_trans}, log_emit, nullptr);
  Eigen::MatrixXd filtered(la.rows(), la.cols());
  for (int t = 0; t < la.rows(); ++t) {
    const Eigen::VectorXd row = la.row(t).transpose();
    filtered.row(t) = (row.array() - log_sum_exp(row)).exp().transpose();
    filtered.row(t) /= filtered.row(t).sum();
  }
  return filtered;
}

IohmmModel iohmm_from_hmm(const HmmModel& hmm, int n_inputs) {
  hmm.validate();
  IohmmModel model;
  model.n_states = hmm.n_states;
  model.initial_probs = hmm.initial_probs;
  model.emission_var = hmm.emission_var;
  model.transition_weights.assign(hmm.n_states,
                                  Eigen::MatrixXd::Zero(hmm.n_states, n_inputs + 1));
  model.emission_weights.assign(
      hmm.n_states, Eigen::MatrixXd::Zero(hmm.emission_mean.cols(), n_inputs + 1));
  for (int i = 0; i < hmm.n_states; ++i) {
    model.transition_weights[i].col(0) = hmm.transition.row(i).array().log().transpose();
    model.emission_weights[i].col(0) = hmm.emission_mean.row(i).transpose();
  }
  return model;
}

}  // namespace srla
