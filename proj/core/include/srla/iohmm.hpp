#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "srla/hmm.hpp"

namespace srla {

/// Hidden Markov model whose transitions and emission means are conditioned
/// on an operating-condition input vector u. Transitions are per-origin-state
/// multinomial logistic maps of [1; u]; emissions are linear-Gaussian means
/// in [1; u] with input-independent diagonal noise.
struct IohmmModel {
  int n_states = 0;
  Eigen::VectorXd initial_probs;                  // input-independent
  std::vector<Eigen::MatrixXd> transition_weights;  // [origin]: n_states x (S+1) logits
  std::vector<Eigen::MatrixXd> emission_weights;    // [state]: M x (S+1)
  Eigen::MatrixXd emission_var;                     // n_states x M

  int n_inputs() const {
    return transition_weights.empty()
               ? 0
               : static_cast<int>(transition_weights.front().cols()) - 1;
  }
  int n_features() const { return static_cast<int>(emission_var.cols()); }

  /// Row-stochastic transition matrix evaluated at one input.
  Eigen::MatrixXd conditional_transition(const Eigen::VectorXd& u) const;
  Eigen::VectorXd emission_mean(int state, const Eigen::VectorXd& u) const;
  void validate() const;
};

/// EM fit on paired (input, output) sequences. The E-step runs the
/// forward-backward recursions with input-dependent local probabilities; the
/// M-step solves weighted multinomial-logistic problems for the transitions
/// and weighted least squares for the emission means. Deterministic per seed.
IohmmModel fit_iohmm(const std::vector<Eigen::MatrixXd>& inputs,
                     const std::vector<Eigen::MatrixXd>& outputs, int n_states,
                     std::uint64_t seed, int max_iter = 100, double tol = 1e-4,
                     std::vector<double>* ll_log = nullptr);

PosteriorTrack io_posterior(const IohmmModel& model, const Eigen::MatrixXd& inputs,
                            const Eigen::MatrixXd& outputs);

ViterbiResult io_viterbi(const IohmmModel& model, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& outputs);

double io_sequence_log_likelihood(const IohmmModel& model, const Eigen::MatrixXd& inputs,
                                  const Eigen::MatrixXd& outputs);

/// Causal (filtered) posterior, see filtered_posterior for the plain model.
Eigen::MatrixXd io_filtered_posterior(const IohmmModel& model,
                                      const Eigen::MatrixXd& inputs,
                                      const Eigen::MatrixXd& outputs);

/// Bias-only embedding of a plain HMM: zero input weights, logits/means set
/// so the conditional model reproduces the HMM at every input. Transition
/// probabilities must be strictly positive.
IohmmModel iohmm_from_hmm(const HmmModel& model, int n_inputs);

}  // namespace srla
