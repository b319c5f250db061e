#pragma once

#include <variant>

#include "srla/hmm.hpp"
#include "srla/iohmm.hpp"
#include "srla/rng.hpp"

namespace srla {

/// Uniform decode/sample surface over the plain and the input-conditioned
/// model. The plain model ignores the input arguments.
class SeqModel {
 public:
  explicit SeqModel(HmmModel model);
  explicit SeqModel(IohmmModel model);

  int n_states() const;
  bool is_io() const { return std::holds_alternative<IohmmModel>(model_); }
  const HmmModel* hmm() const { return std::get_if<HmmModel>(&model_); }
  const IohmmModel* iohmm() const { return std::get_if<IohmmModel>(&model_); }

  PosteriorTrack posterior(const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& outputs) const;
  Eigen::MatrixXd filtered(const Eigen::MatrixXd& inputs,
                           const Eigen::MatrixXd& outputs) const;
  ViterbiResult viterbi(const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& outputs) const;
  double log_likelihood(const Eigen::MatrixXd& inputs,
                        const Eigen::MatrixXd& outputs) const;

  /// Next-state distribution out of `state` at input `u`.
  Eigen::VectorXd transition_from(int state, const Eigen::VectorXd& u) const;
  /// One observation drawn from the state's emission at input `u`.
  Eigen::VectorXd sample_emission(int state, const Eigen::VectorXd& u, Rng& rng) const;

 private:
  std::variant<HmmModel, IohmmModel> model_;
};

}  // namespace srla
