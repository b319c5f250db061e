#include "srla/seq_model.hpp"

#include <cmath>
#include <stdexcept>

namespace srla {

SeqModel::SeqModel(HmmModel model) : model_(std::move(model)) {}
SeqModel::SeqModel(IohmmModel model) : model_(std::move(model)) {}

int SeqModel::n_states() const {
  if (const auto* h = hmm()) return h->n_states;
  return iohmm()->n_states;
}

PosteriorTrack SeqModel::posterior(const Eigen::MatrixXd& inputs,
                                   const Eigen::MatrixXd& outputs) const {
  if (const auto* h = hmm()) return srla::posterior(*h, outputs);
  return io_posterior(*iohmm(), inputs, outputs);
}

Eigen::MatrixXd SeqModel::filtered(const Eigen::MatrixXd& inputs,
                                   const Eigen::MatrixXd& outputs) const {
  if (const auto* h = hmm()) return filtered_posterior(*h, outputs);
  return io_filtered_posterior(*iohmm(), inputs, outputs);
}

ViterbiResult SeqModel::viterbi(const Eigen::MatrixXd& inputs,
                                const Eigen::MatrixXd& outputs) const {
  if (const auto* h = hmm()) return srla::viterbi(*h, outputs);
  return io_viterbi(*iohmm(), inputs, outputs);
}

double SeqModel::log_likelihood(const Eigen::MatrixXd& inputs,
                                const Eigen::MatrixXd& outputs) const {
  if (const auto* h = hmm()) return sequence_log_likelihood(*h, outputs);
  return io_sequence_log_likelihood(*iohmm(), inputs, outputs);
}

Eigen::VectorXd SeqModel::transition_from(int state, const Eigen::VectorXd& u) const {
  if (state < 0 || state >= n_states()) {
    throw std::invalid_argument("transition_from: state index out of range");
  }
  if (const auto* h = hmm()) return h->transition.row(state).transpose();
  return iohmm()->conditional_transition(u).row(state).transpose();
}

Eigen::VectorXd SeqModel::sample_emission(int state, const Eigen::VectorXd& u,
                                          Rng& rng) const {
  if (state < 0 || state >= n_states()) {
    throw std::invalid_argument("sample_emission: state index out of range");
  }
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
  if (const auto* h = hmm()) {
    mean = h->emission_mean.row(state).transpose();
    var = h->emission_var.row(state).transpose();
  } else {
    mean = iohmm()->emission_mean(state, u);
    var = iohmm()->emission_var.row(state).transpose();
  }
  Eigen::VectorXd sample(mean.size());
  for (int i = 0; i < mean.size(); ++i) {
    sample(i) = rng.normal(mean(i), std::sqrt(var(i)));
  }
  return sample;
}

}  // namespace srla
