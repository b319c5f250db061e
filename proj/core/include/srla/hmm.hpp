#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace srla {

/// Variances of Gaussian emissions never drop below this in any M-step;
/// keeps near-constant sensors from collapsing the likelihood.
inline constexpr double kVarianceFloor = 1e-6;

/// Gaussian hidden Markov model with diagonal covariances.
struct HmmModel {
  int n_states = 0;
  Eigen::VectorXd initial_probs;   // simplex, length n_states
  Eigen::MatrixXd transition;      // row-stochastic, n_states x n_states
  Eigen::MatrixXd emission_mean;   // n_states x M
  Eigen::MatrixXd emission_var;    // n_states x M, entries >= kVarianceFloor

  int n_features() const { return static_cast<int>(emission_mean.cols()); }
  /// Checks simplex rows, dimensions and the variance floor. Throws on violation.
  void validate() const;
};

/// Smoothed state posteriors for one sequence.
struct PosteriorTrack {
  Eigen::MatrixXd gamma;  // T x n_states, each row sums to 1
  double log_likelihood = 0.0;
};

struct ViterbiResult {
  std::vector<int> path;
  double log_prob = 0.0;
};

/// Baum-Welch fit on one or more observation sequences (rows = cycles).
/// Deterministic per seed. Initialization is a seeded k-means assignment of
/// the pooled observations plus jittered uniform initial/transition rows.
/// Stops when the total log-likelihood improves by less than `tol`.
/// `ll_log`, when given, receives the log-likelihood after every iteration.
HmmModel fit_hmm(const std::vector<Eigen::MatrixXd>& sequences, int n_states,
                 std::uint64_t seed, int max_iter = 100, double tol = 1e-4,
                 std::vector<double>* ll_log = nullptr);

/// Forward-backward in log space.
PosteriorTrack posterior(const HmmModel& model, const Eigen::MatrixXd& sequence);

/// Per-cycle argmax of the posterior; ties go to the lowest state index.
std::vector<int> most_probable_states(const PosteriorTrack& track);

/// Jointly most probable path in log space; ties go to the lowest
/// predecessor index.
ViterbiResult viterbi(const HmmModel& model, const Eigen::MatrixXd& sequence);

/// Log-likelihood from the forward pass alone.
double sequence_log_likelihood(const HmmModel& model, const Eigen::MatrixXd& sequence);

/// Causal (filtered) posterior: row t is P(x_t | y_1..y_t), the normalized
/// forward variable. This is what an online policy can see at cycle t; it
/// equals the smoothed posterior's final row on every prefix.
Eigen::MatrixXd filtered_posterior(const HmmModel& model, const Eigen::MatrixXd& sequence);

/// Log-density rows: out(t, i) = log N(y_t; mean_i, diag(var_i)).
Eigen::MatrixXd gaussian_log_density(const Eigen::MatrixXd& sequence,
                                     const Eigen::MatrixXd& mean,
                                     const Eigen::MatrixXd& var);

}  // namespace srla
