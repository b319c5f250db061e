// Internal log-space recursions shared by the HMM and the input-conditioned
// variant. A TransProvider exposes the log transition matrix used to move
// into step t (t >= 1); the plain HMM uses one matrix for every step.
#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "srla/hmm.hpp"
#include "srla/rng.hpp"
#include "srla/stats.hpp"

namespace srla::detail {

struct ConstTrans {
  const Eigen::MatrixXd& log_a;
  const Eigen::MatrixXd& at(int) const { return log_a; }
};

struct PerStepTrans {
  const std::vector<Eigen::MatrixXd>& log_a;  // log_a[t-1] moves into step t
  const Eigen::MatrixXd& at(int t) const { return log_a[t - 1]; }
};

struct ForwardBackward {
  Eigen::MatrixXd log_alpha;  // T x n
  Eigen::MatrixXd log_beta;   // T x n
  double log_likelihood = 0.0;
};

template <typename Trans>
Eigen::MatrixXd forward_pass(const Eigen::VectorXd& log_init, const Trans& trans,
                             const Eigen::MatrixXd& log_emit, double* log_likelihood) {
  const int t_len = static_cast<int>(log_emit.rows());
  const int n = static_cast<int>(log_emit.cols());
  Eigen::MatrixXd la(t_len, n);
  la.row(0) = (log_init + log_emit.row(0).transpose()).transpose();
  Eigen::VectorXd work(n);
  for (int t = 1; t < t_len; ++t) {
    const Eigen::MatrixXd& log_a = trans.at(t);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) work(i) = la(t - 1, i) + log_a(i, j);
      la(t, j) = log_sum_exp(work) + log_emit(t, j);
    }
  }
  if (log_likelihood) {
    *log_likelihood = log_sum_exp(la.row(t_len - 1).transpose());
  }
  return la;
}

template <typename Trans>
ForwardBackward forward_backward(const Eigen::VectorXd& log_init, const Trans& trans,
                                 const Eigen::MatrixXd& log_emit) {
  const int t_len = static_cast<int>(log_emit.rows());
  const int n = static_cast<int>(log_emit.cols());
  ForwardBackward fb;
  fb.log_alpha = forward_pass(log_init, trans, log_emit, &fb.log_likelihood);
  if (!std::isfinite(fb.log_likelihood)) {
    throw std::runtime_error("forward_backward: sequence has zero probability under the model");
  }
  fb.log_beta.resize(t_len, n);
  fb.log_beta.row(t_len - 1).setZero();
  Eigen::VectorXd work(n);
  for (int t = t_len - 2; t >= 0; --t) {
    const Eigen::MatrixXd& log_a = trans.at(t + 1);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        work(j) = log_a(i, j) + log_emit(t + 1, j) + fb.log_beta(t + 1, j);
      }
      fb.log_beta(t, i) = log_sum_exp(work);
    }
  }
  return fb;
}

template <typename Trans>
PosteriorTrack smoothed_posterior(const Eigen::VectorXd& log_init, const Trans& trans,
                                  const Eigen::MatrixXd& log_emit) {
  const ForwardBackward fb = forward_backward(log_init, trans, log_emit);
  PosteriorTrack track;
  track.log_likelihood = fb.log_likelihood;
  track.gamma = ((fb.log_alpha + fb.log_beta).array() - fb.log_likelihood).exp();
  for (int t = 0; t < track.gamma.rows(); ++t) {
    const double s = track.gamma.row(t).sum();
    if (s <= 0.0) {
      throw std::runtime_error("posterior: zero-probability row in forward-backward");
    }
    track.gamma.row(t) /= s;
  }
  return track;
}

template <typename Trans>
ViterbiResult viterbi_path(const Eigen::VectorXd& log_init, const Trans& trans,
                           const Eigen::MatrixXd& log_emit) {
  const int t_len = static_cast<int>(log_emit.rows());
  const int n = static_cast<int>(log_emit.cols());
  Eigen::MatrixXd lv(t_len, n);
  Eigen::MatrixXi back(t_len, n);
  lv.row(0) = (log_init + log_emit.row(0).transpose()).transpose();
  back.row(0).setZero();
  for (int t = 1; t < t_len; ++t) {
    const Eigen::MatrixXd& log_a = trans.at(t);
    for (int j = 0; j < n; ++j) {
      int best_i = 0;
      double best = lv(t - 1, 0) + log_a(0, j);
      for (int i = 1; i < n; ++i) {
        const double cand = lv(t - 1, i) + log_a(i, j);
        if (cand > best) {  // strict: ties keep the lowest predecessor
          best = cand;
          best_i = i;
        }
      }
      lv(t, j) = best + log_emit(t, j);
      back(t, j) = best_i;
    }
  }
  ViterbiResult result;
  result.path.resize(t_len);
  int state = argmax_lowest(lv.row(t_len - 1).transpose());
  result.log_prob = lv(t_len - 1, state);
  for (int t = t_len - 1; t >= 0; --t) {
    result.path[t] = state;
    if (t > 0) state = back(t, state);
  }
  return result;
}

/// Seeded k-means over the pooled observations; fills per-state mean and
/// floored variance rows. Shared by both model initializers.
void kmeans_moments(const std::vector<Eigen::MatrixXd>& sequences, int n_states, Rng& rng,
                    Eigen::MatrixXd& mean, Eigen::MatrixXd& var);

/// Near-uniform simplex vector with seeded Dirichlet-style jitter.
Eigen::VectorXd jittered_uniform(int n, Rng& rng);

}  // namespace srla::detail
