#include "srla/hmm.hpp"

#include <cmath>
#include <stdexcept>

#include "hmm_engine.hpp"
#include "srla/rng.hpp"
#include "srla/stats.hpp"

namespace srla {

namespace {

constexpr double kLog2Pi = 1.8378770664093455;

void check_simplex(const Eigen::VectorXd& v, const char* what) {
  if ((v.array() < -1e-12).any()) {
    throw std::runtime_error(std::string(what) + ": negative probability entry");
  }
  if (std::abs(v.sum() - 1.0) > 1e-9) {
    throw std::runtime_error(std::string(what) + ": probabilities do not sum to 1");
  }
}

void check_sequences(const std::vector<Eigen::MatrixXd>& sequences, bool for_fit) {
  if (sequences.empty()) throw std::invalid_argument("fit_hmm: no sequences");
  const auto m = sequences.front().cols();
  for (const auto& s : sequences) {
    if (for_fit && s.rows() < 2) {
      throw std::invalid_argument("fit_hmm: every sequence needs at least 2 rows");
    }
    if (s.cols() != m) {
      throw std::invalid_argument("fit_hmm: sequences disagree on feature count");
    }
  }
}

}  // namespace

namespace detail {

void kmeans_moments(const std::vector<Eigen::MatrixXd>& sequences, int n_states, Rng& rng,
                    Eigen::MatrixXd& mean, Eigen::MatrixXd& var) {
  long total_rows = 0;
  for (const auto& s : sequences) total_rows += s.rows();
  const int m = static_cast<int>(sequences.front().cols());
  Eigen::MatrixXd pooled(total_rows, m);
  long r = 0;
  for (const auto& s : sequences) {
    pooled.middleRows(r, s.rows()) = s;
    r += s.rows();
  }

  const Eigen::RowVectorXd global_mean = pooled.colwise().mean();
  Eigen::RowVectorXd global_var =
      (pooled.rowwise() - global_mean).array().square().colwise().mean();
  global_var = global_var.cwiseMax(kVarianceFloor);

  mean.resize(n_states, m);
  var.resize(n_states, m);
  if (n_states == 1) {
    mean.row(0) = global_mean;
    var.row(0) = global_var;
    return;
  }

  // Distinct random rows as initial centers.
  std::vector<long> picks;
  while (static_cast<int>(picks.size()) < n_states) {
    const long cand = static_cast<long>(rng.below(static_cast<std::uint64_t>(total_rows)));
    bool dup = false;
    for (long p : picks) dup = dup || p == cand;
    if (!dup) picks.push_back(cand);
  }
  Eigen::MatrixXd centers(n_states, m);
  for (int k = 0; k < n_states; ++k) centers.row(k) = pooled.row(picks[k]);

  std::vector<int> assign(total_rows, 0);
  for (int iter = 0; iter < 10; ++iter) {
    for (long i = 0; i < total_rows; ++i) {
      int best = 0;
      double best_d = (pooled.row(i) - centers.row(0)).squaredNorm();
      for (int k = 1; k < n_states; ++k) {
        const double d = (pooled.row(i) - centers.row(k)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      assign[i] = best;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(n_states, m);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_states);
    for (long i = 0; i < total_rows; ++i) {
      sums.row(assign[i]) += pooled.row(i);
      counts(assign[i]) += 1.0;
    }
    for (int k = 0; k < n_states; ++k) {
      if (counts(k) > 0.0) {
        centers.row(k) = sums.row(k) / counts(k);
      } else {
        // Re-seed an empty cluster with the row farthest from its center.
        long far = 0;
        double far_d = -1.0;
        for (long i = 0; i < total_rows; ++i) {
          const double d = (pooled.row(i) - centers.row(assign[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(k) = pooled.row(far);
      }
    }
  }

  Eigen::VectorXd counts = Eigen::VectorXd::Zero(n_states);
  Eigen::MatrixXd sq = Eigen::MatrixXd::Zero(n_states, m);
  mean.setZero();
  for (long i = 0; i < total_rows; ++i) {
    const int k = assign[i];
    counts(k) += 1.0;
    mean.row(k) += pooled.row(i);
    sq.row(k) += pooled.row(i).array().square().matrix();
  }
  for (int k = 0; k < n_states; ++k) {
    if (counts(k) >= 2.0) {
      mean.row(k) /= counts(k);
      var.row(k) = (sq.row(k) / counts(k) - mean.row(k).array().square().matrix())
                       .cwiseMax(kVarianceFloor);
    } else {
      mean.row(k) = counts(k) >= 1.0 ? (mean.row(k) / counts(k)).eval() : global_mean;
      var.row(k) = global_var;
    }
  }
}

Eigen::VectorXd jittered_uniform(int n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 - 0.1 * std::log(1.0 - rng.uniform());
  return v / v.sum();
}

}  // namespace detail

void HmmModel::validate() const {
  if (n_states < 1) throw std::runtime_error("HmmModel: n_states < 1");
  if (initial_probs.size() != n_states || transition.rows() != n_states ||
      transition.cols() != n_states || emission_mean.rows() != n_states ||
      emission_var.rows() != n_states || emission_var.cols() != emission_mean.cols()) {
    throw std::runtime_error("HmmModel: inconsistent dimensions");
  }
  check_simplex(initial_probs, "HmmModel initial_probs");
  for (int i = 0; i < n_states; ++i) {
    check_simplex(transition.row(i).transpose(), "HmmModel transition row");
  }
  if ((emission_var.array() < kVarianceFloor - 1e-15).any()) {
    throw std::runtime_error("HmmModel: emission variance below floor");
  }
}

Eigen::MatrixXd gaussian_log_density(const Eigen::MatrixXd& sequence,
                                     const Eigen::MatrixXd& mean,
                                     const Eigen::MatrixXd& var) {
  const int t_len = static_cast<int>(sequence.rows());
  const int n = static_cast<int>(mean.rows());
  Eigen::MatrixXd out(t_len, n);
  Eigen::VectorXd log_norm(n);
  for (int i = 0; i < n; ++i) {
    log_norm(i) = -0.5 * (var.cols() * kLog2Pi + var.row(i).array().log().sum());
  }
  for (int t = 0; t < t_len; ++t) {
    for (int i = 0; i < n; ++i) {
      const double quad =
          ((sequence.row(t) - mean.row(i)).array().square() / var.row(i).array()).sum();
      out(t, i) = log_norm(i) - 0.5 * quad;
    }
  }
  return out;
}

HmmModel fit_hmm(const std::vector<Eigen::MatrixXd>& sequences, int n_states,
                 std::uint64_t seed, int max_iter, double tol,
                 std::vector<double>* ll_log) {
  if (n_states < 1) throw std::invalid_argument("fit_hmm: n_states < 1");
  check_sequences(sequences, true);
  Rng rng(derive_seed(seed, "hmm-init"));

  HmmModel model;
  model.n_states = n_states;
  detail::kmeans_moments(sequences, n_states, rng, model.emission_mean, model.emission_var);
  model.initial_probs = detail::jittered_uniform(n_states, rng);
  model.transition.resize(n_states, n_states);
  for (int i = 0; i < n_states; ++i) {
    model.transition.row(i) = detail::jittered_uniform(n_states, rng).transpose();
  }

  double prev_ll = kNegInf;
  for (int iter = 0; iter < max_iter; ++iter) {
    const Eigen::VectorXd log_init = model.initial_probs.array().log();
    const Eigen::MatrixXd log_trans = model.transition.array().log();

    Eigen::VectorXd init_acc = Eigen::VectorXd::Zero(n_states);
    Eigen::MatrixXd trans_acc = Eigen::MatrixXd::Zero(n_states, n_states);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_states);
    Eigen::MatrixXd wy = Eigen::MatrixXd::Zero(n_states, model.emission_mean.cols());
    Eigen::MatrixXd wyy = Eigen::MatrixXd::Zero(n_states, model.emission_mean.cols());
    double total_ll = 0.0;

    for (const auto& seq : sequences) {
      const Eigen::MatrixXd log_emit =
          gaussian_log_density(seq, model.emission_mean, model.emission_var);
      const detail::ConstTrans trans{log_trans};
      const detail::ForwardBackward fb = detail::forward_backward(log_init, trans, log_emit);
      total_ll += fb.log_likelihood;

      Eigen::MatrixXd gamma =
          ((fb.log_alpha + fb.log_beta).array() - fb.log_likelihood).exp();
      for (int t = 0; t < gamma.rows(); ++t) gamma.row(t) /= gamma.row(t).sum();

      init_acc += gamma.row(0).transpose();
      for (int t = 1; t < seq.rows(); ++t) {
        Eigen::MatrixXd xi(n_states, n_states);
        for (int i = 0; i < n_states; ++i) {
          for (int j = 0; j < n_states; ++j) {
            xi(i, j) = std::exp(fb.log_alpha(t - 1, i) + log_trans(i, j) +
                                log_emit(t, j) + fb.log_beta(t, j) - fb.log_likelihood);
          }
        }
        const double s = xi.sum();
        if (s > 0.0) trans_acc += xi / s;
      }
      w += gamma.colwise().sum().transpose();
      wy += gamma.transpose() * seq;
      wyy += gamma.transpose() * seq.array().square().matrix();
    }

    if (ll_log) ll_log->push_back(total_ll);

    model.initial_probs = init_acc / init_acc.sum();
    for (int i = 0; i < n_states; ++i) {
      const double row_sum = trans_acc.row(i).sum();
      if (row_sum > 0.0) model.transition.row(i) = trans_acc.row(i) / row_sum;
    }
    for (int i = 0; i < n_states; ++i) {
      if (w(i) > 1e-12) {
        model.emission_mean.row(i) = wy.row(i) / w(i);
        model.emission_var.row(i) =
            (wyy.row(i) / w(i) - model.emission_mean.row(i).array().square().matrix())
                .cwiseMax(kVarianceFloor);
      }
    }

    if (iter > 0 && total_ll - prev_ll < tol) break;
    prev_ll = total_ll;
  }
  return model;
}

PosteriorTrack posterior(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  if (sequence.cols() != model.n_features()) {
    throw std::invalid_argument("posterior: sequence feature count does not match model");
  }
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_trans = model.transition.array().log();
  const Eigen::MatrixXd log_emit =
      gaussian_log_density(sequence, model.emission_mean, model.emission_var);
  return detail::smoothed_posterior(log_init, detail::ConstTrans{log_trans}, log_emit);
}

std::vector<int> most_probable_states(const PosteriorTrack& track) {
  std::vector<int> states(track.gamma.rows());
  for (int t = 0; t < track.gamma.rows(); ++t) {
    states[t] = argmax_lowest(track.gamma.row(t).transpose());
  }
  return states;
}

ViterbiResult viterbi(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  if (sequence.cols() != model.n_features()) {
    throw std::invalid_argument("viterbi: sequence feature count does not match model");
  }
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_trans = model.transition.array().log();
  const Eigen::MatrixXd log_emit =
      gaussian_log_density(sequence, model.emission_mean, model.emission_var);
  return detail::viterbi_path(log_init, detail::ConstTrans{log_trans}, log_emit);
}

Eigen::MatrixXd filtered_posterior(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  if (sequence.cols() != model.n_features()) {
    throw std::invalid_argument("filtered_posterior: feature count mismatch");
  }
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_trans = model.transition.array().log();
  const Eigen::MatrixXd log_emit =
      gaussian_log_density(sequence, model.emission_mean, model.emission_var);
  const Eigen::MatrixXd la =
      detail::forward_pass(log_init, detail::ConstTrans{log_trans}, log_emit, nullptr);
  Eigen::MatrixXd filtered(la.rows(), la.cols());
  for (int t = 0; t < la.rows(); ++t) {
    const Eigen::VectorXd row = la.row(t).transpose();
    filtered.row(t) = (row.array() - log_sum_exp(row)).exp().transpose();
    filtered.row(t) /= filtered.row(t).sum();
  }
  return filtered;
}

double sequence_log_likelihood(const HmmModel& model, const Eigen::MatrixXd& sequence) {
  if (sequence.cols() != model.n_features()) {
    throw std::invalid_argument("sequence_log_likelihood: feature count mismatch");
  }
  const Eigen::VectorXd log_init = model.initial_probs.array().log();
  const Eigen::MatrixXd log_trans = model.transition.array().log();
  const Eigen::MatrixXd log_emit =
      gaussian_log_density(sequence, model.emission_mean, model.emission_var);
  double ll = 0.0;
  detail::forward_pass(log_init, detail::ConstTrans{log_trans}, log_emit, &ll);
  return ll;
}

}  // namespace srla
