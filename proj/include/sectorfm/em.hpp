#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "sectorfm/model.hpp"

namespace sectorfm {

/// Knobs of the outer EM loop. Defaults follow the reference protocol:
/// a fixed 100 iterations with no early stopping.
struct FitConfig {
  int max_iterations = 100;
  /// Optional early stop: fitting ends once the relative change of the
  /// log-likelihood between consecutive iterations drops to this value.
  std::optional<double> rel_tol;
  std::uint64_t seed = 0;
  double init_scale = 0.1;  // stddev of the random initial loadings
};

/// Per-iteration record of a fit.
///
/// `loglik_per_iter` holds the exact Gaussian log-likelihood of the model
/// after each iteration (X_i ~ N(0, Lambda Lambda^T + Psi)); EM guarantees it
/// is nondecreasing up to floating-point noise, and the convergence check
/// runs on it. `expected_loglik_per_iter` holds the expected complete-data
/// objective (see expected_loglik) at the same iterates; it is reported for
/// study but carries no monotonicity guarantee -- its posterior-entropy
/// component can make it dip slightly near convergence.
struct FitTrace {
  std::vector<double> loglik_per_iter;
  std::vector<double> expected_loglik_per_iter;
  int iterations_run = 0;
  bool converged_by_tol = false;
};

/// Posterior projection beta = Lambda^T (Psi + Lambda Lambda^T)^{-1}, so that
/// E(F | X) = beta X. Returns an m x n matrix.
Matrix factor_projection(const FactorModel& model);

/// E-step: posterior factor moments over the whole panel.
///   ef column i = beta X_i
///   eff_sum     = p (I - beta Lambda) + (beta X)(beta X)^T
///   cross_sum   = sum_i X_i E(F|X_i)^T
/// Observation chunks are processed independently (possibly in parallel, see
/// engine_threads) and reduced in fixed chunk order, so the result is
/// bit-identical for any thread count.
PosteriorMoments e_step(const FactorModel& model, const ReturnsPanel& panel);

/// M-step for dense loadings: solves B Lambda^T = A^T, i.e. Lambda = A B^{-1}
/// without forming the inverse.
Matrix m_step_unconstrained(const PosteriorMoments& moments);

/// M-step under a loading mask. For each stock j with permitted index set
/// I_j, the row solves the restricted system
///   Lambda(j, I_j) = A(j, I_j) B(I_j, I_j)^{-1}
/// and entries outside I_j are exactly 0.0. Rows sharing a pattern share one
/// factorization. With an all-true mask this reproduces m_step_unconstrained.
Matrix m_step_constrained(const PosteriorMoments& moments,
                          const LoadingMask& mask);

/// M-step for the unique variances:
///   psi_j = (1/p) (sum_i X_ji^2 - (Lambda_new A^T)_jj), clamped to kPsiFloor.
Vector m_step_psi(const ReturnsPanel& panel, const PosteriorMoments& moments,
                  const Matrix& lambda_new);

/// Expected complete-data log-likelihood at the model's own posterior, with
/// the additive constant dropped:
///   Q = -(p/2) log|Psi| - sum_i ( (1/2) X_i^T Psi^{-1} X_i
///         - X_i^T Psi^{-1} Lambda E(F|X_i)
///         + (1/2) tr[Lambda^T Psi^{-1} Lambda E(FF^T|X_i)] ).
double expected_loglik(const FactorModel& model, const ReturnsPanel& panel);

/// Same, reusing moments already computed for this model.
double expected_loglik(const FactorModel& model, const ReturnsPanel& panel,
                       const PosteriorMoments& moments);

/// Exact marginal log-likelihood of the panel under
/// X_i ~ N(0, Lambda Lambda^T + Psi), constants included.
double marginal_loglik(const FactorModel& model, const ReturnsPanel& panel);

/// Starting point of a fit: loadings i.i.d. N(0, init_scale^2) drawn in
/// column-major order from the kFitInit stream and then masked; psi set to
/// each row's mean square (clamped to kPsiFloor).
FactorModel initial_model(const ReturnsPanel& panel, const LoadingMask& mask,
                          const FitConfig& config);

/// Full EM fit: alternates e_step, m_step_constrained and m_step_psi for up
/// to max_iterations, recording both trace series after every iteration.
/// Numerical failures are rethrown with the iteration number attached.
std::pair<FactorModel, FitTrace> fit(const ReturnsPanel& panel,
                                     const LoadingMask& mask,
                                     const FitConfig& config);

/// Worker-thread cap for the E-step: the SECTOR_FACTOR_THREADS environment
/// variable when set (clamped to [1, 1024]), otherwise the hardware
/// concurrency. Thread count never changes numerical results.
int engine_threads();

}  // namespace sectorfm
