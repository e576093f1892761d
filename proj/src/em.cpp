#include "sectorfm/em.hpp"

#include <Eigen/Cholesky>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "sectorfm/rng.hpp"

namespace sectorfm {

namespace {

// Column-chunk width of the E-step. Fixed so the reduction order, and hence
// every bit of the output, is independent of the thread count.
constexpr Index kChunkCols = 256;

// Cholesky with one jitter retry (1e-10 * trace/dim added to the diagonal).
// Failure after the retry throws; there is no silent fallback.
Eigen::LLT<Matrix> spd_factor(Matrix a, const std::string& context) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
  a.diagonal().array() += jitter;
  llt.compute(a);
  if (llt.info() == Eigen::Success) return llt;
  throw NumericalError(context +
                       ": matrix not positive definite after jitter retry");
}

// Runs work(0..nchunks-1) on up to engine_threads() workers. Chunk results
// must be stored per chunk by the callable; any worker exception is rethrown
// on the calling thread.
template <typename Work>
void run_chunks(Index nchunks, const Work& work) {
  const Index threads =
      std::min<Index>(static_cast<Index>(engine_threads()), nchunks);
  if (threads <= 1) {
    for (Index c = 0; c < nchunks; ++c) work(c);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (Index t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      try {
        for (Index c = next.fetch_add(1); c < nchunks;
             c = next.fetch_add(1)) {
          work(c);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string pattern_string(const BoolMatrix& pattern, Index row) {
  std::string s;
  s.reserve(static_cast<std::size_t>(pattern.cols()));
  for (Index k = 0; k < pattern.cols(); ++k) {
    s.push_back(pattern(row, k) ? '1' : '0');
  }
  return s;
}

void check_dims(const FactorModel& model, const ReturnsPanel& panel,
                const char* who) {
  if (model.n() != panel.n()) {
    std::ostringstream msg;
    msg << who << ": model has " << model.n() << " stocks but panel has "
        << panel.n();
    throw DataError(msg.str());
  }
}

}  // namespace

int engine_threads() {
  if (const char* env = std::getenv("SECTOR_FACTOR_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0') {
      if (v < 1) return 1;
      if (v > 1024) return 1024;
      return static_cast<int>(v);
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

Matrix factor_projection(const FactorModel& model) {
  auto llt = spd_factor(implied_covariance(model),
                        "factor_projection: Psi + Lambda*Lambda^T");
  return llt.solve(model.lambda).transpose();
}

PosteriorMoments e_step(const FactorModel& model, const ReturnsPanel& panel) {
  check_dims(model, panel, "e_step");
  const Index n = model.n();
  const Index m = model.m();
  const Index p = panel.p();

  auto llt =
      spd_factor(implied_covariance(model), "e_step: Psi + Lambda*Lambda^T");
  const Matrix beta = llt.solve(model.lambda).transpose();  // m x n
  // Posterior covariance I - beta Lambda is shared by all observations.
  const Matrix post_cov = Matrix::Identity(m, m) - beta * model.lambda;

  PosteriorMoments mom;
  mom.ef.resize(m, p);
  const Index nchunks = (p + kChunkCols - 1) / kChunkCols;
  std::vector<Matrix> g_parts(static_cast<std::size_t>(nchunks));
  std::vector<Matrix> a_parts(static_cast<std::size_t>(nchunks));
  run_chunks(nchunks, [&](Index c) {
    const Index lo = c * kChunkCols;
    const Index len = std::min(kChunkCols, p - lo);
    const auto x_chunk = panel.values.middleCols(lo, len);
    mom.ef.middleCols(lo, len).noalias() = beta * x_chunk;
    const auto ef_chunk = mom.ef.middleCols(lo, len);
    g_parts[static_cast<std::size_t>(c)] = ef_chunk * ef_chunk.transpose();
    a_parts[static_cast<std::size_t>(c)] = x_chunk * ef_chunk.transpose();
  });
  Matrix g = Matrix::Zero(m, m);
  Matrix a = Matrix::Zero(n, m);
  for (Index c = 0; c < nchunks; ++c) {
    g += g_parts[static_cast<std::size_t>(c)];
    a += a_parts[static_cast<std::size_t>(c)];
  }
  mom.eff_sum = static_cast<double>(p) * post_cov + g;
  mom.cross_sum = std::move(a);
  return mom;
}

Matrix m_step_unconstrained(const PosteriorMoments& moments) {
  auto llt = spd_factor(moments.eff_sum, "m_step_unconstrained: B");
  // Materialize the solve before transposing so the evaluation order matches
  // the constrained step's scatter exactly.
  const Matrix lambda_t = llt.solve(moments.cross_sum.transpose());
  return lambda_t.transpose();
}

Matrix m_step_constrained(const PosteriorMoments& moments,
                          const LoadingMask& mask) {
  const Index n = mask.n();
  const Index m = mask.m();
  if (moments.cross_sum.rows() != n || moments.cross_sum.cols() != m ||
      moments.eff_sum.rows() != m) {
    throw DataError("m_step_constrained: moments do not match mask shape");
  }
  // Rows sharing a pattern share one restricted factorization.
  std::map<std::string, std::vector<Index>> groups;
  for (Index j = 0; j < n; ++j) {
    groups[pattern_string(mask.pattern, j)].push_back(j);
  }
  Matrix lambda = Matrix::Zero(n, m);
  for (const auto& [key, rows] : groups) {
    std::vector<Index> idx;
    for (Index k = 0; k < m; ++k) {
      if (key[static_cast<std::size_t>(k)] == '1') idx.push_back(k);
    }
    if (idx.empty()) continue;
    const Index d = static_cast<Index>(idx.size());
    Matrix b_sub(d, d);
    for (Index r = 0; r < d; ++r) {
      for (Index c = 0; c < d; ++c) {
        b_sub(r, c) = moments.eff_sum(idx[static_cast<std::size_t>(r)],
                                      idx[static_cast<std::size_t>(c)]);
      }
    }
    Matrix rhs(d, static_cast<Index>(rows.size()));
    for (std::size_t jj = 0; jj < rows.size(); ++jj) {
      for (Index r = 0; r < d; ++r) {
        rhs(r, static_cast<Index>(jj)) =
            moments.cross_sum(rows[jj], idx[static_cast<std::size_t>(r)]);
      }
    }
    Matrix sol;
    try {
      sol = spd_factor(std::move(b_sub), "m_step_constrained: B submatrix")
                .solve(rhs);
    } catch (const NumericalError&) {
      throw NumericalError(
          "m_step_constrained: singular B submatrix for stock row " +
          std::to_string(rows.front()) + " with mask pattern " + key);
    }
    for (std::size_t jj = 0; jj < rows.size(); ++jj) {
      for (Index r = 0; r < d; ++r) {
        lambda(rows[jj], idx[static_cast<std::size_t>(r)]) =
            sol(r, static_cast<Index>(jj));
      }
    }
  }
  return lambda;
}

Vector m_step_psi(const ReturnsPanel& panel, const PosteriorMoments& moments,
                  const Matrix& lambda_new) {
  const Index n = panel.n();
  const Index p = panel.p();
  if (lambda_new.rows() != n || moments.cross_sum.rows() != n ||
      moments.cross_sum.cols() != lambda_new.cols()) {
    throw DataError("m_step_psi: shape mismatch");
  }
  if (p < 1) throw DataError("m_step_psi: empty panel");
  const Vector row_sumsq = panel.values.array().square().rowwise().sum();
  const Vector explained =
      (lambda_new.array() * moments.cross_sum.array()).rowwise().sum();
  Vector psi = (row_sumsq - explained) / static_cast<double>(p);
  return psi.cwiseMax(kPsiFloor);
}

double expected_loglik(const FactorModel& model, const ReturnsPanel& panel,
                       const PosteriorMoments& moments) {
  check_dims(model, panel, "expected_loglik");
  if (model.psi.minCoeff() <= 0.0) {
    throw DataError("expected_loglik: non-positive psi entry");
  }
  const double p = static_cast<double>(panel.p());
  const Vector inv_psi = model.psi.cwiseInverse();
  const Vector row_sumsq = panel.values.array().square().rowwise().sum();
  const double quad = 0.5 * (inv_psi.array() * row_sumsq.array()).sum();
  const Vector lam_a =
      (model.lambda.array() * moments.cross_sum.array()).rowwise().sum();
  const double cross = (inv_psi.array() * lam_a.array()).sum();
  const Matrix weighted =
      model.lambda.transpose() * inv_psi.asDiagonal() * model.lambda;
  const double trace_term = 0.5 * (weighted * moments.eff_sum).trace();
  const double logdet_psi = model.psi.array().log().sum();
  return -0.5 * p * logdet_psi - quad + cross - trace_term;
}

double expected_loglik(const FactorModel& model, const ReturnsPanel& panel) {
  if (model.psi.size() == 0 || model.psi.minCoeff() <= 0.0) {
    throw DataError("expected_loglik: non-positive psi entry");
  }
  return expected_loglik(model, panel, e_step(model, panel));
}

double marginal_loglik(const FactorModel& model, const ReturnsPanel& panel) {
  check_dims(model, panel, "marginal_loglik");
  const double n = static_cast<double>(panel.n());
  const double p = static_cast<double>(panel.p());
  auto llt = spd_factor(implied_covariance(model),
                        "marginal_loglik: Psi + Lambda*Lambda^T");
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const Matrix solved = llt.solve(panel.values);
  const double quad = (panel.values.array() * solved.array()).sum();
  constexpr double log_two_pi = 1.8378770664093454836;
  return -0.5 * p * (n * log_two_pi + logdet) - 0.5 * quad;
}

FactorModel initial_model(const ReturnsPanel& panel, const LoadingMask& mask,
                          const FitConfig& config) {
  const Index n = panel.n();
  const Index m = mask.m();
  if (mask.n() != n) throw DataError("initial_model: mask/panel mismatch");
  RandomStream rs(config.seed, RngStream::kFitInit);
  Matrix lambda(n, m);
  for (Index k = 0; k < m; ++k) {
    for (Index j = 0; j < n; ++j) {
      lambda(j, k) = config.init_scale * rs.normal();
    }
  }
  FactorModel model;
  model.lambda = apply_mask(lambda, mask);
  model.psi = (panel.values.array().square().rowwise().sum() /
               static_cast<double>(panel.p()))
                  .cwiseMax(kPsiFloor);
  model.mask = mask;
  model.factor_labels = mask.sector_structured
                            ? sector_factor_labels(static_cast<int>(m))
                            : generic_factor_labels(static_cast<int>(m));
  return model;
}

std::pair<FactorModel, FitTrace> fit(const ReturnsPanel& panel,
                                     const LoadingMask& mask,
                                     const FitConfig& config) {
  if (config.max_iterations < 1) {
    throw DataError("fit: max_iterations must be >= 1");
  }
  if (config.rel_tol && *config.rel_tol <= 0.0) {
    throw DataError("fit: rel_tol must be positive when set");
  }
  if (config.init_scale <= 0.0) {
    throw DataError("fit: init_scale must be positive");
  }
  validate(panel);
  if (panel.n() < 1 || panel.p() < 2) {
    throw DataError("fit: panel needs at least 1 stock and 2 days");
  }
  if (mask.n() != panel.n()) {
    throw DataError("fit: mask rows do not match panel stocks");
  }
  validate(mask);

  FactorModel model = initial_model(panel, mask, config);
  FitTrace trace;
  PosteriorMoments moments = e_step(model, panel);
  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    try {
      model.lambda = m_step_constrained(moments, mask);
      model.psi = m_step_psi(panel, moments, model.lambda);
      moments = e_step(model, panel);
      trace.expected_loglik_per_iter.push_back(
          expected_loglik(model, panel, moments));
      trace.loglik_per_iter.push_back(marginal_loglik(model, panel));
    } catch (const NumericalError& err) {
      throw NumericalError("fit: iteration " + std::to_string(iter) + ": " +
                           err.what());
    }
    trace.iterations_run = iter;
    if (config.rel_tol && trace.loglik_per_iter.size() >= 2) {
      const double prev = trace.loglik_per_iter.end()[-2];
      const double cur = trace.loglik_per_iter.back();
      if (std::abs(cur - prev) <=
          *config.rel_tol * std::max(1.0, std::abs(prev))) {
        trace.converged_by_tol = true;
        break;
      }
    }
  }
  return {std::move(model), std::move(trace)};
}

}  // namespace sectorfm
