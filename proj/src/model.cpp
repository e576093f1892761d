#include "sectorfm/model.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <sstream>

namespace sectorfm {

const std::array<std::string, kNumSectors>& sector_names() {
  static const std::array<std::string, kNumSectors> names = {
      "FINANCE",          "HEALTH CARE",     "CONSUMER NON-DURABLES",
      "CONSUMER SERVICES", "CONSUMER DURABLES", "ENERGY",
      "TRANSPORTATION",   "TECHNOLOGY",      "BASIC INDUSTRIES",
      "CAPITAL GOODS",    "PUBLIC UTILITIES"};
  return names;
}

const std::string& sector_name(int code) {
  static const std::string unclassified = "UNCLASSIFIED";
  if (code == kUnclassified) return unclassified;
  if (code < 1 || code > kNumSectors) {
    throw DataError("sector code out of range: " + std::to_string(code));
  }
  return sector_names()[static_cast<std::size_t>(code - 1)];
}

int SectorMap::code_of(const std::string& stock_id) const {
  auto it = assignments.find(stock_id);
  if (it == assignments.end()) {
    throw DataError("stock not present in sector map: " + stock_id);
  }
  return it->second;
}

Matrix implied_covariance(const FactorModel& model) {
  const Index n = model.n();
  Matrix cov = Matrix::Zero(n, n);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(model.lambda);
  cov.triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  cov.diagonal() += model.psi;
  return cov;
}

LoadingMask build_mask(const SectorMap& sectors,
                       const std::vector<std::string>& stock_ids, int m) {
  if (m < 12) {
    throw DataError("build_mask: m must be at least 12 (11 sector factors "
                    "plus a market block), got " + std::to_string(m));
  }
  const Index n = static_cast<Index>(stock_ids.size());
  LoadingMask mask;
  mask.pattern = BoolMatrix::Constant(n, m, false);
  mask.n_market_factors = m - kNumSectors;
  mask.sector_structured = true;
  for (Index j = 0; j < n; ++j) {
    const int code = sectors.code_of(stock_ids[static_cast<std::size_t>(j)]);
    if (code < 0 || code > kNumSectors) {
      throw DataError("build_mask: invalid sector code " +
                      std::to_string(code) + " for stock " +
                      stock_ids[static_cast<std::size_t>(j)]);
    }
    if (code != kUnclassified) mask.pattern(j, code - 1) = true;
    for (int k = kNumSectors; k < m; ++k) mask.pattern(j, k) = true;
  }
  return mask;
}

LoadingMask all_true_mask(Index n, int m) {
  if (m < 12) {
    throw DataError("all_true_mask: m must be at least 12, got " +
                    std::to_string(m));
  }
  LoadingMask mask;
  mask.pattern = BoolMatrix::Constant(n, m, true);
  mask.n_market_factors = m - kNumSectors;
  mask.sector_structured = false;
  return mask;
}

Matrix apply_mask(const Matrix& lambda, const LoadingMask& mask) {
  if (lambda.rows() != mask.pattern.rows() ||
      lambda.cols() != mask.pattern.cols()) {
    std::ostringstream msg;
    msg << "apply_mask: shape mismatch, lambda is " << lambda.rows() << "x"
        << lambda.cols() << " but mask is " << mask.pattern.rows() << "x"
        << mask.pattern.cols();
    throw DataError(msg.str());
  }
  Matrix out = Matrix::Zero(lambda.rows(), lambda.cols());
  for (Index k = 0; k < lambda.cols(); ++k) {
    for (Index j = 0; j < lambda.rows(); ++j) {
      if (mask.pattern(j, k)) out(j, k) = lambda(j, k);
    }
  }
  return out;
}

std::vector<std::string> sector_factor_labels(int m) {
  if (m < 12) throw DataError("factor labels require m >= 12");
  std::vector<std::string> labels(sector_names().begin(),
                                  sector_names().end());
  for (int k = kNumSectors; k < m; ++k) {
    labels.push_back("MKT" + std::to_string(k - kNumSectors + 1));
  }
  return labels;
}

std::vector<std::string> generic_factor_labels(int m) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(m));
  for (int k = 1; k <= m; ++k) labels.push_back("F" + std::to_string(k));
  return labels;
}

void validate(const ReturnsPanel& panel) {
  const Index n = panel.values.rows();
  const Index p = panel.values.cols();
  if (static_cast<Index>(panel.stock_ids.size()) != n) {
    throw DataError("panel: stock_ids size does not match row count");
  }
  if (static_cast<Index>(panel.dates.size()) != p) {
    throw DataError("panel: dates size does not match column count");
  }
  for (std::size_t i = 1; i < panel.dates.size(); ++i) {
    if (!(panel.dates[i - 1] < panel.dates[i])) {
      throw DataError("panel: dates not strictly increasing at " +
                      panel.dates[i]);
    }
  }
  if (!panel.values.allFinite()) {
    throw DataError("panel: non-finite return value");
  }
  if (panel.demeaned) {
    const double tol = 1e-9 * static_cast<double>(p);
    for (Index j = 0; j < n; ++j) {
      if (std::abs(panel.values.row(j).sum()) > tol) {
        throw DataError("panel: flagged demeaned but row " +
                        panel.stock_ids[static_cast<std::size_t>(j)] +
                        " does not sum to zero");
      }
    }
  }
}

void validate(const LoadingMask& mask) {
  const Index m = mask.m();
  if (m < 12) throw DataError("mask: m must be at least 12");
  if (mask.n_sector_factors != kNumSectors) {
    throw DataError("mask: sector factor count must be 11");
  }
  if (mask.n_market_factors != static_cast<int>(m) - kNumSectors ||
      mask.n_market_factors < 1) {
    throw DataError("mask: market factor count must equal m - 11 and be >= 1");
  }
  for (Index j = 0; j < mask.n(); ++j) {
    for (Index k = kNumSectors; k < m; ++k) {
      if (!mask.pattern(j, k)) {
        throw DataError("mask: market column " + std::to_string(k + 1) +
                        " must load on every stock");
      }
    }
    if (mask.sector_structured) {
      int sector_hits = 0;
      for (Index k = 0; k < kNumSectors; ++k) {
        if (mask.pattern(j, k)) ++sector_hits;
      }
      if (sector_hits > 1) {
        throw DataError("mask: row " + std::to_string(j) +
                        " loads on more than one sector");
      }
    }
  }
}

void validate(const FactorModel& model) {
  const Index n = model.n();
  const Index m = model.m();
  if (model.psi.size() != n) {
    throw DataError("model: psi size does not match lambda rows");
  }
  if (model.mask.pattern.rows() != n || model.mask.pattern.cols() != m) {
    throw DataError("model: mask shape does not match lambda");
  }
  if (static_cast<Index>(model.factor_labels.size()) != m) {
    throw DataError("model: factor label count does not match m");
  }
  validate(model.mask);
  if (!model.lambda.allFinite()) {
    throw DataError("model: non-finite loading");
  }
  for (Index j = 0; j < n; ++j) {
    if (!std::isfinite(model.psi(j)) || model.psi(j) < kPsiFloor) {
      throw DataError("model: psi entry below floor or non-finite at row " +
                      std::to_string(j));
    }
    for (Index k = 0; k < m; ++k) {
      if (!model.mask.pattern(j, k) && model.lambda(j, k) != 0.0) {
        throw DataError("model: nonzero loading outside mask at (" +
                        std::to_string(j) + "," + std::to_string(k) + ")");
      }
    }
  }
  Eigen::LLT<Matrix> llt(implied_covariance(model));
  if (llt.info() != Eigen::Success) {
    throw DataError("model: implied covariance not positive definite");
  }
}

void validate(const PosteriorMoments& moments) {
  const Index m = moments.eff_sum.rows();
  if (moments.eff_sum.cols() != m) {
    throw DataError("moments: eff_sum not square");
  }
  if (moments.cross_sum.cols() != m || moments.ef.rows() != m) {
    throw DataError("moments: factor dimension mismatch");
  }
  if (!moments.ef.allFinite() || !moments.eff_sum.allFinite() ||
      !moments.cross_sum.allFinite()) {
    throw DataError("moments: non-finite entry");
  }
  Eigen::LLT<Matrix> llt(moments.eff_sum);
  if (llt.info() != Eigen::Success) {
    throw DataError("moments: eff_sum not positive definite");
  }
}

}  // namespace sectorfm
