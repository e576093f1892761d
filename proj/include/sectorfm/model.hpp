#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <string>
#include <vector>

#include "sectorfm/errors.hpp"

namespace sectorfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;
using Index = Eigen::Index;

/// Number of sector factors; columns 0..10 of every loading matrix.
inline constexpr int kNumSectors = 11;

/// Sector code of stocks that belong to none of the 11 sectors.
inline constexpr int kUnclassified = 0;

/// Lower bound on unique variances. Keeps EM away from zero-variance
/// (Heywood) collapse and the implied covariance positive definite.
inline constexpr double kPsiFloor = 1e-8;

/// Sector labels; entry i names sector code i+1.
const std::array<std::string, kNumSectors>& sector_names();

/// Name for a code in {0..11}; code 0 maps to "UNCLASSIFIED".
const std::string& sector_name(int code);

/// Panel of daily log returns: n stocks (rows) observed on p days (columns).
struct ReturnsPanel {
  std::vector<std::string> stock_ids;  // n symbols
  std::vector<std::string> dates;      // p ISO-8601 dates, strictly increasing
  Matrix values;                       // n x p natural-log daily returns
  bool demeaned = false;               // true once every row has mean zero

  Index n() const { return values.rows(); }
  Index p() const { return values.cols(); }
};

/// Assignment of each stock to one sector code (1..11) or kUnclassified.
struct SectorMap {
  std::map<std::string, int> assignments;

  /// Code for a stock id; throws DataError if the stock is unknown.
  int code_of(const std::string& stock_id) const;

  bool contains(const std::string& stock_id) const {
    return assignments.count(stock_id) != 0;
  }
};

/// Boolean sparsity pattern of permitted nonzero loadings. The first 11
/// columns are sector factors (a stock loads on at most one), the trailing
/// m-11 columns are market factors and load on every stock.
struct LoadingMask {
  BoolMatrix pattern;  // n x m
  int n_sector_factors = kNumSectors;
  int n_market_factors = 0;  // m - 11, at least 1
  /// True when the sector block encodes real memberships (built by
  /// build_mask); false for the all-true mask of the standard model.
  bool sector_structured = true;

  Index n() const { return pattern.rows(); }
  Index m() const { return pattern.cols(); }
};

/// Gaussian factor model X = Lambda F + eps with F ~ N(0, I) and
/// eps ~ N(0, diag(psi)); implied covariance Lambda Lambda^T + diag(psi).
struct FactorModel {
  Matrix lambda;                           // n x m loadings
  Vector psi;                              // n unique variances, >= kPsiFloor
  LoadingMask mask;                        // lambda is exactly 0 off-pattern
  std::vector<std::string> factor_labels;  // m labels

  Index n() const { return lambda.rows(); }
  Index m() const { return lambda.cols(); }
};

/// Posterior factor moments accumulated over a panel.
struct PosteriorMoments {
  Matrix ef;         // m x p, column i = E(F | X_i)
  Matrix eff_sum;    // m x m, B = sum_i E(F F^T | X_i)
  Matrix cross_sum;  // n x m, A = sum_i X_i E(F | X_i)^T
};

/// Lambda Lambda^T + diag(psi), exactly symmetric.
Matrix implied_covariance(const FactorModel& model);

/// Sector mask for the given universe: market columns all true, sector
/// column code-1 true for members of that sector. Requires m >= 12 and every
/// stock id present in `sectors`.
LoadingMask build_mask(const SectorMap& sectors,
                       const std::vector<std::string>& stock_ids, int m);

/// All-true mask of the standard (unconstrained) factor model. m >= 12.
LoadingMask all_true_mask(Index n, int m);

/// Zeroes entries of `lambda` wherever the pattern is false; idempotent.
Matrix apply_mask(const Matrix& lambda, const LoadingMask& mask);

/// The 11 sector names followed by "MKT1".."MKT<m-11>".
std::vector<std::string> sector_factor_labels(int m);

/// "F1".."F<m>", used for the standard model where columns have no identity.
std::vector<std::string> generic_factor_labels(int m);

void validate(const ReturnsPanel& panel);
void validate(const LoadingMask& mask);
void validate(const FactorModel& model);
void validate(const PosteriorMoments& moments);

}  // namespace sectorfm
