#pragma once

#include "needlets/filter_bank.hpp"
#include "needlets/needlet_transform.hpp"
#include "needlets/random_field.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace needlets {

inline constexpr int kMaxHermiteOrder = 30;

/// Probabilists' Hermite polynomial He_q(x) by H_{q+1} = x H_q - q H_{q-1}.
/// Throws InvalidArgument unless 0 <= q <= 30.
double hermite(int q, double x);

/// Weights w_{uq} of the polynomial functionals sum_q w_{uq} H_q, one row
/// per statistic u = 1..U, column q - 1 for order q = 1..Q.
class HermiteWeights {
 public:
  /// Throws InvalidArgument for an empty matrix, Q > 30, an all-zero row or
  /// linearly dependent rows.
  explicit HermiteWeights(Eigen::MatrixXd w);

  int statistics() const noexcept { return static_cast<int>(w_.rows()); }
  int max_order() const noexcept { return static_cast<int>(w_.cols()); }
  /// w_{uq} with 1-based u and q.
  double operator()(int u, int q) const { return w_(u - 1, q - 1); }
  const Eigen::MatrixXd& matrix() const noexcept { return w_; }

 private:
  Eigen::MatrixXd w_;
};

/// U = 3, Q = 4: H_2; H_3 + 3 H_1; H_4 + 6 H_2. These give the power-spectrum,
/// skewness and kurtosis statistics (sum of b^2 - 1, of b^3, of b^4 - 3).
HermiteWeights gof_presets();

/// h_{u,N_j} = (1/N_j) sum_k sum_q w_{uq} H_q(beta_hat_k), u 1-based.
/// Throws PreconditionError when the coefficients are not normalized.
double h_statistic(const NeedletCoefficients& coeffs, const HermiteWeights& weights, int u);
/// All U statistics in one pass.
Eigen::VectorXd h_vector(const NeedletCoefficients& coeffs, const HermiteWeights& weights);

/// Largest accepted condition number of Omega_j and smallest eigenvalue.
inline constexpr double kMaxOmegaCondition = 1e8;
inline constexpr double kMinOmegaEigenvalue = 1e-12;

/// Omega_uv = (1/N_j^2) sum_q q! w_{uq} w_{vq} S_q with S_q = sum_{k,k'} gamma^q.
/// Throws AssumptionViolation when the result is not safely positive definite.
Eigen::MatrixXd omega_matrix(const GammaPowerSums& sums, const HermiteWeights& weights);
/// Same rule from a dense correlation matrix (symmetric, unit diagonal).
Eigen::MatrixXd omega_matrix(const Eigen::MatrixXd& gamma, const HermiteWeights& weights);

/// Throws AssumptionViolation if omega is not symmetric positive definite
/// with condition number <= kMaxOmegaCondition.
void check_omega(const Eigen::MatrixXd& omega);

/// Symmetric inverse square root by eigendecomposition; no regularization.
Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& omega);

/// W_J(r) at r = 0, 1/m, ..., 1: W(i/m) = m^{-1/2} sum_{s <= i} v_s.
struct WPath {
  std::vector<double> r;
  std::vector<Eigen::VectorXd> values;  ///< values[0] is the zero vector
  int scales() const noexcept { return static_cast<int>(r.size()) - 1; }
  /// The u-th coordinate (0-based) along the path.
  std::vector<double> component(int u) const;
};

/// `scales` must be exactly the even ladder 2, 4, ..., 2m; throws
/// InvalidArgument otherwise or when vector lengths differ.
WPath wj_path(std::span<const int> scales, std::span<const Eigen::VectorXd> standardized);

/// P(sup_{[0,1]} |W| > t) for standard Brownian motion from the reflection
/// series, summed until terms drop below 1e-12. Returns 1 for t <= 0.
double brownian_sup_tail(double t);

/// Root t of brownian_sup_tail(t) = level, level in (0, 1).
double ks_threshold(double level);

struct KsResult {
  double statistic = 0.0;  ///< sup_r |W(r)| over the path points
  double p_value = 1.0;
};

KsResult ks_test(std::span<const double> path);

/// One-sample Kolmogorov-Smirnov test of `sample` against N(0, 1), with
/// the asymptotic Kolmogorov distribution (Stephens' small-sample scaling).
KsResult ks_normal_test(std::span<const double> sample);

/// Sample moments of the h statistics over independent realizations.
struct MomentSummary {
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd samples;          ///< replicates x U
  Eigen::VectorXd mean;
  Eigen::VectorXd mean_se;
  Eigen::MatrixXd covariance;       ///< 1/(R-1) normalization
  Eigen::MatrixXd covariance_se;    ///< spread of centered products / sqrt(R)
  Eigen::VectorXd skewness;
  Eigen::VectorXd excess_kurtosis;
};

/// Summaries of an R x U sample matrix.
MomentSummary summarize_samples(Eigen::MatrixXd samples);

/// Simulates `replicates` fields, forms normalized scale-j coefficients and
/// the h statistics. Replicate r uses seed derive_seed(seed, r), so results
/// do not depend on `workers`. Requires replicates >= 100.
MomentSummary mc_moment_oracle(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                               const HermiteWeights& weights, std::size_t replicates, std::uint64_t seed,
                               int workers = 1);

/// Per-scale block of a goodness-of-fit report.
struct ScaleStatistics {
  int j = 0;
  Eigen::VectorXd h;
  Eigen::MatrixXd omega;
  Eigen::VectorXd standardized;  ///< omega^{-1/2} h
};

struct StatisticsReport {
  std::vector<ScaleStatistics> scales;
  WPath path;
  int component = 0;  ///< 0-based coordinate of W tested
  KsResult ks;
  double level = 0.05;
  double threshold = 0.0;
  bool reject = false;
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

/// The goodness-of-fit test of a Gaussian model on the even scale ladder:
/// h vectors per scale, standardized by the model Omega_j^{-1/2}, summed
/// into W_J and tested by sup |W| on one coordinate. Model quantities
/// (grids, variances, Omega_j) are computed once at construction.
class GofPipeline {
 public:
  GofPipeline(PowerSpectrum spectrum, FilterProfile profile, std::vector<int> scales, HermiteWeights weights,
              int component = 0, int workers = 1);

  const std::vector<int>& scales() const noexcept { return scales_; }
  const std::vector<Eigen::MatrixXd>& omegas() const noexcept { return omegas_; }
  /// Highest harmonic degree a field must carry.
  int required_l_max() const noexcept { return required_l_max_; }

  StatisticsReport run(const HarmonicCoefficients& alm, double level) const;

 private:
  PowerSpectrum spectrum_;
  FilterProfile profile_;
  std::vector<int> scales_;
  HermiteWeights weights_;
  int component_;
  int required_l_max_ = 0;
  std::vector<CubatureGrid> grids_;
  std::vector<std::vector<double>> variances_;
  std::vector<Eigen::MatrixXd> omegas_;
  std::vector<Eigen::MatrixXd> whiteners_;
};

}  // namespace needlets
