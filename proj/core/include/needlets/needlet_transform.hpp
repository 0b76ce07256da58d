#pragma once

#include "needlets/filter_bank.hpp"
#include "needlets/harmonics.hpp"
#include "needlets/random_field.hpp"
#include "needlets/sphere_geom.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace needlets {

/// Needlet coefficients of one field at scale j, indexed like grid.points().
struct NeedletCoefficients {
  int j = 0;
  CubatureGrid grid;
  std::vector<double> beta;
  /// Model variance E[beta_k^2]; empty until normalize() is called.
  std::vector<double> sigma2;
  /// beta_k / sqrt(sigma2_k); empty until normalize() is called.
  std::vector<double> beta_hat;

  /// Stores sigma2 and fills beta_hat. Sizes must match.
  void normalize(std::vector<double> variance);
};

/// Coefficient vectors of the scale-j kernels as Legendre-kernel series:
/// M_j(t) = sum_l b(l/B^j) L_l(t) and Lambda_j(t) = sum_l b^2(l/B^j) L_l(t).
class ScaleKernel {
 public:
  ScaleKernel(const FilterProfile& profile, int j);

  int j() const noexcept { return j_; }
  /// Largest degree with a possibly nonzero window weight.
  int top_degree() const noexcept { return static_cast<int>(b_.size()) - 1; }
  std::span<const double> window() const noexcept { return b_; }
  std::span<const double> window_squared() const noexcept { return b2_; }

  double m_kernel(double t) const { return kernel_series(b_, t); }
  double lambda_kernel(double t) const { return kernel_series(b2_, t); }

 private:
  int j_;
  std::vector<double> b_;
  std::vector<double> b2_;
};

/// Largest l with b(l/B^j) possibly nonzero (l < B^{j+1}).
int window_top_degree(const FilterProfile& profile, int j);

/// psi_{j,k}(x) = sqrt(lambda_k) sum_l b(l/B^j) L_l(<x, xi_k>).
double psi_eval(const FilterProfile& profile, int j, const CubatureGrid& grid, std::size_t k,
                const SpherePoint& x);

/// beta_{j,k} = sqrt(lambda_k) sum_l b(l/B^j) sum_m a_lm Y_lm(xi_k), evaluated
/// ring by ring on `grid`. Throws PreconditionError when coeffs.l_max() does
/// not reach the top of the window.
NeedletCoefficients needlet_coeffs(const HarmonicCoefficients& coeffs, const FilterProfile& profile,
                                   int j, const CubatureGrid& grid);

/// Window power sum_l b^2(l/B^j) C_l (2l+1)/(4 pi). Throws DegenerateSpectrum
/// if it is zero and PreconditionError if the spectrum stops short of the window.
double window_power(const PowerSpectrum& spectrum, const FilterProfile& profile, int j);

/// E[beta_{j,k}^2] = lambda_k * window_power for every grid point.
std::vector<double> coeff_variance(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                   const CubatureGrid& grid);

/// Correlation of beta_{j,k}, beta_{j,k'} as a function of t = <xi_k, xi_k'>:
/// sum_l b^2 C_l L_l(t) / sum_l b^2 C_l L_l(1).
class ScaleCorrelation {
 public:
  ScaleCorrelation(const PowerSpectrum& spectrum, const FilterProfile& profile, int j);
  double operator()(double t) const { return kernel_series(coeffs_, t) / norm_; }

 private:
  std::vector<double> coeffs_;
  double norm_;
};

double analytic_correlation(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                            const CubatureGrid& grid, std::size_t k, std::size_t k2);

/// Dense N_j^2 x N_j^2 correlation matrix gamma. Throws ResourceLimit above
/// `max_points` grid points.
Eigen::MatrixXd correlation_matrix(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                   const CubatureGrid& grid, std::size_t max_points = 4096);

/// E[beta_{j,k} beta_{j',k'}] = sqrt(lambda lambda') sum_l b(l/B^j) b(l/B^j') C_l L_l(<xi, xi'>).
/// The window product vanishes identically when |j - j'| >= 2.
double cross_scale_covariance(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                              const CubatureGrid& grid_j, std::size_t k, int j2,
                              const CubatureGrid& grid_j2, std::size_t k2);

/// Sums S_q = sum_{k,k'} gamma_{k,k'}^q, q = 1..max_power, over all ordered
/// pairs of grid points. Exploits the product-grid symmetry: the pair
/// correlation depends only on (ring, ring', longitude offset), so every
/// pair is enumerated through its class with the exact multiplicity.
struct GammaPowerSums {
  double point_count = 0.0;     ///< N_j^2
  std::vector<double> sums;     ///< sums[q-1] = S_q
};

GammaPowerSums gamma_power_sums(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                const CubatureGrid& grid, int max_power, int workers = 1);

/// Same sums from an explicit correlation matrix.
GammaPowerSums gamma_power_sums(const Eigen::MatrixXd& gamma, int max_power);

struct DecayRow {
  double distance = 0.0;
  double abs_cor = 0.0;
  double weighted = 0.0;  ///< |Cor| (1 + B^j d)^M
};

struct DecayDiagnostic {
  int j = 0;
  double exponent = 0.0;
  std::vector<DecayRow> rows;    ///< distance-sorted, capped subsample
  double max_weighted = 0.0;     ///< over every pair, not only the rows
  double argmax_distance = 0.0;
  std::size_t pair_classes = 0;  ///< distinct (ring, ring', offset) classes examined
};

inline constexpr std::size_t kDefaultPairCap = 200000;

/// Empirical localization constant: max over all pairs of |Cor| (1 + B^j d)^M.
/// The table keeps at most `row_cap` rows, evenly spaced in distance order
/// (the first and the maximizing rows are always kept).
DecayDiagnostic decay_diagnostic(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                 const CubatureGrid& grid, double exponent,
                                 std::size_t row_cap = kDefaultPairCap, int workers = 1);

/// Lambda_j(x, y) = sum_l b^2(l/B^j) L_l(<x,y>).
double lambda_kernel(const FilterProfile& profile, int j, const SpherePoint& x, const SpherePoint& y);
/// M_j(x, y) = sum_l b(l/B^j) L_l(<x,y>).
double m_kernel(const FilterProfile& profile, int j, const SpherePoint& x, const SpherePoint& y);

/// Cubature form of <T, psi_{j,k}>: sum_i w_i T(x_i) psi_{j,k}(x_i) over
/// `field_grid`. Exact when field degree + top window degree <= field_grid.degree().
double cubature_inner_product(std::span<const double> field, const CubatureGrid& field_grid,
                              const FilterProfile& profile, int j, const CubatureGrid& grid_j,
                              std::size_t k);

/// Monte Carlo cross-scale correlation between scales j and j2: each point
/// of the finer grid is paired with the nearest point of the coarser grid,
/// and the normalized coefficients are pooled over points and replicates.
struct CrossScaleEstimate {
  int j = 0;
  int j2 = 0;
  std::size_t replicates = 0;
  double correlation = 0.0;
  double standard_error = 0.0;  ///< across-replicate spread of per-replicate correlations
};

CrossScaleEstimate mc_cross_scale_correlation(const PowerSpectrum& spectrum,
                                              const FilterProfile& profile, int j, int j2,
                                              std::size_t replicates, std::uint64_t seed,
                                              int workers = 1);

/// Columns j, k, theta, phi, beta, sigma2, beta_hat.
void write_needlet_coefficients(std::ostream& out, std::span<const NeedletCoefficients> scales);
/// Columns d_radians, abs_cor, weighted_product.
void write_decay_table(std::ostream& out, const DecayDiagnostic& diagnostic);

}  // namespace needlets
