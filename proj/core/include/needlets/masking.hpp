#pragma once

#include "needlets/filter_bank.hpp"
#include "needlets/needlet_transform.hpp"
#include "needlets/random_field.hpp"
#include "needlets/sphere_geom.hpp"

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace needlets {

/// Colatitude band theta_lo <= theta <= theta_hi (radians).
struct MaskBand {
  double theta_lo = 0.0;
  double theta_hi = 0.0;
};

/// Closed geodesic disc around `center`.
struct MaskDisc {
  SpherePoint center;
  double radius = 0.0;
};

/// Unobserved region G as a union of bands and discs. An empty mask hides
/// nothing; full_sky() hides everything.
class SkyMask {
 public:
  SkyMask() = default;
  static SkyMask full_sky();

  /// Throws InvalidArgument unless 0 <= lo <= hi <= pi.
  SkyMask& add_band(double theta_lo, double theta_hi);
  /// Throws InvalidArgument unless radius >= 0.
  SkyMask& add_disc(const SpherePoint& center, double radius);

  const std::vector<MaskBand>& bands() const noexcept { return bands_; }
  const std::vector<MaskDisc>& discs() const noexcept { return discs_; }
  bool empty() const noexcept { return bands_.empty() && discs_.empty(); }

  bool contains(const SpherePoint& p) const;

 private:
  std::vector<MaskBand> bands_;
  std::vector<MaskDisc> discs_;
};

/// One flag per grid point, 1 where the point lies in G.
std::vector<std::uint8_t> rasterize(const SkyMask& mask, const CubatureGrid& grid);

/// Cubature estimate of the masked area fraction |G| / 4 pi.
double masked_fraction(std::span<const std::uint8_t> raster, const CubatureGrid& grid);

/// T~ = T + V with V = -T 1_G: zero on G, unchanged elsewhere. Throws
/// InvalidArgument when the sizes differ.
std::vector<double> apply_mask(std::span<const double> field, std::span<const std::uint8_t> raster);

/// Masked coefficients: the masked samples on `field_grid` are analyzed back
/// to harmonics up to the top of the scale-j window, then mapped to the
/// points of `grid_j` through the harmonic formula. Requires
/// field_grid.degree() >= 2 * window_top_degree(profile, j).
NeedletCoefficients masked_coeffs(std::span<const double> masked_field, const CubatureGrid& field_grid,
                                  const FilterProfile& profile, int j, const CubatureGrid& grid_j);

/// Accumulates (beta - beta~)^2 over replicates.
class DiscrepancyAccumulator {
 public:
  explicit DiscrepancyAccumulator(std::size_t points);

  void add(std::span<const double> beta, std::span<const double> beta_tilde);
  std::size_t replicates() const noexcept { return count_; }

  struct Result {
    std::vector<double> d;   ///< E[(beta - beta~)^2] / E[beta^2]
    std::vector<double> se;  ///< standard error of each d
  };
  /// Throws InvalidArgument with fewer than 50 replicates and
  /// DegenerateSpectrum if some sigma2 is not positive.
  Result result(std::span<const double> sigma2) const;

 private:
  std::size_t count_ = 0;
  std::vector<double> sum_;
  std::vector<double> sum_sq_;
};

inline constexpr std::size_t kMinDiscrepancyReplicates = 50;

/// C_M 4 pi sqrt(2 V*) B^j / (1 + B^j eps)^M. Throws InvalidArgument unless
/// V* >= 0, eps > 0 and M >= 1.
double robustness_bound(double c_m, double v_star, double bandwidth, int j, double eps, double exponent);
/// The same bound relative to the coefficient scale, bound / sqrt(E beta^2).
double relative_robustness_bound(double c_m, double v_star, double bandwidth, int j, double eps, double exponent,
                            double sigma2);

/// Geodesic distance from each point of `grid_j` to the nearest masked
/// point of `field_grid` (0 for points inside G; +inf for an empty mask).
std::vector<double> clearance(const SkyMask& mask, std::span<const std::uint8_t> raster,
                              const CubatureGrid& field_grid, const CubatureGrid& grid_j);

/// Spatial scale pi / B^j of a scale-j needlet.
double needlet_width(double bandwidth, int j);

struct ClearanceBin {
  double lo = 0.0;
  double hi = 0.0;  ///< +inf for the tail bin
  std::size_t points = 0;
  double mean_d = 0.0;
  double se = 0.0;  ///< spread of replicate-level bin means / sqrt(R)
};

/// True when the nonempty bins are nonincreasing in mean D apart from at
/// most one inversion, which must be smaller than the combined SE.
bool nonincreasing_within_se(std::span<const ClearanceBin> bins);

struct MaskExperimentConfig {
  int j = 5;
  std::size_t replicates = 200;
  std::uint64_t seed = 0;
  /// Highest degree of the simulated field; -1 means the top of the window.
  int field_l_max = -1;
  double flag_threshold = 0.1;
  double exponent = 4.0;  ///< M of the bound being calibrated
  /// Clearance bins of one needlet width up to this many widths, then a tail.
  int bins = 8;
  int workers = 1;
};

struct DiscrepancyMap {
  int j = 0;
  std::size_t replicates = 0;
  CubatureGrid grid;
  std::vector<double> d{};
  std::vector<double> se{};
  std::vector<double> rms_difference{};  ///< sqrt(E (beta - beta~)^2)
  std::vector<double> sigma2{};
  std::vector<double> clearance{};
  std::vector<std::uint8_t> flagged{};
  double flag_threshold = 0.1;
  double width = 0.0;
  std::vector<ClearanceBin> bins{};
  double masked_fraction = 0.0;
  double v_star = 0.0;        ///< model sup E V^2 over the masked set
  double mc_v_star = 0.0;     ///< sampled sup of the mean of V^2
  double mc_t_star = 0.0;     ///< sampled sup of the mean of T^2
  double exponent = 4.0;
  /// Smallest C_M making robustness_bound dominate the measured rms difference at
  /// every point with positive clearance (0 if there is none).
  double calibrated_cm = 0.0;

  std::size_t flagged_count() const;
  /// Fraction of flagged points whose clearance is at most `widths` needlet widths.
  double flagged_fraction_within(double widths) const;
};

/// Simulates fields, masks them and measures D per point of the scale-j grid.
/// Replicate r is seeded with derive_seed(seed, r); output is independent of
/// the worker count.
DiscrepancyMap run_mask_experiment(const PowerSpectrum& spectrum, const FilterProfile& profile,
                                   const SkyMask& mask, const MaskExperimentConfig& config);

/// Text format, one region per line: "band <theta_lo> <theta_hi>" or
/// "disc <theta> <phi> <radius>", radians; '#' comments.
void write_mask(std::ostream& out, const SkyMask& mask);
SkyMask read_mask(std::istream& in);

/// Columns theta, phi, D, SE, clearance, flagged.
void write_discrepancy_map(std::ostream& out, const DiscrepancyMap& map);

}  // namespace needlets
