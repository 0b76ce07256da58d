#pragma once

#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

namespace needlets {

/// Samples of the normalized integrated bump
///
///   psi(u) = int_{-1}^{u} f / int_{-1}^{1} f,   f(t) = exp(-1 / (1 - t^2)),
///
/// on `resolution` equispaced knots of [-1, 1]. Each knot interval is
/// integrated with Simpson's rule (midpoint evaluated exactly), so the table
/// is nondecreasing and symmetric about u = 0 by construction. First entry is
/// exactly 0, last exactly 1.
///
/// Throws InvalidArgument when resolution < FilterProfile::kMinResolution.
std::vector<double> build_bump_table(int resolution);

/// The Littlewood-Paley window pair (phi, b) for a bandwidth B > 1.
///
/// phi is 1 on [0, 1/B], 0 on [1, inf) and on [1/B, 1] follows the bump
/// table through the linear map xi -> 1 - 2 (xi - 1/B) / (1 - 1/B). Between
/// table knots psi is evaluated by monotone (PCHIP) cubic interpolation, which
/// keeps phi nonincreasing and hence b^2 = phi(xi/B) - phi(xi) >= 0.
///
/// Immutable after construction and cheap to copy; copies share the table and
/// the window-weight cache. All const members are safe to call concurrently.
class FilterProfile {
 public:
  static constexpr int kDefaultResolution = 4096;
  static constexpr int kMinResolution = 16;
  /// Largest negative b^2 silently clamped to zero by b().
  static constexpr double kClampTolerance = 1e-12;

  /// Builds a profile around an existing psi table (e.g. one read from disk).
  /// The table must start at 0, end at 1 and be nondecreasing.
  FilterProfile(double bandwidth, std::vector<double> transition_table);

  double bandwidth() const noexcept;
  int resolution() const noexcept;
  const std::vector<double>& transition_table() const noexcept;

  /// Interpolated psi(u) for u in [-1, 1] (clamped outside).
  double psi(double u) const;
  double phi(double xi) const;
  /// Raw difference phi(xi/B) - phi(xi), before any clamping.
  double b_squared(double xi) const;
  /// sqrt(b^2(xi)); throws ConsistencyError if b^2 < -kClampTolerance.
  double b(double xi) const;

  /// b(l / B^j) for l = 0..l_max. Cached per (j, l_max); the reference stays
  /// valid for the lifetime of any copy of this profile.
  const std::vector<double>& window_weights(int j, int l_max) const;

  /// Open frequency support (B^{j-1}, B^{j+1}) of scale j.
  std::pair<double, double> support(int j) const;
  /// Integer degrees l with b(l/B^j) possibly nonzero: [ceil-ish lower, floor-ish upper].
  std::pair<int, int> degree_range(int j) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Validates B and builds the profile from a fresh bump table.
FilterProfile build_profile(double bandwidth, int resolution = FilterProfile::kDefaultResolution);

/// Free-function spelling of FilterProfile::b for xi >= 0.
double eval_b(const FilterProfile& profile, double xi);

/// Free-function spelling of FilterProfile::window_weights. l_max >= 1.
const std::vector<double>& window_weights(const FilterProfile& profile, int j, int l_max);

/// max over integer l in [1, l_max] of |sum_j b^2(l / B^j) - 1|, summing j up
/// to the first scale whose lower support edge exceeds l_max.
double partition_of_unity_deviation(const FilterProfile& profile, int l_max);

/// Text format: comment line, "B <value>", "resolution <n>", then one psi
/// sample per line, all with 17 significant digits.
void write_profile(std::ostream& out, const FilterProfile& profile);
FilterProfile read_profile(std::istream& in);

}  // namespace needlets
