#pragma once

#include "needlets/sphere_geom.hpp"

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace needlets {

/// Degree cap for every harmonic transform in the library.
inline constexpr int kMaxHarmonicDegree = 512;

/// L_l(t) = (2l+1)/(4 pi) P_l(t): the reproducing kernel of the degree-l
/// harmonic space, so that L_l(<x,y>) = sum_m Y_lm(x) conj(Y_lm(y)).
/// Throws InvalidArgument for l < 0 or |t| > 1 + 1e-12.
double legendre_kernel(int l, double t);

/// sum_l coeffs[l] * L_l(t), by forward three-term recurrence.
double kernel_series(std::span<const double> coeffs, double t);

/// Orthonormal associated Legendre values Pbar_l^m(x), with the
/// Condon-Shortley phase, so that Y_lm(theta, phi) = Pbar_l^m(cos theta) e^{i m phi}.
///
/// Sectoral seeds Pbar_m^m ~ sin^m(theta) underflow double range near the poles
/// for large m; the seed and the l-recurrence run on a binary-exponent-scaled
/// mantissa and are only converted back once representable.
class AssociatedLegendre {
 public:
  explicit AssociatedLegendre(int l_max);

  int l_max() const noexcept { return l_max_; }
  static std::size_t index(int l, int m) noexcept {
    return static_cast<std::size_t>(l) * static_cast<std::size_t>(l + 1) / 2 +
           static_cast<std::size_t>(m);
  }
  static std::size_t table_size(int l_max) noexcept { return index(l_max + 1, 0); }

  /// Fills out[index(l, m)] for 0 <= m <= l <= l_max.
  void evaluate(double x, std::span<double> out) const;
  /// Fills out[l - m] = Pbar_l^m(x) for l = m..l_max.
  void evaluate_order(double x, int m, std::span<double> out) const;

 private:
  int l_max_;
  std::vector<double> a_;  // recurrence coefficients, packed like the table
  std::vector<double> b_;
};

/// Orthonormal complex spherical harmonic, Condon-Shortley phase.
/// Throws InvalidArgument when |m| > l or l < 0.
std::complex<double> ylm(int l, int m, const SpherePoint& p);

/// Triangular array a_lm, 0 <= m <= l <= l_max. Negative orders are implied
/// by a_{l,-m} = (-1)^m conj(a_lm).
class HarmonicCoefficients {
 public:
  explicit HarmonicCoefficients(int l_max);

  int l_max() const noexcept { return l_max_; }
  static std::size_t index(int l, int m) noexcept { return AssociatedLegendre::index(l, m); }

  std::complex<double>& operator()(int l, int m) { return a_[index(l, m)]; }
  const std::complex<double>& operator()(int l, int m) const { return a_[index(l, m)]; }
  /// Any order -l <= m <= l, applying the conjugation rule for m < 0.
  std::complex<double> at(int l, int m) const;

  std::span<std::complex<double>> values() noexcept { return a_; }
  std::span<const std::complex<double>> values() const noexcept { return a_; }

  /// Throws InvalidArgument if some Im(a_l0) exceeds 1e-12 (relative to the
  /// largest |a_lm|, floor 1): such arrays describe no real field.
  void check_real_field() const;

  friend bool operator==(const HarmonicCoefficients&, const HarmonicCoefficients&) = default;

 private:
  int l_max_;
  std::vector<std::complex<double>> a_;
};

/// T(x) = sum_{l, m} a_lm Y_lm(x) at arbitrary points, O(#points * l_max^2).
std::vector<double> synthesize(const HarmonicCoefficients& coeffs,
                               std::span<const SpherePoint> points);

/// Same sum on a product grid, reusing Legendre values per ring. With a
/// non-empty `degree_filter`, a_lm is first multiplied by degree_filter[l]
/// (missing entries count as 0).
std::vector<double> synthesize(const HarmonicCoefficients& coeffs, const CubatureGrid& grid,
                               std::span<const double> degree_filter = {});

/// a_lm = sum_k lambda_k T(xi_k) conj(Y_lm(xi_k)). Exact for fields of
/// degree <= grid.degree() - l_max; requires grid.degree() >= 2 l_max.
HarmonicCoefficients analyze(std::span<const double> field, const CubatureGrid& grid, int l_max);

/// Text format: comment, "l_max <n>", then "l m re im" rows for m >= 0.
void write_coefficients(std::ostream& out, const HarmonicCoefficients& coeffs);
HarmonicCoefficients read_coefficients(std::istream& in);

}  // namespace needlets
