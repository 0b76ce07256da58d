#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace needlets {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kFourPi = 4.0 * kPi;

/// A point of the unit sphere in colatitude/longitude, radians.
struct SpherePoint {
  double theta = 0.0;  ///< colatitude in [0, pi]
  double phi = 0.0;    ///< longitude in [0, 2 pi)

  /// Normalizes phi into [0, 2 pi); throws InvalidArgument if theta is
  /// outside [0, pi] or either coordinate is not finite.
  static SpherePoint make(double theta, double phi);
  static SpherePoint from_unit(const std::array<double, 3>& v);

  std::array<double, 3> unit() const noexcept;
};

/// Great-circle distance in [0, pi] via atan2(|p x q|, p . q).
double geodesic_distance(const SpherePoint& p, const SpherePoint& q);
double geodesic_distance(const std::array<double, 3>& p, const std::array<double, 3>& q);

/// Gauss-Legendre x equiangular product cubature on S^2.
///
/// Rings sit at the ceil((L+1)/2) Gauss-Legendre nodes in cos(theta); every
/// ring carries L+1 equispaced longitudes starting at phi = 0. Weights are
/// (ring Gauss weight) * 2 pi / (L+1), all positive and summing to 4 pi.
/// Points are stored ring-major with theta increasing.
///
/// Any spherical polynomial of degree <= L is integrated exactly. The grid is
/// immutable; copies share storage.
class CubatureGrid {
 public:
  int degree() const noexcept;
  std::optional<int> scale() const noexcept;
  std::size_t size() const noexcept;

  std::span<const SpherePoint> points() const noexcept;
  std::span<const double> weights() const noexcept;
  /// Unit vectors of points(), cached.
  std::span<const std::array<double, 3>> unit_vectors() const noexcept;

  int ring_count() const noexcept;
  int longitude_count() const noexcept;
  /// cos(theta) of ring r.
  double ring_cos(int r) const;
  /// Gauss weight of ring r (integrates over cos theta in [-1, 1]).
  double ring_gauss_weight(int r) const;
  std::size_t index(int ring, int lon) const noexcept {
    return static_cast<std::size_t>(ring) * static_cast<std::size_t>(longitude_count()) +
           static_cast<std::size_t>(lon);
  }

  /// N_j = sqrt(point count); the normalization used by the h statistics.
  double n_scale() const noexcept;

  /// Smallest c with (1/c) B^{2j} <= #points <= c B^{2j}; only meaningful
  /// for scale-tagged grids.
  double count_constant(double bandwidth) const;

  struct Data;  // defined in sphere_geom.cpp

 private:
  explicit CubatureGrid(std::shared_ptr<const Data> d) : data_(std::move(d)) {}
  std::shared_ptr<const Data> data_;

  friend CubatureGrid build_grid(int degree);
  friend CubatureGrid grid_for_scale(int j, double bandwidth, int max_degree);
};

/// Largest cubature degree grid_for_scale will build by default (keeps
/// harmonic degrees within the 512 cap of the transforms).
inline constexpr int kDefaultMaxGridDegree = 1024;

/// Product grid exact for degree <= L. Throws InvalidArgument for L < 0.
CubatureGrid build_grid(int degree);

/// Grid Z_j for scale j: degree ceil(2 B^{j+1}), tagged with j, so products
/// of two scale-j needlet kernels are integrated exactly. Throws
/// ResourceLimit when that degree exceeds max_degree.
CubatureGrid grid_for_scale(int j, double bandwidth, int max_degree = kDefaultMaxGridDegree);

/// Degree grid_for_scale would use for scale j.
int scale_grid_degree(int j, double bandwidth);

/// sum over k' of (1 + B^j d(xi_k, xi_k'))^{-M}. Requires M >= 3.
double kernel_row_sum(const CubatureGrid& grid, std::size_t k, double exponent, double bandwidth,
                      int j);

/// One row per point: theta, phi, weight (17 significant digits).
void write_grid(std::ostream& out, const CubatureGrid& grid);

}  // namespace needlets
