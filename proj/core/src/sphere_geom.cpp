#include "needlets/sphere_geom.hpp"

#include "needlets/error.hpp"
#include "needlets/table_io.hpp"

#include <fmt/format.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace needlets {

SpherePoint SpherePoint::make(double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi) || theta < 0.0 || theta > kPi) {
    throw InvalidArgument(fmt::format("invalid sphere point (theta={}, phi={})", theta, phi));
  }
  double p = std::fmod(phi, 2.0 * kPi);
  if (p < 0.0) p += 2.0 * kPi;
  if (p >= 2.0 * kPi) p = 0.0;
  return {theta, p};
}

SpherePoint SpherePoint::from_unit(const std::array<double, 3>& v) {
  const double rho = std::hypot(v[0], v[1]);
  double phi = std::atan2(v[1], v[0]);
  if (phi < 0.0) phi += 2.0 * kPi;
  if (phi >= 2.0 * kPi) phi = 0.0;
  return {std::atan2(rho, v[2]), phi};
}

std::array<double, 3> SpherePoint::unit() const noexcept {
  const double s = std::sin(theta);
  return {s * std::cos(phi), s * std::sin(phi), std::cos(theta)};
}

double geodesic_distance(const std::array<double, 3>& p, const std::array<double, 3>& q) {
  const double cx = p[1] * q[2] - p[2] * q[1];
  const double cy = p[2] * q[0] - p[0] * q[2];
  const double cz = p[0] * q[1] - p[1] * q[0];
  const double dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
  return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
}

double geodesic_distance(const SpherePoint& p, const SpherePoint& q) {
  return geodesic_distance(p.unit(), q.unit());
}

struct CubatureGrid::Data {
  int degree = 0;
  std::optional<int> scale;
  int n_lon = 0;
  std::vector<double> ring_cos;
  std::vector<double> ring_weight;
  std::vector<SpherePoint> points;
  std::vector<double> weights;
  std::vector<std::array<double, 3>> units;
};

int CubatureGrid::degree() const noexcept { return data_->degree; }
std::optional<int> CubatureGrid::scale() const noexcept { return data_->scale; }
std::size_t CubatureGrid::size() const noexcept { return data_->points.size(); }
std::span<const SpherePoint> CubatureGrid::points() const noexcept { return data_->points; }
std::span<const double> CubatureGrid::weights() const noexcept { return data_->weights; }
std::span<const std::array<double, 3>> CubatureGrid::unit_vectors() const noexcept {
  return data_->units;
}
int CubatureGrid::ring_count() const noexcept { return static_cast<int>(data_->ring_cos.size()); }
int CubatureGrid::longitude_count() const noexcept { return data_->n_lon; }
double CubatureGrid::ring_cos(int r) const { return data_->ring_cos.at(static_cast<std::size_t>(r)); }
double CubatureGrid::ring_gauss_weight(int r) const {
  return data_->ring_weight.at(static_cast<std::size_t>(r));
}
double CubatureGrid::n_scale() const noexcept { return std::sqrt(static_cast<double>(size())); }

double CubatureGrid::count_constant(double bandwidth) const {
  if (!data_->scale) throw PreconditionError("count_constant needs a scale-tagged grid");
  const double target = std::pow(bandwidth, 2.0 * *data_->scale);
  const double n = static_cast<double>(size());
  return std::max(n / target, target / n);
}

namespace {

CubatureGrid::Data make_grid_data(int degree) {
  if (degree < 0) throw InvalidArgument(fmt::format("cubature degree must be >= 0, got {}", degree));
  CubatureGrid::Data d;
  d.degree = degree;
  d.n_lon = degree + 1;
  const auto n_rings = static_cast<std::size_t>((degree + 2) / 2);

  // GSL returns nodes in [-1, 1] in unspecified order; sort by cos(theta) descending.
  std::vector<std::pair<double, double>> nodes(n_rings);
  gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(n_rings);
  if (table == nullptr) throw ResourceLimit("GSL could not allocate Gauss-Legendre table");
  for (std::size_t i = 0; i < n_rings; ++i) {
    gsl_integration_glfixed_point(-1.0, 1.0, i, &nodes[i].first, &nodes[i].second, table);
  }
  gsl_integration_glfixed_table_free(table);
  std::sort(nodes.begin(), nodes.end(), [](auto& a, auto& b) { return a.first > b.first; });

  const double dphi = 2.0 * kPi / d.n_lon;
  d.points.reserve(n_rings * static_cast<std::size_t>(d.n_lon));
  for (const auto& [x, w] : nodes) {
    d.ring_cos.push_back(x);
    d.ring_weight.push_back(w);
    const double theta = std::acos(std::clamp(x, -1.0, 1.0));
    for (int k = 0; k < d.n_lon; ++k) {
      d.points.push_back({theta, dphi * k});
      d.weights.push_back(w * dphi);
    }
  }
  d.units.reserve(d.points.size());
  for (const auto& p : d.points) d.units.push_back(p.unit());
  return d;
}

}  // namespace

CubatureGrid build_grid(int degree) {
  return CubatureGrid(std::make_shared<const CubatureGrid::Data>(make_grid_data(degree)));
}

int scale_grid_degree(int j, double bandwidth) {
  if (j < 0) throw InvalidArgument(fmt::format("scale index must be >= 0, got {}", j));
  if (!(bandwidth > 1.0)) throw InvalidArgument(fmt::format("bandwidth B must be > 1, got {}", bandwidth));
  const double exact = 2.0 * std::pow(bandwidth, j + 1);
  // Guard against pow() landing one ulp above an integer.
  const double rounded = std::round(exact);
  const double degree = std::abs(exact - rounded) < 1e-9 * exact ? rounded : std::ceil(exact);
  if (degree > 1e9) throw ResourceLimit(fmt::format("scale {} needs an absurd degree", j));
  return static_cast<int>(degree);
}

CubatureGrid grid_for_scale(int j, double bandwidth, int max_degree) {
  const int degree = scale_grid_degree(j, bandwidth);
  if (degree > max_degree) {
    throw ResourceLimit(fmt::format("scale {} with B={} needs cubature degree {} > limit {}", j,
                                    bandwidth, degree, max_degree));
  }
  auto d = make_grid_data(degree);
  d.scale = j;
  return CubatureGrid(std::make_shared<const CubatureGrid::Data>(std::move(d)));
}

double kernel_row_sum(const CubatureGrid& grid, std::size_t k, double exponent, double bandwidth,
                      int j) {
  if (exponent < 3.0) {
    throw InvalidArgument(fmt::format("kernel_row_sum needs exponent M >= 3, got {}", exponent));
  }
  if (k >= grid.size()) throw InvalidArgument("kernel_row_sum: point index out of range");
  const auto units = grid.unit_vectors();
  const double scale = std::pow(bandwidth, j);
  double sum = 0.0;
  for (const auto& q : units) {
    sum += std::pow(1.0 + scale * geodesic_distance(units[k], q), -exponent);
  }
  return sum;
}

void write_grid(std::ostream& out, const CubatureGrid& grid) {
  write_table_header(out, "needlets cubature grid", {"theta", "phi", "weight"});
  const auto pts = grid.points();
  const auto w = grid.weights();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    out << format_double(pts[i].theta) << '\t' << format_double(pts[i].phi) << '\t'
        << format_double(w[i]) << '\n';
  }
}

}  // namespace needlets
