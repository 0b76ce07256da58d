#include "needlets/masking.hpp"

#include "needlets/error.hpp"
#include "needlets/parallel.hpp"
#include "needlets/rng.hpp"
#include "needlets/table_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace needlets {

SkyMask SkyMask::full_sky() {
  SkyMask m;
  m.add_band(0.0, kPi);
  return m;
}

SkyMask& SkyMask::add_band(double theta_lo, double theta_hi) {
  if (!(theta_lo >= 0.0 && theta_lo <= theta_hi && theta_hi <= kPi)) {
    throw InvalidArgument(fmt::format("band needs 0 <= theta_lo <= theta_hi <= pi, got [{}, {}]", theta_lo, theta_hi));
  }
  bands_.push_back({theta_lo, theta_hi});
  return *this;
}

SkyMask& SkyMask::add_disc(const SpherePoint& center, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw InvalidArgument(fmt::format("disc radius must be >= 0, got {}", radius));
  }
  discs_.push_back({SpherePoint::make(center.theta, center.phi), radius});
  return *this;
}

bool SkyMask::contains(const SpherePoint& p) const {
  for (const auto& b : bands_) {
    if (p.theta >= b.theta_lo && p.theta <= b.theta_hi) return true;
  }
  for (const auto& d : discs_) {
    if (geodesic_distance(p, d.center) <= d.radius) return true;
  }
  return false;
}

std::vector<std::uint8_t> rasterize(const SkyMask& mask, const CubatureGrid& grid) {
  const auto pts = grid.points();
  std::vector<std::uint8_t> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = mask.contains(pts[i]) ? 1 : 0;
  return out;
}

double masked_fraction(std::span<const std::uint8_t> raster, const CubatureGrid& grid) {
  if (raster.size() != grid.size()) throw InvalidArgument("mask raster does not match the grid");
  const auto w = grid.weights();
  double area = 0.0;
  for (std::size_t i = 0; i < raster.size(); ++i) {
    if (raster[i]) area += w[i];
  }
  return area / kFourPi;
}

std::vector<double> apply_mask(std::span<const double> field, std::span<const std::uint8_t> raster) {
  if (field.size() != raster.size()) {
    throw InvalidArgument(fmt::format("field has {} values, mask raster {}", field.size(), raster.size()));
  }
  std::vector<double> out(field.begin(), field.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (raster[i]) out[i] = 0.0;
  }
  return out;
}

NeedletCoefficients masked_coeffs(std::span<const double> masked_field, const CubatureGrid& field_grid,
                                  const FilterProfile& profile, int j, const CubatureGrid& grid_j) {
  const int top = window_top_degree(profile, j);
  if (field_grid.degree() < 2 * top) {
    throw PreconditionError(fmt::format("scale {} needs a field grid of degree >= {}, got {}", j, 2 * top,
                                        field_grid.degree()));
  }
  return needlet_coeffs(analyze(masked_field, field_grid, top), profile, j, grid_j);
}

DiscrepancyAccumulator::DiscrepancyAccumulator(std::size_t points) : sum_(points, 0.0), sum_sq_(points, 0.0) {}

void DiscrepancyAccumulator::add(std::span<const double> beta, std::span<const double> beta_tilde) {
  if (beta.size() != sum_.size() || beta_tilde.size() != sum_.size()) {
    throw InvalidArgument("coefficient vectors do not match the accumulator size");
  }
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    const double d = beta[k] - beta_tilde[k];
    sum_[k] += d * d;
    sum_sq_[k] += d * d * d * d;
  }
  ++count_;
}

DiscrepancyAccumulator::Result DiscrepancyAccumulator::result(std::span<const double> sigma2) const {
  if (count_ < kMinDiscrepancyReplicates) {
    throw InvalidArgument(fmt::format("discrepancy needs >= {} replicates, got {}", kMinDiscrepancyReplicates, count_));
  }
  if (sigma2.size() != sum_.size()) throw InvalidArgument("variance vector does not match the accumulator size");
  const double n = static_cast<double>(count_);
  Result r;
  r.d.resize(sum_.size());
  r.se.resize(sum_.size());
  for (std::size_t k = 0; k < sum_.size(); ++k) {
    if (!(sigma2[k] > 0.0)) throw DegenerateSpectrum(fmt::format("variance of coefficient {} is not positive", k));
    const double mean = sum_[k] / n;
    const double var = std::max(0.0, (sum_sq_[k] - n * mean * mean) / (n - 1.0));
    r.d[k] = mean / sigma2[k];
    r.se[k] = std::sqrt(var / n) / sigma2[k];
  }
  return r;
}

double robustness_bound(double c_m, double v_star, double bandwidth, int j, double eps, double exponent) {
  if (!(v_star >= 0.0)) throw InvalidArgument(fmt::format("V* must be >= 0, got {}", v_star));
  if (!(eps > 0.0)) throw InvalidArgument(fmt::format("clearance must be > 0, got {}", eps));
  if (!(exponent >= 1.0)) throw InvalidArgument(fmt::format("M must be >= 1, got {}", exponent));
  const double scale = std::pow(bandwidth, j);
  return c_m * kFourPi * std::sqrt(2.0 * v_star) * scale / std::pow(1.0 + scale * eps, exponent);
}

double relative_robustness_bound(double c_m, double v_star, double bandwidth, int j, double eps, double exponent,
                            double sigma2) {
  if (!(sigma2 > 0.0)) throw DegenerateSpectrum("relative bound needs a positive coefficient variance");
  return robustness_bound(c_m, v_star, bandwidth, j, eps, exponent) / std::sqrt(sigma2);
}

std::vector<double> clearance(const SkyMask& mask, std::span<const std::uint8_t> raster,
                              const CubatureGrid& field_grid, const CubatureGrid& grid_j) {
  if (raster.size() != field_grid.size()) throw InvalidArgument("mask raster does not match the field grid");
  std::vector<std::array<double, 3>> masked;
  const auto u = field_grid.unit_vectors();
  for (std::size_t i = 0; i < raster.size(); ++i) {
    if (raster[i]) masked.push_back(u[i]);
  }
  const auto pts = grid_j.points();
  const auto uj = grid_j.unit_vectors();
  std::vector<double> out(pts.size(), std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    if (mask.contains(pts[k])) {
      out[k] = 0.0;
      continue;
    }
    double best = -2.0;
    for (const auto& m : masked) best = std::max(best, uj[k][0] * m[0] + uj[k][1] * m[1] + uj[k][2] * m[2]);
    if (best > -2.0) out[k] = std::acos(std::clamp(best, -1.0, 1.0));
  }
  return out;
}

double needlet_width(double bandwidth, int j) { return kPi / std::pow(bandwidth, j); }

bool nonincreasing_within_se(std::span<const ClearanceBin> bins) {
  int inversions = 0;
  const ClearanceBin* prev = nullptr;
  for (const auto& b : bins) {
    if (b.points == 0) continue;
    if (prev && b.mean_d > prev->mean_d) {
      ++inversions;
      if (b.mean_d - prev->mean_d >= std::hypot(b.se, prev->se)) return false;
    }
    prev = &b;
  }
  return inversions <= 1;
}

std::size_t DiscrepancyMap::flagged_count() const {
  return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), std::uint8_t{1}));
}

double DiscrepancyMap::flagged_fraction_within(double widths) const {
  std::size_t total = 0;
  std::size_t near = 0;
  for (std::size_t k = 0; k < flagged.size(); ++k) {
    if (!flagged[k]) continue;
    ++total;
    if (clearance[k] <= widths * width) ++near;
  }
  return total == 0 ? 1.0 : static_cast<double>(near) / static_cast<double>(total);
}

DiscrepancyMap run_mask_experiment(const PowerSpectrum& spectrum, const FilterProfile& profile,
                                   const SkyMask& mask, const MaskExperimentConfig& config) {
  if (config.replicates < kMinDiscrepancyReplicates) {
    throw InvalidArgument(fmt::format("mask experiment needs >= {} replicates, got {}", kMinDiscrepancyReplicates,
                                      config.replicates));
  }
  if (config.bins < 1) throw InvalidArgument("need at least one clearance bin");
  const int j = config.j;
  const double B = profile.bandwidth();
  const int top = window_top_degree(profile, j);
  const int field_l_max = config.field_l_max < 0 ? top : config.field_l_max;
  if (field_l_max < top) {
    throw PreconditionError(fmt::format("field degree {} stops below the scale-{} window top {}", field_l_max, j, top));
  }
  if (spectrum.l_max() < field_l_max) {
    throw PreconditionError(fmt::format("spectrum ends at l = {}, field needs {}", spectrum.l_max(), field_l_max));
  }
  const PowerSpectrum field_spectrum =
      spectrum_from_table(std::vector<double>(spectrum.cl.begin(), spectrum.cl.begin() + field_l_max + 1));

  const CubatureGrid grid_j = grid_for_scale(j, B);
  const int field_degree = std::max(grid_j.degree(), 2 * field_l_max);
  const CubatureGrid field_grid = field_degree == grid_j.degree() ? grid_j : build_grid(field_degree);
  const auto raster = rasterize(mask, field_grid);

  DiscrepancyMap map{.j = j, .replicates = config.replicates, .grid = grid_j};
  map.flag_threshold = config.flag_threshold;
  map.exponent = config.exponent;
  map.width = needlet_width(B, j);
  map.masked_fraction = masked_fraction(raster, field_grid);
  map.sigma2 = coeff_variance(field_spectrum, profile, j, grid_j);
  map.clearance = clearance(mask, raster, field_grid, grid_j);
  const bool any_masked = std::any_of(raster.begin(), raster.end(), [](std::uint8_t r) { return r != 0; });
  map.v_star = any_masked ? covariance_function(field_spectrum, 1.0) : 0.0;

  const std::size_t n_j = grid_j.size();
  const std::size_t n_field = field_grid.size();
  std::vector<std::vector<double>> diff_sq(config.replicates);
  std::vector<std::vector<double>> field_sq(config.replicates);
  parallel_for(config.replicates, config.workers, [&](std::size_t r) {
    const auto alm = sample_alm(field_spectrum, derive_seed(config.seed, r));
    const auto field = synthesize(alm, field_grid);
    const auto beta = needlet_coeffs(alm, profile, j, grid_j);
    const auto tilde = masked_coeffs(apply_mask(field, raster), field_grid, profile, j, grid_j);
    auto& d = diff_sq[r];
    d.resize(n_j);
    for (std::size_t k = 0; k < n_j; ++k) {
      const double e = beta.beta[k] - tilde.beta[k];
      d[k] = e * e;
    }
    auto& f = field_sq[r];
    f.resize(n_field);
    for (std::size_t i = 0; i < n_field; ++i) f[i] = field[i] * field[i];
  });

  DiscrepancyAccumulator acc(n_j);
  std::vector<double> zeros(n_j, 0.0);
  std::vector<double> root(n_j);
  for (const auto& d : diff_sq) {
    for (std::size_t k = 0; k < n_j; ++k) root[k] = std::sqrt(d[k]);
    acc.add(root, zeros);
  }
  auto result = acc.result(map.sigma2);
  map.d = std::move(result.d);
  map.se = std::move(result.se);
  map.rms_difference.resize(n_j);
  map.flagged.resize(n_j);
  for (std::size_t k = 0; k < n_j; ++k) {
    map.rms_difference[k] = std::sqrt(map.d[k] * map.sigma2[k]);
    map.flagged[k] = map.d[k] > config.flag_threshold ? 1 : 0;
  }

  std::vector<double> mean_sq(n_field, 0.0);
  for (const auto& f : field_sq) {
    for (std::size_t i = 0; i < n_field; ++i) mean_sq[i] += f[i];
  }
  for (std::size_t i = 0; i < n_field; ++i) {
    mean_sq[i] /= static_cast<double>(config.replicates);
    map.mc_t_star = std::max(map.mc_t_star, mean_sq[i]);
    if (raster[i]) map.mc_v_star = std::max(map.mc_v_star, mean_sq[i]);
  }

  if (map.v_star > 0.0) {
    for (std::size_t k = 0; k < n_j; ++k) {
      const double eps = map.clearance[k];
      if (!(eps > 0.0) || !std::isfinite(eps)) continue;
      const double base = robustness_bound(1.0, map.v_star, B, j, eps, config.exponent);
      map.calibrated_cm = std::max(map.calibrated_cm, map.rms_difference[k] / base);
    }
  }

  // Clearance bins; SE from the spread of replicate-level bin means.
  const auto n_bins = static_cast<std::size_t>(config.bins) + 1;
  std::vector<std::size_t> bin_of(n_j);
  map.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    map.bins[b].lo = static_cast<double>(b) * map.width;
    map.bins[b].hi = b + 1 < n_bins ? static_cast<double>(b + 1) * map.width : std::numeric_limits<double>::infinity();
  }
  for (std::size_t k = 0; k < n_j; ++k) {
    const double c = map.clearance[k];
    auto b = std::isfinite(c) ? static_cast<std::size_t>(c / map.width) : n_bins - 1;
    b = std::min(b, n_bins - 1);
    bin_of[k] = b;
    ++map.bins[b].points;
  }
  const double R = static_cast<double>(config.replicates);
  std::vector<double> rep_mean(n_bins);
  std::vector<double> sum(n_bins, 0.0);
  std::vector<double> sum_sq(n_bins, 0.0);
  for (const auto& d : diff_sq) {
    std::fill(rep_mean.begin(), rep_mean.end(), 0.0);
    for (std::size_t k = 0; k < n_j; ++k) rep_mean[bin_of[k]] += d[k] / map.sigma2[k];
    for (std::size_t b = 0; b < n_bins; ++b) {
      if (map.bins[b].points == 0) continue;
      const double m = rep_mean[b] / static_cast<double>(map.bins[b].points);
      sum[b] += m;
      sum_sq[b] += m * m;
    }
  }
  for (std::size_t b = 0; b < n_bins; ++b) {
    if (map.bins[b].points == 0) continue;
    const double mean = sum[b] / R;
    map.bins[b].mean_d = mean;
    map.bins[b].se = std::sqrt(std::max(0.0, (sum_sq[b] - R * mean * mean) / (R - 1.0)) / R);
  }
  return map;
}

void write_mask(std::ostream& out, const SkyMask& mask) {
  out << "# needlets sky mask format-version: " << kTableFormatVersion << '\n';
  for (const auto& b : mask.bands()) out << "band " << format_double(b.theta_lo) << ' ' << format_double(b.theta_hi) << '\n';
  for (const auto& d : mask.discs()) {
    out << "disc " << format_double(d.center.theta) << ' ' << format_double(d.center.phi) << ' '
        << format_double(d.radius) << '\n';
  }
}

SkyMask read_mask(std::istream& in) {
  SkyMask mask;
  std::string line;
  while (next_data_line(in, line)) {
    std::istringstream row(line);
    std::string kind;
    row >> kind;
    if (kind == "band") {
      double lo = 0.0, hi = 0.0;
      if (!(row >> lo >> hi)) throw InvalidArgument("malformed band line: " + line);
      mask.add_band(lo, hi);
    } else if (kind == "disc") {
      double theta = 0.0, phi = 0.0, radius = 0.0;
      if (!(row >> theta >> phi >> radius)) throw InvalidArgument("malformed disc line: " + line);
      mask.add_disc(SpherePoint::make(theta, phi), radius);
    } else {
      throw InvalidArgument("unknown mask region '" + kind + "'");
    }
    std::string extra;
    if (row >> extra) throw InvalidArgument("trailing text in mask line: " + line);
  }
  return mask;
}

void write_discrepancy_map(std::ostream& out, const DiscrepancyMap& map) {
  write_table_header(out, "needlets discrepancy map", {"theta", "phi", "D", "SE", "clearance", "flagged"});
  const auto pts = map.grid.points();
  for (std::size_t k = 0; k < map.d.size(); ++k) {
    out << format_double(pts[k].theta) << '\t' << format_double(pts[k].phi) << '\t' << format_double(map.d[k]) << '\t'
        << format_double(map.se[k]) << '\t' << format_double(map.clearance[k]) << '\t' << int{map.flagged[k]} << '\n';
  }
}

}  // namespace needlets
