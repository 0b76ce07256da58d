#include "needlets/needlet_transform.hpp"

#include "needlets/error.hpp"
#include "needlets/parallel.hpp"
#include "needlets/rng.hpp"
#include "needlets/table_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace needlets {

namespace {

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return std::clamp(a[0] * b[0] + a[1] * b[1] + a[2] * b[2], -1.0, 1.0);
}

std::vector<double> window_vector(const FilterProfile& profile, int j, bool squared) {
  const int top = window_top_degree(profile, j);
  const auto& w = profile.window_weights(j, std::max(top, 1));
  std::vector<double> out(w.begin(), w.begin() + top + 1);
  if (squared) {
    for (auto& v : out) v *= v;
  }
  return out;
}

void require_scale(int j) {
  if (j < 0) throw InvalidArgument(fmt::format("scale index must be >= 0, got {}", j));
}

void require_index(const CubatureGrid& grid, std::size_t k) {
  if (k >= grid.size()) {
    throw InvalidArgument(fmt::format("point index {} out of range for a grid of {} points", k, grid.size()));
  }
}

// Visits every class (r1 <= r2, 0 <= delta <= n/2) of point pairs on a
// product grid. `multiplicity` is the number of ordered pairs in the class.
// Classes are partitioned by r1 so that body(r1, ...) can run in parallel.
template <typename Body>
void for_each_pair_class_in_ring(const CubatureGrid& grid, int r1, Body&& body) {
  const int rings = grid.ring_count();
  const int n = grid.longitude_count();
  const auto u = grid.unit_vectors();
  const auto& p = u[grid.index(r1, 0)];
  for (int r2 = r1; r2 < rings; ++r2) {
    const double ring_factor = r1 == r2 ? 1.0 : 2.0;
    for (int delta = 0; 2 * delta <= n; ++delta) {
      const double lon_factor = (delta == 0 || 2 * delta == n) ? 1.0 : 2.0;
      const auto& q = u[grid.index(r2, delta)];
      body(p, q, ring_factor * lon_factor * n);
    }
  }
}

}  // namespace

void NeedletCoefficients::normalize(std::vector<double> variance) {
  if (variance.size() != beta.size()) {
    throw InvalidArgument(fmt::format("variance has {} entries, coefficients {}", variance.size(), beta.size()));
  }
  sigma2 = std::move(variance);
  beta_hat.resize(beta.size());
  for (std::size_t k = 0; k < beta.size(); ++k) {
    if (!(sigma2[k] > 0.0)) throw DegenerateSpectrum(fmt::format("variance of coefficient {} is not positive", k));
    beta_hat[k] = beta[k] / std::sqrt(sigma2[k]);
  }
}

int window_top_degree(const FilterProfile& profile, int j) {
  require_scale(j);
  return std::max(0, profile.degree_range(j).second - 1);
}

ScaleKernel::ScaleKernel(const FilterProfile& profile, int j)
    : j_(j), b_(window_vector(profile, j, false)), b2_(window_vector(profile, j, true)) {}

double psi_eval(const FilterProfile& profile, int j, const CubatureGrid& grid, std::size_t k,
                const SpherePoint& x) {
  require_index(grid, k);
  const ScaleKernel kernel(profile, j);
  return std::sqrt(grid.weights()[k]) * kernel.m_kernel(dot(x.unit(), grid.unit_vectors()[k]));
}

NeedletCoefficients needlet_coeffs(const HarmonicCoefficients& coeffs, const FilterProfile& profile,
                                   int j, const CubatureGrid& grid) {
  const int top = window_top_degree(profile, j);
  if (coeffs.l_max() < top) {
    throw PreconditionError(fmt::format("scale {} needs coefficients up to l = {}, got l_max {}", j, top,
                                        coeffs.l_max()));
  }
  coeffs.check_real_field();
  const auto filter = window_vector(profile, j, false);
  NeedletCoefficients out{j, grid, synthesize(coeffs, grid, filter), {}, {}};
  const auto w = grid.weights();
  for (std::size_t k = 0; k < out.beta.size(); ++k) out.beta[k] *= std::sqrt(w[k]);
  return out;
}

double window_power(const PowerSpectrum& spectrum, const FilterProfile& profile, int j) {
  const int top = window_top_degree(profile, j);
  if (spectrum.l_max() < top) {
    throw PreconditionError(fmt::format("scale {} needs the spectrum up to l = {}, got l_max {}", j, top,
                                        spectrum.l_max()));
  }
  const auto b2 = window_vector(profile, j, true);
  double sum = 0.0;
  for (int l = 0; l <= top; ++l) sum += b2[static_cast<std::size_t>(l)] * spectrum[l] * (2.0 * l + 1.0) / kFourPi;
  if (!(sum > 0.0)) {
    throw DegenerateSpectrum(fmt::format("spectrum vanishes on the support of scale {}", j));
  }
  return sum;
}

std::vector<double> coeff_variance(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                   const CubatureGrid& grid) {
  const double power = window_power(spectrum, profile, j);
  std::vector<double> out(grid.weights().begin(), grid.weights().end());
  for (auto& v : out) v *= power;
  return out;
}

ScaleCorrelation::ScaleCorrelation(const PowerSpectrum& spectrum, const FilterProfile& profile, int j)
    : coeffs_(window_vector(profile, j, true)), norm_(window_power(spectrum, profile, j)) {
  for (std::size_t l = 0; l < coeffs_.size(); ++l) coeffs_[l] *= spectrum[static_cast<int>(l)];
}

double analytic_correlation(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                            const CubatureGrid& grid, std::size_t k, std::size_t k2) {
  require_index(grid, k);
  require_index(grid, k2);
  if (k == k2) {
    window_power(spectrum, profile, j);  // still reject degenerate spectra
    return 1.0;
  }
  const ScaleCorrelation cor(spectrum, profile, j);
  const auto u = grid.unit_vectors();
  return cor(dot(u[k], u[k2]));
}

Eigen::MatrixXd correlation_matrix(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                   const CubatureGrid& grid, std::size_t max_points) {
  const std::size_t n = grid.size();
  if (n > max_points) {
    throw ResourceLimit(fmt::format("dense correlation matrix of {} points exceeds the cap of {}", n, max_points));
  }
  const ScaleCorrelation cor(spectrum, profile, j);
  const auto u = grid.unit_vectors();
  Eigen::MatrixXd gamma(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    gamma(a, a) = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      const double g = cor(dot(u[a], u[b]));
      gamma(a, b) = g;
      gamma(b, a) = g;
    }
  }
  return gamma;
}

double cross_scale_covariance(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                              const CubatureGrid& grid_j, std::size_t k, int j2,
                              const CubatureGrid& grid_j2, std::size_t k2) {
  require_index(grid_j, k);
  require_index(grid_j2, k2);
  const auto bj = window_vector(profile, j, false);
  const auto bj2 = window_vector(profile, j2, false);
  const std::size_t top = std::min(bj.size(), bj2.size());
  std::vector<double> c(top);
  for (std::size_t l = 0; l < top; ++l) c[l] = bj[l] * bj2[l] * spectrum[static_cast<int>(l)];
  const double t = dot(grid_j.unit_vectors()[k], grid_j2.unit_vectors()[k2]);
  return std::sqrt(grid_j.weights()[k] * grid_j2.weights()[k2]) * kernel_series(c, t);
}

GammaPowerSums gamma_power_sums(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                const CubatureGrid& grid, int max_power, int workers) {
  if (max_power < 1) throw InvalidArgument(fmt::format("max_power must be >= 1, got {}", max_power));
  const ScaleCorrelation cor(spectrum, profile, j);
  const auto q_max = static_cast<std::size_t>(max_power);
  const int rings = grid.ring_count();
  std::vector<std::vector<double>> partial(static_cast<std::size_t>(rings), std::vector<double>(q_max, 0.0));
  parallel_for(static_cast<std::size_t>(rings), workers, [&](std::size_t r1) {
    auto& acc = partial[r1];
    for_each_pair_class_in_ring(grid, static_cast<int>(r1), [&](const auto& p, const auto& q, double mult) {
      const double g = cor(dot(p, q));
      double power = 1.0;
      for (std::size_t i = 0; i < q_max; ++i) {
        power *= g;
        acc[i] += mult * power;
      }
    });
  });
  GammaPowerSums out;
  out.point_count = static_cast<double>(grid.size());
  out.sums.assign(q_max, 0.0);
  for (const auto& acc : partial) {
    for (std::size_t i = 0; i < q_max; ++i) out.sums[i] += acc[i];
  }
  return out;
}

GammaPowerSums gamma_power_sums(const Eigen::MatrixXd& gamma, int max_power) {
  if (max_power < 1) throw InvalidArgument(fmt::format("max_power must be >= 1, got {}", max_power));
  if (gamma.rows() != gamma.cols()) throw InvalidArgument("correlation matrix must be square");
  GammaPowerSums out;
  out.point_count = static_cast<double>(gamma.rows());
  out.sums.assign(static_cast<std::size_t>(max_power), 0.0);
  Eigen::ArrayXXd power = Eigen::ArrayXXd::Ones(gamma.rows(), gamma.cols());
  for (int q = 0; q < max_power; ++q) {
    power *= gamma.array();
    out.sums[static_cast<std::size_t>(q)] = power.sum();
  }
  return out;
}

DecayDiagnostic decay_diagnostic(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                                 const CubatureGrid& grid, double exponent, std::size_t row_cap,
                                 int workers) {
  if (!(exponent >= 1.0)) throw InvalidArgument(fmt::format("decay exponent M must be >= 1, got {}", exponent));
  if (row_cap < 2) throw InvalidArgument("row cap must be at least 2");
  const ScaleCorrelation cor(spectrum, profile, j);
  const double scale = std::pow(profile.bandwidth(), j);
  const int rings = grid.ring_count();
  std::vector<std::vector<DecayRow>> partial(static_cast<std::size_t>(rings));
  parallel_for(static_cast<std::size_t>(rings), workers, [&](std::size_t r1) {
    auto& rows = partial[r1];
    for_each_pair_class_in_ring(grid, static_cast<int>(r1), [&](const auto& p, const auto& q, double) {
      const double d = geodesic_distance(p, q);
      const double c = p == q ? 1.0 : std::abs(cor(dot(p, q)));
      rows.push_back({d, c, c * std::pow(1.0 + scale * d, exponent)});
    });
  });

  std::vector<DecayRow> all;
  for (auto& rows : partial) all.insert(all.end(), rows.begin(), rows.end());
  std::sort(all.begin(), all.end(), [](const DecayRow& a, const DecayRow& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.weighted < b.weighted;
  });

  DecayDiagnostic out;
  out.j = j;
  out.exponent = exponent;
  out.pair_classes = all.size();
  std::size_t argmax = 0;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i].weighted > all[argmax].weighted) argmax = i;
  }
  out.max_weighted = all[argmax].weighted;
  out.argmax_distance = all[argmax].distance;

  if (all.size() <= row_cap) {
    out.rows = std::move(all);
    return out;
  }
  std::vector<std::size_t> keep;
  keep.reserve(row_cap);
  const std::size_t evenly = row_cap - 1;
  for (std::size_t i = 0; i < evenly; ++i) keep.push_back(i * (all.size() - 1) / (evenly - 1 == 0 ? 1 : evenly - 1));
  keep.push_back(argmax);
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  out.rows.reserve(keep.size());
  for (auto i : keep) out.rows.push_back(all[i]);
  return out;
}

double lambda_kernel(const FilterProfile& profile, int j, const SpherePoint& x, const SpherePoint& y) {
  return ScaleKernel(profile, j).lambda_kernel(dot(x.unit(), y.unit()));
}

double m_kernel(const FilterProfile& profile, int j, const SpherePoint& x, const SpherePoint& y) {
  return ScaleKernel(profile, j).m_kernel(dot(x.unit(), y.unit()));
}

double cubature_inner_product(std::span<const double> field, const CubatureGrid& field_grid,
                              const FilterProfile& profile, int j, const CubatureGrid& grid_j,
                              std::size_t k) {
  if (field.size() != field_grid.size()) {
    throw InvalidArgument(fmt::format("field has {} values, grid {} points", field.size(), field_grid.size()));
  }
  require_index(grid_j, k);
  const ScaleKernel kernel(profile, j);
  const auto& center = grid_j.unit_vectors()[k];
  const auto u = field_grid.unit_vectors();
  const auto w = field_grid.weights();
  double sum = 0.0;
  for (std::size_t i = 0; i < field.size(); ++i) sum += w[i] * field[i] * kernel.m_kernel(dot(u[i], center));
  return std::sqrt(grid_j.weights()[k]) * sum;
}

CrossScaleEstimate mc_cross_scale_correlation(const PowerSpectrum& spectrum,
                                              const FilterProfile& profile, int j, int j2,
                                              std::size_t replicates, std::uint64_t seed,
                                              int workers) {
  require_scale(j);
  require_scale(j2);
  if (j == j2) throw InvalidArgument("cross-scale correlation needs two different scales");
  if (replicates < 2) throw InvalidArgument("need at least 2 replicates");
  const int coarse = std::min(j, j2);
  const int fine = std::max(j, j2);
  const double B = profile.bandwidth();
  const CubatureGrid grid_c = grid_for_scale(coarse, B);
  const CubatureGrid grid_f = grid_for_scale(fine, B);
  const auto var_c = coeff_variance(spectrum, profile, coarse, grid_c);
  const auto var_f = coeff_variance(spectrum, profile, fine, grid_f);

  // Nearest coarse point of every fine point.
  const auto uc = grid_c.unit_vectors();
  const auto uf = grid_f.unit_vectors();
  std::vector<std::size_t> partner(uf.size());
  parallel_for(uf.size(), workers, [&](std::size_t i) {
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t c = 0; c < uc.size(); ++c) {
      const double d = dot(uf[i], uc[c]);
      if (d > best_dot) {
        best_dot = d;
        best = c;
      }
    }
    partner[i] = best;
  });

  struct Moments {
    double xy = 0.0, xx = 0.0, yy = 0.0;
  };
  std::vector<Moments> per(replicates);
  parallel_for(replicates, workers, [&](std::size_t r) {
    const auto alm = sample_alm(spectrum, derive_seed(seed, r));
    auto bc = needlet_coeffs(alm, profile, coarse, grid_c);
    auto bf = needlet_coeffs(alm, profile, fine, grid_f);
    bc.normalize(var_c);
    bf.normalize(var_f);
    Moments m;
    for (std::size_t i = 0; i < partner.size(); ++i) {
      const double x = bf.beta_hat[i];
      const double y = bc.beta_hat[partner[i]];
      m.xy += x * y;
      m.xx += x * x;
      m.yy += y * y;
    }
    per[r] = m;
  });

  Moments total;
  std::vector<double> rep_cor(replicates);
  for (std::size_t r = 0; r < replicates; ++r) {
    total.xy += per[r].xy;
    total.xx += per[r].xx;
    total.yy += per[r].yy;
    rep_cor[r] = per[r].xy / std::sqrt(per[r].xx * per[r].yy);
  }
  const double mean = std::accumulate(rep_cor.begin(), rep_cor.end(), 0.0) / static_cast<double>(replicates);
  double ss = 0.0;
  for (double c : rep_cor) ss += (c - mean) * (c - mean);

  CrossScaleEstimate out;
  out.j = j;
  out.j2 = j2;
  out.replicates = replicates;
  out.correlation = total.xy / std::sqrt(total.xx * total.yy);
  out.standard_error = std::sqrt(ss / static_cast<double>(replicates - 1) / static_cast<double>(replicates));
  return out;
}

void write_needlet_coefficients(std::ostream& out, std::span<const NeedletCoefficients> scales) {
  write_table_header(out, "needlets coefficients", {"j", "k", "theta", "phi", "beta", "sigma2", "beta_hat"});
  for (const auto& s : scales) {
    const auto pts = s.grid.points();
    const bool normalized = s.sigma2.size() == s.beta.size();
    for (std::size_t k = 0; k < s.beta.size(); ++k) {
      out << s.j << '\t' << k << '\t' << format_double(pts[k].theta) << '\t' << format_double(pts[k].phi) << '\t'
          << format_double(s.beta[k]) << '\t' << (normalized ? format_double(s.sigma2[k]) : "nan") << '\t'
          << (normalized ? format_double(s.beta_hat[k]) : "nan") << '\n';
    }
  }
}

void write_decay_table(std::ostream& out, const DecayDiagnostic& diagnostic) {
  out << "# j " << diagnostic.j << " M " << format_double(diagnostic.exponent) << " max_weighted_product "
      << format_double(diagnostic.max_weighted) << " at_d " << format_double(diagnostic.argmax_distance)
      << " pair_classes " << diagnostic.pair_classes << '\n';
  write_table_header(out, "needlets decay diagnostic", {"d_radians", "abs_cor", "weighted_product"});
  for (const auto& r : diagnostic.rows) {
    out << format_double(r.distance) << '\t' << format_double(r.abs_cor) << '\t' << format_double(r.weighted) << '\n';
  }
}

}  // namespace needlets
