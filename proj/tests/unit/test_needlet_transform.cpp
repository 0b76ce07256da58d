#include "oracles.hpp"

#include <needlets/error.hpp>
#include <needlets/filter_bank.hpp>
#include <needlets/needlet_transform.hpp>
#include <needlets/random_field.hpp>
#include <needlets/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace needlets;

namespace {

const FilterProfile& profile2() {
  static const FilterProfile p = build_profile(2.0);
  return p;
}

HarmonicCoefficients random_coeffs(int l_max, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  HarmonicCoefficients a(l_max);
  for (int l = 1; l <= l_max; ++l) {
    a(l, 0) = g(gen);
    for (int m = 1; m <= l; ++m) a(l, m) = {g(gen), g(gen)};
  }
  return a;
}

SpherePoint point_at_distance(const SpherePoint& c, double d) {
  return d + c.theta <= kPi ? SpherePoint::make(c.theta + d, c.phi) : SpherePoint::make(c.theta - d, c.phi);
}

}  // namespace

TEST(Needlet, PeakAndLocalization) {
  const int j = 5;
  const auto g = grid_for_scale(j, 2.0);
  const std::size_t k = g.index(g.ring_count() / 3, 5);
  const auto centre = g.points()[k];
  const double peak = psi_eval(profile2(), j, g, k, centre);
  EXPECT_GT(peak, 0.0);
  const double far = psi_eval(profile2(), j, g, k, point_at_distance(centre, kPi / 2));
  EXPECT_LT(std::abs(far), 1e-3 * peak);
  EXPECT_THROW(psi_eval(profile2(), j, g, g.size(), centre), InvalidArgument);
}

TEST(Needlet, OrthogonalOutsideWindow) {
  const int j = 3;
  const auto gj = grid_for_scale(j, 2.0);
  const auto fg = build_grid(64);
  for (auto [l, m] : {std::pair{1, 0}, {2, 1}, {3, 3}, {16, 4}, {20, 7}}) {
    HarmonicCoefficients a(20);
    a(l, m) = 1.0;
    const auto f = synthesize(a, fg);
    for (std::size_t k = 0; k < gj.size(); k += 37) {
      EXPECT_LT(std::abs(cubature_inner_product(f, fg, profile2(), j, gj, k)), 1e-9) << l << ' ' << m;
    }
  }
}

TEST(Coefficients, ZeroOutsideWindowAndConstant) {
  const int j = 3;
  const auto g = grid_for_scale(j, 2.0);
  HarmonicCoefficients a(20);
  a(0, 0) = 5.0;
  a(2, 1) = {1.0, 2.0};
  a(17, 3) = 1.0;
  for (double b : needlet_coeffs(a, profile2(), j, g).beta) EXPECT_EQ(b, 0.0);
  for (int s = 0; s <= 3; ++s) {
    HarmonicCoefficients c(20);
    c(0, 0) = 3.0;
    for (double b : needlet_coeffs(c, profile2(), s, grid_for_scale(s, 2.0)).beta) EXPECT_EQ(b, 0.0);
  }
}

TEST(Coefficients, Linearity) {
  const int j = 3;
  const auto g = grid_for_scale(j, 2.0);
  const auto a = random_coeffs(16, 1);
  const auto b = random_coeffs(16, 2);
  HarmonicCoefficients sum(16);
  for (std::size_t i = 0; i < sum.values().size(); ++i) sum.values()[i] = a.values()[i] + b.values()[i];
  const auto ba = needlet_coeffs(a, profile2(), j, g).beta;
  const auto bb = needlet_coeffs(b, profile2(), j, g).beta;
  const auto bs = needlet_coeffs(sum, profile2(), j, g).beta;
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(bs[k], ba[k] + bb[k], 1e-12);
}

TEST(Coefficients, MatchesDirectSum) {
  const int j = 2;
  const auto g = grid_for_scale(j, 2.0);
  const auto a = random_coeffs(8, 3);
  const auto beta = needlet_coeffs(a, profile2(), j, g).beta;
  for (std::size_t k = 0; k < g.size(); k += 5) {
    const auto p = g.points()[k];
    std::complex<double> s = 0.0;
    for (int l = 0; l <= 8; ++l) {
      const double b = profile2().b(l / 4.0);
      for (int m = -l; m <= l; ++m) s += b * a.at(l, m) * oracle::ylm(l, m, p.theta, p.phi);
    }
    EXPECT_NEAR(beta[k], std::sqrt(g.weights()[k]) * s.real(), 1e-11);
  }
}

TEST(Coefficients, HarmonicRouteEqualsCubature) {
  const int j = 3;
  const auto gj = grid_for_scale(j, 2.0);
  const int top = window_top_degree(profile2(), j);
  const auto a = random_coeffs(top, 4);
  const auto fg = build_grid(2 * top + 2);
  const auto f = synthesize(a, fg);
  const auto beta = needlet_coeffs(a, profile2(), j, gj).beta;
  double scale = 0.0;
  for (double b : beta) scale = std::max(scale, std::abs(b));
  for (std::size_t k = 0; k < gj.size(); k += 11) {
    EXPECT_LT(std::abs(cubature_inner_product(f, fg, profile2(), j, gj, k) - beta[k]), 1e-10 * scale);
  }
}

TEST(Coefficients, Preconditions) {
  const auto g = grid_for_scale(3, 2.0);
  EXPECT_EQ(window_top_degree(profile2(), 3), 15);
  EXPECT_THROW(needlet_coeffs(random_coeffs(14, 1), profile2(), 3, g), PreconditionError);
  EXPECT_NO_THROW(needlet_coeffs(random_coeffs(15, 1), profile2(), 3, g));
  auto c = needlet_coeffs(random_coeffs(15, 1), profile2(), 3, g);
  EXPECT_THROW(c.normalize(std::vector<double>(3, 1.0)), InvalidArgument);
  EXPECT_THROW(c.normalize(std::vector<double>(g.size(), 0.0)), DegenerateSpectrum);
}

TEST(Kernels, FactorizationOnScaleGrid) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> z(-1, 1), ph(0, 2 * kPi);
  for (int j = 1; j <= 4; ++j) {
    const auto g = grid_for_scale(j, 2.0);
    const ScaleKernel kernel(profile2(), j);
    for (int i = 0; i < 5; ++i) {
      const auto x = SpherePoint::make(std::acos(z(gen)), ph(gen));
      const auto y = SpherePoint::make(std::acos(z(gen)), ph(gen));
      double s = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        s += g.weights()[k] * m_kernel(profile2(), j, x, g.points()[k]) * m_kernel(profile2(), j, g.points()[k], y);
      }
      EXPECT_NEAR(s, lambda_kernel(profile2(), j, x, y), 1e-8 * kernel.lambda_kernel(1.0));
    }
  }
}

TEST(Variance, ClosedFormAndScaling) {
  const auto s = power_law_spectrum(3.0, 1.0, 64);
  const int j = 3;
  const auto g = grid_for_scale(j, 2.0);
  const auto v = coeff_variance(s, profile2(), j, g);
  double power = 0.0;
  for (int l = 0; l <= 16; ++l) power += profile2().b_squared(l / 8.0) * s[l] * (2.0 * l + 1) / (4 * kPi);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(v[k], g.weights()[k] * power, 1e-14 * v[k]);
  const auto v4 = coeff_variance(s.scaled(4.0), profile2(), j, g);
  for (std::size_t k = 0; k < g.size(); ++k) EXPECT_EQ(v4[k], 4.0 * v[k]);
  std::vector<double> cl(65, 0.0);
  cl[40] = 1.0;
  EXPECT_THROW(coeff_variance(spectrum_from_table(cl), profile2(), j, g), DegenerateSpectrum);
  EXPECT_THROW(coeff_variance(power_law_spectrum(3.0, 1.0, 10), profile2(), j, g), PreconditionError);
}

TEST(Variance, EnvelopeOfWindowPower) {
  const double alpha = 3.0;
  const auto s = power_law_spectrum(alpha, 1.0, 512);
  // c1 = c2 = 1 up to the (2l+1)/4 pi and b^2 mass; the ratio must stay bounded in j.
  std::vector<double> ratio;
  for (int j = 2; j <= 7; ++j) ratio.push_back(window_power(s, profile2(), j) / std::pow(2.0, (2 - alpha) * j));
  const auto [lo, hi] = std::minmax_element(ratio.begin(), ratio.end());
  EXPECT_LT(*hi / *lo, 1.5);
}

TEST(Variance, MonteCarlo) {
  const auto s = power_law_spectrum(3.0, 1.0, 16);
  const int j = 3;
  const auto g = grid_for_scale(j, 2.0);
  const auto v = coeff_variance(s, profile2(), j, g);
  const std::vector<std::size_t> pts{0, 100, 287, 400, g.size() - 1};
  std::vector<std::vector<double>> sq(pts.size(), std::vector<double>(2000));
  for (std::size_t r = 0; r < 2000; ++r) {
    const auto b = needlet_coeffs(sample_alm(s, derive_seed(31, r)), profile2(), j, g).beta;
    for (std::size_t i = 0; i < pts.size(); ++i) sq[i][r] = b[pts[i]] * b[pts[i]];
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto m = oracle::mean_se(sq[i]);
    EXPECT_LT(std::abs(m.mean - v[pts[i]]), 3 * m.se) << pts[i];
  }
}

TEST(Correlation, BasicProperties) {
  const auto s = power_law_spectrum(3.0, 1.0, 64);
  const int j = 3;
  const auto g = grid_for_scale(j, 2.0);
  EXPECT_EQ(analytic_correlation(s, profile2(), j, g, 7, 7), 1.0);
  std::mt19937_64 gen(8);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  for (int i = 0; i < 200; ++i) {
    const auto a = pick(gen), b = pick(gen);
    const double c = analytic_correlation(s, profile2(), j, g, a, b);
    EXPECT_EQ(c, analytic_correlation(s, profile2(), j, g, b, a));
    EXPECT_LE(std::abs(c), 1.0 + 1e-12);
    EXPECT_NEAR(c, analytic_correlation(s.scaled(7.5), profile2(), j, g, a, b), 1e-14);
  }
}

TEST(Correlation, MonteCarlo) {
  const auto s = power_law_spectrum(3.0, 1.0, 16);
  const int j = 3;
  const auto g = grid_for_scale(j, 2.0);
  const std::size_t a = g.index(8, 3), b = g.index(8, 4), c = g.index(9, 3);
  const auto v = coeff_variance(s, profile2(), j, g);
  const std::size_t n = 2000;
  std::vector<double> ab(n), ac(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto beta = needlet_coeffs(sample_alm(s, derive_seed(41, r)), profile2(), j, g).beta;
    ab[r] = beta[a] * beta[b] / std::sqrt(v[a] * v[b]);
    ac[r] = beta[a] * beta[c] / std::sqrt(v[a] * v[c]);
  }
  const auto mab = oracle::mean_se(ab);
  const auto mac = oracle::mean_se(ac);
  EXPECT_LT(std::abs(mab.mean - analytic_correlation(s, profile2(), j, g, a, b)), 3 * mab.se);
  EXPECT_LT(std::abs(mac.mean - analytic_correlation(s, profile2(), j, g, a, c)), 3 * mac.se);
}

TEST(CrossScale, FormulaLevel) {
  const auto s = power_law_spectrum(3.0, 1.0, 128);
  const auto g3 = grid_for_scale(3, 2.0);
  const auto g4 = grid_for_scale(4, 2.0);
  const auto g5 = grid_for_scale(5, 2.0);
  for (std::size_t k = 0; k < g3.size(); k += 13) {
    EXPECT_EQ(cross_scale_covariance(s, profile2(), 3, g3, k, 5, g5, k * 7), 0.0);
  }
  EXPECT_NE(cross_scale_covariance(s, profile2(), 3, g3, 10, 4, g4, 40), 0.0);
  const auto v = coeff_variance(s, profile2(), 3, g3);
  for (std::size_t k : {0u, 50u, 300u}) {
    const double same = cross_scale_covariance(s, profile2(), 3, g3, 20, 3, g3, k);
    const double expect = std::sqrt(v[20] * v[k]) * analytic_correlation(s, profile2(), 3, g3, 20, k);
    EXPECT_NEAR(same, expect, 1e-14);
  }
}

TEST(CrossScale, MonteCarloSmall) {
  const auto s = power_law_spectrum(3.0, 1.0, 64);
  const auto est = mc_cross_scale_correlation(s, profile2(), 3, 5, 100, 17);
  EXPECT_LT(std::abs(est.correlation), 0.01);
  EXPECT_GT(est.standard_error, 0.0);
  EXPECT_THROW(mc_cross_scale_correlation(s, profile2(), 3, 3, 100, 1), InvalidArgument);
}

TEST(Decay, DiagnosticRows) {
  const auto s = power_law_spectrum(3.0, 1.0, 128);
  const int j = 5;
  const auto g = grid_for_scale(j, 2.0);
  const auto d = decay_diagnostic(s, profile2(), j, g, 3.0, 1000);
  ASSERT_FALSE(d.rows.empty());
  EXPECT_LE(d.rows.size(), 1000u);
  EXPECT_EQ(d.rows.front().distance, 0.0);
  EXPECT_EQ(d.rows.front().abs_cor, 1.0);
  EXPECT_EQ(d.rows.front().weighted, 1.0);
  for (std::size_t i = 1; i < d.rows.size(); ++i) EXPECT_GE(d.rows[i].distance, d.rows[i - 1].distance);
  bool has_max = false;
  for (const auto& r : d.rows) has_max |= r.weighted == d.max_weighted;
  EXPECT_TRUE(has_max);
  const ScaleCorrelation cor(s, profile2(), j);
  EXPECT_LT(std::abs(cor(0.0)), 1e-2);
  EXPECT_THROW(decay_diagnostic(s, profile2(), j, g, 0.5), InvalidArgument);
}

TEST(Decay, MatchesBruteForceOnSmallGrid) {
  const auto s = power_law_spectrum(3.0, 1.0, 32);
  const int j = 2;
  const auto g = grid_for_scale(j, 2.0);
  const auto gamma = correlation_matrix(s, profile2(), j, g);
  double best = 0.0;
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = 0; b < g.size(); ++b) {
      const double d = geodesic_distance(g.points()[a], g.points()[b]);
      best = std::max(best, std::abs(gamma(static_cast<long>(a), static_cast<long>(b))) * std::pow(1 + 4.0 * d, 3.0));
    }
  }
  EXPECT_NEAR(decay_diagnostic(s, profile2(), j, g, 3.0).max_weighted, best, 1e-9 * best);
}

TEST(GammaSums, ClassEnumerationEqualsDenseMatrix) {
  const auto s = power_law_spectrum(3.0, 1.0, 64);
  for (int j : {2, 3}) {
    const auto g = grid_for_scale(j, 2.0);
    const auto dense = gamma_power_sums(correlation_matrix(s, profile2(), j, g), 4);
    const auto fast = gamma_power_sums(s, profile2(), j, g, 4);
    const auto fast8 = gamma_power_sums(s, profile2(), j, g, 4, 8);
    EXPECT_EQ(fast.point_count, static_cast<double>(g.size()));
    for (int q = 0; q < 4; ++q) {
      EXPECT_NEAR(fast.sums[q], dense.sums[q], 1e-9 * std::abs(dense.sums[q]) + 1e-9) << j << ' ' << q;
      EXPECT_EQ(fast.sums[q], fast8.sums[q]);
    }
  }
  EXPECT_THROW(correlation_matrix(s, profile2(), 5, grid_for_scale(5, 2.0)), ResourceLimit);
}

TEST(Io, CoefficientTable) {
  const auto s = power_law_spectrum(3.0, 1.0, 16);
  const auto g = grid_for_scale(2, 2.0);
  auto c = needlet_coeffs(sample_alm(s, 1), profile2(), 2, g);
  std::ostringstream raw;
  write_needlet_coefficients(raw, std::span(&c, 1));
  EXPECT_NE(raw.str().find("nan"), std::string::npos);
  c.normalize(coeff_variance(s, profile2(), 2, g));
  std::ostringstream out;
  write_needlet_coefficients(out, std::span(&c, 1));
  std::istringstream in(out.str());
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'j') continue;
    ++rows;
  }
  EXPECT_EQ(rows, g.size());
  EXPECT_EQ(out.str().find("nan"), std::string::npos);
}
