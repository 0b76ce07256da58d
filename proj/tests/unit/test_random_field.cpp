#include "oracles.hpp"

#include <needlets/error.hpp>
#include <needlets/random_field.hpp>
#include <needlets/rng.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace needlets;

TEST(Spectrum, PowerLaw) {
  const auto s = power_law_spectrum(3.0, 1.0, 32);
  EXPECT_EQ(s.l_max(), 32);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_DOUBLE_EQ(s[2], 0.125);
  EXPECT_EQ(s[33], 0.0);
  ASSERT_TRUE(s.compliant());
  for (int l = 1; l <= 32; ++l) {
    const double env = std::pow(l, -s.envelope->alpha);
    EXPECT_GE(s[l], s.envelope->c1 * env * (1 - 1e-15));
    EXPECT_LE(s[l], s.envelope->c2 * env * (1 + 1e-15));
  }
  EXPECT_THROW(power_law_spectrum(2.0, 1.0, 10), InvalidArgument);
  EXPECT_THROW(power_law_spectrum(3.0, 0.0, 10), InvalidArgument);
}

TEST(Spectrum, TableAndEnvelope) {
  auto s = spectrum_from_table({5.0, 1.0, 0.125});
  EXPECT_EQ(s[0], 0.0);
  EXPECT_FALSE(s.compliant());
  EXPECT_THROW(spectrum_from_table({0.0, -1.0}), InvalidArgument);
  const SpectrumEnvelope env{3.0, 0.9, 1.1};
  EXPECT_TRUE(spectrum_from_table({0.0, 1.0, 0.125}, env).compliant());
  EXPECT_THROW(spectrum_from_table({0.0, 1.0, 0.5}, env), InvalidArgument);
  EXPECT_DOUBLE_EQ(s.scaled(4.0)[2], 0.5);
}

TEST(Spectrum, CmbLikeIsPositive) {
  const auto s = cmb_like_spectrum(256);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 0.0);
  for (int l = 2; l <= 256; ++l) EXPECT_GT(s[l], 0.0);
  EXPECT_GT(s[2], s[100]);
}

TEST(Spectrum, FileRoundTrip) {
  const auto s = power_law_spectrum(3.5, 2.0, 20);
  std::ostringstream out;
  write_spectrum(out, s);
  std::istringstream in(out.str());
  const auto t = read_spectrum(in);
  EXPECT_EQ(t.cl, s.cl);
}

TEST(Covariance, Examples) {
  const auto zero = spectrum_from_table(std::vector<double>(10, 0.0));
  EXPECT_EQ(covariance_function(zero, 0.3), 0.0);
  const auto c1 = spectrum_from_table({0.0, 1.0});
  for (double t : {-1.0, -0.4, 0.0, 0.6, 1.0}) EXPECT_NEAR(covariance_function(c1, t), 3.0 / (4 * kPi) * t, 1e-15);
  const auto s = power_law_spectrum(3.0, 1.0, 40);
  double k1 = 0.0;
  for (int l = 1; l <= 40; ++l) k1 += s[l] * (2.0 * l + 1) / (4 * kPi);
  EXPECT_NEAR(covariance_function(s, 1.0), k1, 1e-14);
}

TEST(SampleAlm, ZeroSpectrumAndDeterminism) {
  const auto zero = spectrum_from_table(std::vector<double>(8, 0.0));
  const auto silent = sample_alm(zero, 1);
  for (auto v : silent.values()) EXPECT_EQ(v, std::complex<double>(0.0, 0.0));
  const auto s = power_law_spectrum(3.0, 1.0, 30);
  EXPECT_EQ(sample_alm(s, 77), sample_alm(s, 77));
  EXPECT_FALSE(sample_alm(s, 77) == sample_alm(s, 78));
  const auto a = sample_alm(s, 77);
  EXPECT_NO_THROW(a.check_real_field());
  for (int l = 0; l <= 30; ++l) EXPECT_EQ(a(l, 0).imag(), 0.0);
}

TEST(SampleAlm, PrefixIndependentOfLMax) {
  const auto a = sample_alm(power_law_spectrum(3.0, 1.0, 10), 5);
  const auto b = sample_alm(power_law_spectrum(3.0, 1.0, 40), 5);
  for (int l = 0; l <= 10; ++l) {
    for (int m = 0; m <= l; ++m) EXPECT_EQ(a(l, m), b(l, m));
  }
}

TEST(SampleAlm, RealPartVarianceAndUncorrelated) {
  std::vector<double> cl(8, 0.0);
  cl[5] = 1.0;
  cl[3] = 1.0;
  const auto s = spectrum_from_table(cl);
  const std::size_t n = 4000;
  std::vector<double> sq(n), cross(n), cross2(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto a = sample_alm(s, derive_seed(2024, r));
    const double x = a(5, 2).real();
    sq[r] = x * x;
    cross[r] = (a(5, 2) * std::conj(a(5, 1))).real();
    cross2[r] = (a(5, 2) * std::conj(a(3, 2))).real();
  }
  const auto v = oracle::mean_se(sq);
  EXPECT_LT(std::abs(v.mean - 0.5), 3 * v.se);
  const auto c = oracle::mean_se(cross);
  EXPECT_LT(std::abs(c.mean), 3 * c.se);
  const auto c2 = oracle::mean_se(cross2);
  EXPECT_LT(std::abs(c2.mean), 3 * c2.se);
}

TEST(SimulateField, CovarianceMatchesKernel) {
  const auto s = power_law_spectrum(3.0, 1.0, 8);
  const auto g = build_grid(16);
  const std::size_t x = 10, y = 47;
  const auto ux = g.unit_vectors()[x], uy = g.unit_vectors()[y];
  const double t = ux[0] * uy[0] + ux[1] * uy[1] + ux[2] * uy[2];
  const std::size_t n = 2000;
  std::vector<double> prod(n), var(n), mean(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto f = simulate_field(s, g, derive_seed(99, r));
    prod[r] = f[x] * f[y];
    var[r] = f[x] * f[x];
    double m = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) m += g.weights()[k] * f[k];
    mean[r] = m / (4 * kPi);
  }
  const auto p = oracle::mean_se(prod);
  EXPECT_LT(std::abs(p.mean - covariance_function(s, t)), 3 * p.se);
  const auto v = oracle::mean_se(var);
  EXPECT_LT(std::abs(v.mean - covariance_function(s, 1.0)), 3 * v.se);
  const auto m = oracle::mean_se(mean);
  EXPECT_LT(std::abs(m.mean), 3 * m.se + 1e-15);
}

TEST(SimulateField, IsotropyAtEqualSeparation) {
  const auto s = power_law_spectrum(3.0, 1.0, 6);
  const double sep = 0.6;
  std::vector<std::pair<SpherePoint, SpherePoint>> pairs;
  for (int i = 0; i < 10; ++i) {
    const double th = 0.3 + 0.2 * i;
    const double ph = 0.7 * i;
    pairs.emplace_back(SpherePoint::make(th, ph), SpherePoint::make(th + sep, ph));
  }
  const std::size_t n = 2000;
  std::vector<std::vector<double>> prod(pairs.size(), std::vector<double>(n));
  for (std::size_t r = 0; r < n; ++r) {
    const auto a = sample_alm(s, derive_seed(123, r));
    std::vector<SpherePoint> pts;
    for (const auto& [p, q] : pairs) {
      pts.push_back(p);
      pts.push_back(q);
    }
    const auto f = synthesize(a, pts);
    for (std::size_t i = 0; i < pairs.size(); ++i) prod[i][r] = f[2 * i] * f[2 * i + 1];
  }
  const double expect = covariance_function(s, std::cos(sep));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto p = oracle::mean_se(prod[i]);
    EXPECT_LT(std::abs(p.mean - expect), 3 * p.se) << i;
    for (std::size_t k = 0; k < i; ++k) {
      const auto q = oracle::mean_se(prod[k]);
      EXPECT_LT(std::abs(p.mean - q.mean), 3 * std::hypot(p.se, q.se)) << i << ' ' << k;
    }
  }
}

TEST(SimulateField, SeedContractAndPrecondition) {
  const auto s = power_law_spectrum(3.0, 1.0, 10);
  const auto g = build_grid(20);
  EXPECT_EQ(simulate_field(s, g, 3), simulate_field(s, g, 3));
  EXPECT_NE(simulate_field(s, g, 3), simulate_field(s, g, 4));
  EXPECT_THROW(simulate_field(s, build_grid(19), 3), PreconditionError);
}
