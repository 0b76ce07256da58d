#include "oracles.hpp"

#include <needlets/error.hpp>
#include <needlets/filter_bank.hpp>
#include <needlets/sphere_geom.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

using namespace needlets;

namespace {

std::complex<double> cubature(const CubatureGrid& g, int l, int m, int l2, int m2) {
  std::complex<double> s = 0.0;
  const auto pts = g.points();
  for (std::size_t k = 0; k < g.size(); ++k) {
    s += g.weights()[k] * oracle::ylm(l, m, pts[k].theta, pts[k].phi) *
         std::conj(oracle::ylm(l2, m2, pts[k].theta, pts[k].phi));
  }
  return s;
}

}  // namespace

TEST(SpherePoint, UnitVectorAndNormalization) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> th(0.0, kPi), ph(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const auto p = SpherePoint::make(th(gen), ph(gen));
    EXPECT_GE(p.phi, 0.0);
    EXPECT_LT(p.phi, 2.0 * kPi);
    const auto u = p.unit();
    EXPECT_NEAR(u[0] * u[0] + u[1] * u[1] + u[2] * u[2], 1.0, 1e-12);
    const auto q = SpherePoint::from_unit(u);
    EXPECT_NEAR(q.theta, p.theta, 1e-12);
  }
  EXPECT_THROW(SpherePoint::make(-0.1, 0.0), InvalidArgument);
  EXPECT_THROW(SpherePoint::make(3.2, 0.0), InvalidArgument);
  EXPECT_THROW(SpherePoint::make(1.0, std::nan("")), InvalidArgument);
}

TEST(Geodesic, Examples) {
  const auto n = SpherePoint::make(0.0, 0.0);
  const auto s = SpherePoint::make(kPi, 0.0);
  const auto a = SpherePoint::make(kPi / 2, 0.0);
  const auto b = SpherePoint::make(kPi / 2, kPi / 2);
  EXPECT_EQ(geodesic_distance(a, a), 0.0);
  EXPECT_NEAR(geodesic_distance(n, s), kPi, 1e-15);
  EXPECT_NEAR(geodesic_distance(a, b), kPi / 2, 1e-15);
}

TEST(Geodesic, StableForTinySeparation) {
  const auto a = SpherePoint::make(1.0, 0.3);
  const auto b = SpherePoint::make(1.0 + 1e-9, 0.3);
  EXPECT_NEAR(geodesic_distance(a, b), 1e-9, 1e-15);
  const auto c = SpherePoint::make(kPi - 1.0 - 1e-9, 0.3 + kPi);
  EXPECT_NEAR(geodesic_distance(a, c), kPi - 1e-9, 1e-15);
}

TEST(Geodesic, SymmetricAndTriangle) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> th(0.0, kPi), ph(0.0, 2 * kPi);
  for (int i = 0; i < 500; ++i) {
    const auto p = SpherePoint::make(th(gen), ph(gen));
    const auto q = SpherePoint::make(th(gen), ph(gen));
    const auto r = SpherePoint::make(th(gen), ph(gen));
    EXPECT_EQ(geodesic_distance(p, q), geodesic_distance(q, p));
    EXPECT_LE(geodesic_distance(p, r), geodesic_distance(p, q) + geodesic_distance(q, r) + 1e-14);
    const auto u = p.unit(), v = q.unit();
    const double via_acos = std::acos(std::clamp(std::inner_product(u.begin(), u.end(), v.begin(), 0.0), -1.0, 1.0));
    EXPECT_NEAR(geodesic_distance(p, q), via_acos, 1e-7);
  }
}

TEST(Grid, WeightsPositiveAndSumToFourPi) {
  for (int L = 0; L <= 40; ++L) {
    const auto g = build_grid(L);
    EXPECT_EQ(g.degree(), L);
    EXPECT_EQ(g.ring_count(), (L + 2) / 2);
    EXPECT_EQ(g.longitude_count(), L + 1);
    EXPECT_EQ(g.size(), static_cast<std::size_t>(g.ring_count() * g.longitude_count()));
    double sum = 0.0;
    for (double w : g.weights()) {
      EXPECT_GT(w, 0.0);
      sum += w;
    }
    EXPECT_NEAR(sum, 4 * kPi, 1e-10) << L;
  }
  EXPECT_THROW(build_grid(-1), InvalidArgument);
}

TEST(Grid, DegreeTwoKillsY10) {
  EXPECT_LT(std::abs(cubature(build_grid(2), 1, 0, 0, 0)), 1e-12);
}

TEST(Grid, RandomPairExactness) {
  const int L = 24;
  const auto g = build_grid(L);
  std::mt19937_64 gen(9);
  for (int i = 0; i < 60; ++i) {
    const int l = std::uniform_int_distribution<int>(0, L)(gen);
    const int l2 = std::uniform_int_distribution<int>(0, L - l)(gen);
    const int m = std::uniform_int_distribution<int>(-l, l)(gen);
    const int m2 = std::uniform_int_distribution<int>(-l2, l2)(gen);
    const double expect = (l == l2 && m == m2) ? 1.0 : 0.0;
    EXPECT_LT(std::abs(cubature(g, l, m, l2, m2) - expect), 1e-9) << l << ' ' << m << ' ' << l2 << ' ' << m2;
  }
}

TEST(Grid, ExactnessFailsAboveDegree) {
  // Y_{L+1} products are not integrated exactly, which shows the degree is tight.
  const auto g = build_grid(8);
  EXPECT_GT(std::abs(cubature(g, 5, 0, 5, 0) - 1.0), 1e-6);
}

TEST(ScaleGrid, DegreeAndTag) {
  const auto g = grid_for_scale(3, 2.0);
  EXPECT_EQ(g.degree(), 32);
  ASSERT_TRUE(g.scale().has_value());
  EXPECT_EQ(*g.scale(), 3);
  EXPECT_DOUBLE_EQ(g.n_scale() * g.n_scale(), static_cast<double>(g.size()));
  EXPECT_EQ(scale_grid_degree(3, 2.0), 32);
  EXPECT_EQ(scale_grid_degree(11, 1.5), static_cast<int>(std::ceil(2 * std::pow(1.5, 12))));
  EXPECT_FALSE(build_grid(5).scale().has_value());
}

TEST(ScaleGrid, ResourceLimit) {
  EXPECT_THROW(grid_for_scale(10, 2.0), ResourceLimit);
  EXPECT_THROW(grid_for_scale(4, 2.0, 32), ResourceLimit);
  EXPECT_THROW(grid_for_scale(-1, 2.0), InvalidArgument);
}

TEST(ScaleGrid, PointCountScaling) {
  for (int j = 2; j <= 6; ++j) {
    const auto g = grid_for_scale(j, 2.0);
    const double ratio = std::log(static_cast<double>(g.size())) / (2.0 * j * std::log(2.0));
    EXPECT_GE(ratio, 0.5) << j;
    EXPECT_LE(ratio, 2.0) << j;
    const double c = g.count_constant(2.0);
    EXPECT_GE(static_cast<double>(g.size()), std::pow(2.0, 2 * j) / c * (1 - 1e-12));
    EXPECT_LE(static_cast<double>(g.size()), std::pow(2.0, 2 * j) * c * (1 + 1e-12));
  }
}

TEST(KernelRowSum, Basics) {
  const auto single = build_grid(0);
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(kernel_row_sum(single, 0, 3.0, 2.0, 0), 1.0);
  const auto g = grid_for_scale(2, 2.0);
  for (std::size_t k = 0; k < g.size(); k += 7) EXPECT_GE(kernel_row_sum(g, k, 3.0, 2.0, 2), 1.0);
  EXPECT_THROW(kernel_row_sum(g, 0, 2.5, 2.0, 2), InvalidArgument);
  EXPECT_THROW(kernel_row_sum(g, g.size(), 3.0, 2.0, 2), InvalidArgument);
}

TEST(KernelRowSum, BoundedAcrossScales) {
  std::vector<double> maxima;
  for (int j = 3; j <= 5; ++j) {
    const auto g = grid_for_scale(j, 2.0);
    double worst = 0.0;
    // Row sums depend only on the ring; one point per ring covers every row.
    for (int r = 0; r < g.ring_count(); ++r) worst = std::max(worst, kernel_row_sum(g, g.index(r, 0), 3.0, 2.0, j));
    maxima.push_back(worst);
  }
  const auto [lo, hi] = std::minmax_element(maxima.begin(), maxima.end());
  EXPECT_LT(*hi / *lo, 2.0);
}

TEST(GridIo, OneRowPerPoint) {
  const auto g = build_grid(3);
  std::ostringstream out;
  write_grid(out, g);
  std::istringstream in(out.str());
  std::string line;
  std::size_t rows = 0;
  double wsum = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("theta", 0) == 0) continue;
    std::istringstream f(line);
    double t, p, w;
    f >> t >> p >> w;
    ASSERT_FALSE(f.fail()) << line;
    wsum += w;
    ++rows;
  }
  EXPECT_EQ(rows, g.size());
  EXPECT_NEAR(wsum, 4 * kPi, 1e-12);
}
