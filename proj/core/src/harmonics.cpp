#include "needlets/harmonics.hpp"

#include "needlets/error.hpp"
#include "needlets/table_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace needlets {

namespace {

// Mantissas are renormalized by 2^kRescaleBits whenever they leave
// [2^-kRescaleBits, 2^kRescaleBits] while an exponent offset is pending.
constexpr int kRescaleBits = 256;
const double kBig = std::ldexp(1.0, kRescaleBits);
const double kSmall = std::ldexp(1.0, -kRescaleBits);

void check_degree(int l_max) {
  if (l_max < 0) throw InvalidArgument(fmt::format("degree must be >= 0, got {}", l_max));
  if (l_max > kMaxHarmonicDegree) {
    throw ResourceLimit(fmt::format("degree {} exceeds the harmonic cap {}", l_max, kMaxHarmonicDegree));
  }
}

// Cosine/sine of 2 pi i / n for i in [0, n), indexed by (m * k) mod n.
struct TrigTable {
  std::vector<double> c;
  std::vector<double> s;
  explicit TrigTable(int n) : c(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n)) {
    for (int i = 0; i < n; ++i) {
      const double a = 2.0 * kPi * i / n;
      c[static_cast<std::size_t>(i)] = std::cos(a);
      s[static_cast<std::size_t>(i)] = std::sin(a);
    }
  }
};

}  // namespace

double legendre_kernel(int l, double t) {
  if (l < 0) throw InvalidArgument(fmt::format("Legendre degree must be >= 0, got {}", l));
  if (!(std::abs(t) <= 1.0 + 1e-12)) {
    throw InvalidArgument(fmt::format("Legendre argument {} outside [-1, 1]", t));
  }
  t = std::clamp(t, -1.0, 1.0);
  double p_prev = 1.0;
  double p = t;
  if (l == 0) return 1.0 / kFourPi;
  for (int k = 1; k < l; ++k) {
    const double next = ((2.0 * k + 1.0) * t * p - k * p_prev) / (k + 1.0);
    p_prev = p;
    p = next;
  }
  return (2.0 * l + 1.0) / kFourPi * p;
}

double kernel_series(std::span<const double> coeffs, double t) {
  if (coeffs.empty()) return 0.0;
  t = std::clamp(t, -1.0, 1.0);
  double sum = coeffs[0];  // P_0 = 1, (2*0+1) = 1
  double p_prev = 1.0;
  double p = t;
  for (std::size_t l = 1; l < coeffs.size(); ++l) {
    sum += coeffs[l] * (2.0 * static_cast<double>(l) + 1.0) * p;
    const double k = static_cast<double>(l);
    const double next = ((2.0 * k + 1.0) * t * p - k * p_prev) / (k + 1.0);
    p_prev = p;
    p = next;
  }
  return sum / kFourPi;
}

AssociatedLegendre::AssociatedLegendre(int l_max) : l_max_(l_max) {
  check_degree(l_max);
  a_.assign(table_size(l_max), 0.0);
  b_.assign(table_size(l_max), 0.0);
  for (int m = 0; m <= l_max; ++m) {
    for (int l = m + 2; l <= l_max; ++l) {
      const double ll = l;
      const double mm = m;
      a_[index(l, m)] = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
      b_[index(l, m)] =
          std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
    }
  }
}

void AssociatedLegendre::evaluate_order(double x, int m, std::span<double> out) const {
  x = std::clamp(x, -1.0, 1.0);
  const double s = std::sqrt((1.0 - x) * (1.0 + x));
  const auto count = static_cast<std::size_t>(l_max_ - m + 1);
  if (m > l_max_ || out.size() < count) throw InvalidArgument("evaluate_order: bad order or buffer");

  if (m > 0 && s == 0.0) {
    std::fill_n(out.begin(), count, 0.0);
    return;
  }

  // Sectoral seed Pbar_m^m as mantissa * 2^exponent.
  double seed = 1.0 / std::sqrt(kFourPi);
  int exponent = 0;
  for (int i = 1; i <= m; ++i) {
    seed *= -std::sqrt((2.0 * i + 1.0) / (2.0 * i)) * s;
    if (std::abs(seed) < kSmall) {
      seed *= kBig;
      exponent -= kRescaleBits;
    }
  }

  auto emit = [&](double v) { return exponent == 0 ? v : std::ldexp(v, exponent); };

  double p2 = seed;  // Pbar_{l-2}
  out[0] = emit(p2);
  if (m == l_max_) return;
  double p1 = std::sqrt(2.0 * m + 3.0) * x * seed;  // Pbar_{m+1}^m
  out[1] = emit(p1);
  for (int l = m + 2; l <= l_max_; ++l) {
    const std::size_t idx = index(l, m);
    const double p = a_[idx] * (x * p1 - b_[idx] * p2);
    p2 = p1;
    p1 = p;
    if (exponent < 0 && std::abs(p1) > kBig) {
      p1 *= kSmall;
      p2 *= kSmall;
      exponent += kRescaleBits;
    }
    out[static_cast<std::size_t>(l - m)] = emit(p1);
  }
}

void AssociatedLegendre::evaluate(double x, std::span<double> out) const {
  if (out.size() < table_size(l_max_)) throw InvalidArgument("AssociatedLegendre: buffer too small");
  std::vector<double> column(static_cast<std::size_t>(l_max_) + 1);
  for (int m = 0; m <= l_max_; ++m) {
    evaluate_order(x, m, column);
    for (int l = m; l <= l_max_; ++l) out[index(l, m)] = column[static_cast<std::size_t>(l - m)];
  }
}

std::complex<double> ylm(int l, int m, const SpherePoint& p) {
  if (l < 0 || std::abs(m) > l) {
    throw InvalidArgument(fmt::format("spherical harmonic needs |m| <= l, got l={}, m={}", l, m));
  }
  check_degree(l);
  const int am = std::abs(m);
  AssociatedLegendre legendre(l);
  std::vector<double> column(static_cast<std::size_t>(l - am) + 1);
  legendre.evaluate_order(std::cos(p.theta), am, column);
  const std::complex<double> value = column.back() * std::polar(1.0, am * p.phi);
  if (m >= 0) return value;
  return (am % 2 == 0 ? 1.0 : -1.0) * std::conj(value);
}

HarmonicCoefficients::HarmonicCoefficients(int l_max) : l_max_(l_max) {
  check_degree(l_max);
  a_.assign(AssociatedLegendre::table_size(l_max), {0.0, 0.0});
}

std::complex<double> HarmonicCoefficients::at(int l, int m) const {
  if (l < 0 || l > l_max_ || std::abs(m) > l) {
    throw InvalidArgument(fmt::format("coefficient ({}, {}) outside l_max {}", l, m, l_max_));
  }
  if (m >= 0) return a_[index(l, m)];
  const auto v = std::conj(a_[index(l, -m)]);
  return (m % 2 == 0) ? v : -v;
}

void HarmonicCoefficients::check_real_field() const {
  double scale = 1.0;
  for (const auto& v : a_) scale = std::max(scale, std::abs(v));
  for (int l = 0; l <= l_max_; ++l) {
    if (std::abs(a_[index(l, 0)].imag()) > 1e-12 * scale) {
      throw InvalidArgument(
          fmt::format("a_({},0) has imaginary part {}; conjugation rule violated", l,
                      a_[index(l, 0)].imag()));
    }
  }
}

std::vector<double> synthesize(const HarmonicCoefficients& coeffs,
                               std::span<const SpherePoint> points) {
  coeffs.check_real_field();
  const int l_max = coeffs.l_max();
  const AssociatedLegendre legendre(l_max);
  std::vector<double> column(static_cast<std::size_t>(l_max) + 1);
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double x = std::cos(points[i].theta);
    double value = 0.0;
    for (int m = 0; m <= l_max; ++m) {
      legendre.evaluate_order(x, m, column);
      std::complex<double> f{0.0, 0.0};
      for (int l = m; l <= l_max; ++l) f += coeffs(l, m) * column[static_cast<std::size_t>(l - m)];
      const auto term = f * std::polar(1.0, m * points[i].phi);
      value += (m == 0 ? 1.0 : 2.0) * term.real();
    }
    out[i] = value;
  }
  return out;
}

std::vector<double> synthesize(const HarmonicCoefficients& coeffs, const CubatureGrid& grid,
                               std::span<const double> degree_filter) {
  coeffs.check_real_field();
  const int l_max = coeffs.l_max();
  const int n_lon = grid.longitude_count();
  const AssociatedLegendre legendre(l_max);
  const TrigTable trig(n_lon);

  // Degrees whose (filtered) coefficients can be nonzero.
  int l_lo = 0;
  int l_hi = l_max;
  auto filter = [&](int l) {
    if (degree_filter.empty()) return 1.0;
    return static_cast<std::size_t>(l) < degree_filter.size() ? degree_filter[static_cast<std::size_t>(l)] : 0.0;
  };
  if (!degree_filter.empty()) {
    while (l_lo <= l_max && filter(l_lo) == 0.0) ++l_lo;
    while (l_hi >= l_lo && filter(l_hi) == 0.0) --l_hi;
  }

  std::vector<double> out(grid.size(), 0.0);
  if (l_lo > l_hi) return out;

  std::vector<double> column(static_cast<std::size_t>(l_max) + 1);
  std::vector<std::complex<double>> f(static_cast<std::size_t>(l_hi) + 1);
  for (int r = 0; r < grid.ring_count(); ++r) {
    const double x = grid.ring_cos(r);
    for (int m = 0; m <= l_hi; ++m) {
      legendre.evaluate_order(x, m, column);
      std::complex<double> acc{0.0, 0.0};
      for (int l = std::max(m, l_lo); l <= l_hi; ++l) {
        acc += filter(l) * coeffs(l, m) * column[static_cast<std::size_t>(l - m)];
      }
      f[static_cast<std::size_t>(m)] = acc;
    }
    for (int k = 0; k < n_lon; ++k) {
      double value = f[0].real();
      for (int m = 1; m <= l_hi; ++m) {
        const auto t = static_cast<std::size_t>((static_cast<long>(m) * k) % n_lon);
        value += 2.0 * (f[static_cast<std::size_t>(m)].real() * trig.c[t] -
                        f[static_cast<std::size_t>(m)].imag() * trig.s[t]);
      }
      out[grid.index(r, k)] = value;
    }
  }
  return out;
}

HarmonicCoefficients analyze(std::span<const double> field, const CubatureGrid& grid, int l_max) {
  check_degree(l_max);
  if (field.size() != grid.size()) {
    throw InvalidArgument(fmt::format("field has {} samples but grid has {} points", field.size(),
                                      grid.size()));
  }
  if (grid.degree() < 2 * l_max) {
    throw PreconditionError(fmt::format("analysis to l_max {} needs grid degree >= {}, grid has {}",
                                        l_max, 2 * l_max, grid.degree()));
  }
  const int n_lon = grid.longitude_count();
  const AssociatedLegendre legendre(l_max);
  const TrigTable trig(n_lon);
  const double dphi = 2.0 * kPi / n_lon;

  HarmonicCoefficients out(l_max);
  std::vector<double> column(static_cast<std::size_t>(l_max) + 1);
  std::vector<std::complex<double>> g(static_cast<std::size_t>(l_max) + 1);
  for (int r = 0; r < grid.ring_count(); ++r) {
    const double w = grid.ring_gauss_weight(r) * dphi;
    for (int m = 0; m <= l_max; ++m) {
      double re = 0.0;
      double im = 0.0;
      for (int k = 0; k < n_lon; ++k) {
        const auto t = static_cast<std::size_t>((static_cast<long>(m) * k) % n_lon);
        const double v = field[grid.index(r, k)];
        re += v * trig.c[t];
        im -= v * trig.s[t];
      }
      g[static_cast<std::size_t>(m)] = {w * re, w * im};
    }
    const double x = grid.ring_cos(r);
    for (int m = 0; m <= l_max; ++m) {
      legendre.evaluate_order(x, m, column);
      for (int l = m; l <= l_max; ++l) {
        out(l, m) += g[static_cast<std::size_t>(m)] * column[static_cast<std::size_t>(l - m)];
      }
    }
  }
  return out;
}

void write_coefficients(std::ostream& out, const HarmonicCoefficients& coeffs) {
  out << "# needlets harmonic coefficients format-version: " << kTableFormatVersion << '\n';
  out << "l_max " << coeffs.l_max() << '\n';
  for (int l = 0; l <= coeffs.l_max(); ++l) {
    for (int m = 0; m <= l; ++m) {
      out << l << '\t' << m << '\t' << format_double(coeffs(l, m).real()) << '\t'
          << format_double(coeffs(l, m).imag()) << '\n';
    }
  }
}

HarmonicCoefficients read_coefficients(std::istream& in) {
  std::string line;
  if (!next_data_line(in, line)) throw InvalidArgument("coefficient file is empty");
  std::istringstream header(line);
  std::string key;
  int l_max = -1;
  header >> key >> l_max;
  if (key != "l_max" || header.fail()) throw InvalidArgument("coefficient file lacks 'l_max' header");
  HarmonicCoefficients coeffs(l_max);
  while (next_data_line(in, line)) {
    std::istringstream row(line);
    int l = 0;
    int m = 0;
    double re = 0.0;
    double im = 0.0;
    if (!(row >> l >> m >> re >> im)) throw InvalidArgument("malformed coefficient row: " + line);
    if (l < 0 || l > l_max || m < 0 || m > l) {
      throw InvalidArgument(fmt::format("coefficient row ({}, {}) outside l_max {}", l, m, l_max));
    }
    coeffs(l, m) = {re, im};
  }
  return coeffs;
}

}  // namespace needlets
