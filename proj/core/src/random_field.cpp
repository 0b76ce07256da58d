#include "needlets/random_field.hpp"

#include "needlets/error.hpp"
#include "needlets/rng.hpp"
#include "needlets/table_io.hpp"

#include <fmt/format.h>

#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

namespace needlets {

PowerSpectrum PowerSpectrum::scaled(double factor) const {
  PowerSpectrum out = *this;
  for (auto& c : out.cl) c *= factor;
  if (out.envelope) {
    out.envelope->c1 *= factor;
    out.envelope->c2 *= factor;
  }
  return out;
}

PowerSpectrum power_law_spectrum(double alpha, double amplitude, int l_max) {
  if (!(alpha > 2.0)) {
    throw InvalidArgument(fmt::format("power-law exponent must satisfy alpha > 2, got {}", alpha));
  }
  if (!(amplitude > 0.0)) throw InvalidArgument(fmt::format("amplitude must be > 0, got {}", amplitude));
  if (l_max < 0) throw InvalidArgument(fmt::format("l_max must be >= 0, got {}", l_max));
  PowerSpectrum s;
  s.cl.assign(static_cast<std::size_t>(l_max) + 1, 0.0);
  for (int l = 1; l <= l_max; ++l) s.cl[static_cast<std::size_t>(l)] = amplitude * std::pow(l, -alpha);
  s.envelope = SpectrumEnvelope{alpha, amplitude, amplitude};
  return s;
}

PowerSpectrum spectrum_from_table(std::vector<double> cl, std::optional<SpectrumEnvelope> envelope) {
  if (cl.empty()) throw InvalidArgument("spectrum table is empty");
  for (std::size_t l = 0; l < cl.size(); ++l) {
    if (!(cl[l] >= 0.0) || !std::isfinite(cl[l])) {
      throw InvalidArgument(fmt::format("C_{} = {} is not a nonnegative number", l, cl[l]));
    }
  }
  cl[0] = 0.0;
  if (envelope) {
    if (!(envelope->alpha > 2.0) || !(envelope->c1 > 0.0) || envelope->c2 < envelope->c1) {
      throw InvalidArgument("envelope needs alpha > 2 and 0 < c1 <= c2");
    }
    for (std::size_t l = 1; l < cl.size(); ++l) {
      const double p = std::pow(static_cast<double>(l), -envelope->alpha);
      // Relative slack for values that went through a decimal round trip.
      const double slack = 1e-12 * envelope->c2 * p;
      if (cl[l] < envelope->c1 * p - slack || cl[l] > envelope->c2 * p + slack) {
        throw InvalidArgument(fmt::format("C_{} = {} violates the envelope [{}, {}] l^-{}", l, cl[l],
                                          envelope->c1, envelope->c2, envelope->alpha));
      }
    }
  }
  return PowerSpectrum{std::move(cl), envelope};
}

PowerSpectrum cmb_like_spectrum(int l_max) {
  if (l_max < 0) throw InvalidArgument(fmt::format("l_max must be >= 0, got {}", l_max));
  std::vector<double> cl(static_cast<std::size_t>(l_max) + 1, 0.0);
  for (int l = 2; l <= l_max; ++l) {
    const double damping = std::exp(-std::pow(l / 400.0, 2));
    cl[static_cast<std::size_t>(l)] = 2.0 * kPi / (l * (l + 1.0)) * damping;
  }
  return spectrum_from_table(std::move(cl));
}

double covariance_function(const PowerSpectrum& spectrum, double t) {
  return kernel_series(spectrum.cl, t);
}

HarmonicCoefficients sample_alm(const PowerSpectrum& spectrum, std::uint64_t seed) {
  const int l_max = std::max(spectrum.l_max(), 0);
  HarmonicCoefficients a(l_max);
  for (int l = 1; l <= l_max; ++l) {
    const double c = spectrum.cl[static_cast<std::size_t>(l)];
    if (c == 0.0) continue;
    const double sd = std::sqrt(c);
    for (int m = 0; m <= l; ++m) {
      SplitMix64 stream(derive_seed(seed, static_cast<std::uint64_t>(l), static_cast<std::uint64_t>(m)));
      std::normal_distribution<double> gauss;
      const double u = gauss(stream);
      if (m == 0) {
        a(l, 0) = {sd * u, 0.0};
      } else {
        const double v = gauss(stream);
        a(l, m) = {sd * u / std::sqrt(2.0), sd * v / std::sqrt(2.0)};
      }
    }
  }
  return a;
}

std::vector<double> simulate_field(const PowerSpectrum& spectrum, const CubatureGrid& grid,
                                   std::uint64_t seed) {
  if (grid.degree() < 2 * spectrum.l_max()) {
    throw PreconditionError(fmt::format("simulation to l_max {} needs grid degree >= {}, grid has {}",
                                        spectrum.l_max(), 2 * spectrum.l_max(), grid.degree()));
  }
  return synthesize(sample_alm(spectrum, seed), grid);
}

void write_spectrum(std::ostream& out, const PowerSpectrum& spectrum) {
  write_table_header(out, "needlets power spectrum", {"l", "C_l"});
  for (int l = 0; l <= spectrum.l_max(); ++l) {
    out << l << '\t' << format_double(spectrum.cl[static_cast<std::size_t>(l)]) << '\n';
  }
}

PowerSpectrum read_spectrum(std::istream& in) {
  std::vector<double> cl;
  std::string line;
  bool first = true;
  while (next_data_line(in, line)) {
    std::istringstream row(line);
    long l = 0;
    double c = 0.0;
    if (!(row >> l >> c)) {
      if (first) {  // column header row
        first = false;
        continue;
      }
      throw InvalidArgument("malformed spectrum row: " + line);
    }
    first = false;
    if (l < 0 || l > kMaxHarmonicDegree) throw InvalidArgument(fmt::format("spectrum degree {} out of range", l));
    if (static_cast<std::size_t>(l) >= cl.size()) cl.resize(static_cast<std::size_t>(l) + 1, 0.0);
    cl[static_cast<std::size_t>(l)] = c;
  }
  return spectrum_from_table(std::move(cl));
}

}  // namespace needlets
