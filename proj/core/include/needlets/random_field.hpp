#pragma once

#include "needlets/harmonics.hpp"
#include "needlets/sphere_geom.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace needlets {

/// Power-law envelope c1 l^-alpha <= C_l <= c2 l^-alpha (constant-g case of
/// the regularity condition on the angular power spectrum).
struct SpectrumEnvelope {
  double alpha = 3.0;
  double c1 = 1.0;
  double c2 = 1.0;
};

/// Angular power spectrum C_0..C_{l_max} of a centered isotropic field.
/// C_0 is always 0 and every C_l >= 0. `envelope` is set only when the
/// table was checked against it.
struct PowerSpectrum {
  std::vector<double> cl;
  std::optional<SpectrumEnvelope> envelope;

  int l_max() const noexcept { return static_cast<int>(cl.size()) - 1; }
  double operator[](int l) const { return l >= 0 && l <= l_max() ? cl[static_cast<std::size_t>(l)] : 0.0; }
  bool compliant() const noexcept { return envelope.has_value(); }
  /// Same shape, every C_l multiplied by `factor`.
  PowerSpectrum scaled(double factor) const;
};

/// C_l = amplitude * l^-alpha for l >= 1, C_0 = 0, tagged compliant with
/// c1 = c2 = amplitude. Throws InvalidArgument unless alpha > 2 and amplitude > 0.
PowerSpectrum power_law_spectrum(double alpha, double amplitude, int l_max);

/// Wraps a user table. C_0 is forced to 0 (centered field); negative entries
/// are rejected. When `envelope` is given, every 1 <= l <= l_max must satisfy
/// it or InvalidArgument is thrown.
PowerSpectrum spectrum_from_table(std::vector<double> cl,
                                  std::optional<SpectrumEnvelope> envelope = std::nullopt);

/// Synthetic CMB-like stand-in: a Sachs-Wolfe plateau l(l+1) C_l = const with
/// Gaussian damping exp(-(l / 400)^2). Not fitted to any data set.
PowerSpectrum cmb_like_spectrum(int l_max);

/// K(t) = sum_{l>=1} C_l L_l(t), truncated at l_max.
double covariance_function(const PowerSpectrum& spectrum, double t);

/// Centered complex Gaussian a_lm with Var(a_lm) = C_l: a_l0 real N(0, C_l),
/// a_lm = sqrt(C_l/2)(u + i v) for m >= 1. Each (l, m) draws from its own
/// stream keyed by (seed, l, m), so the result is independent of evaluation
/// order and of the spectrum's l_max beyond l.
HarmonicCoefficients sample_alm(const PowerSpectrum& spectrum, std::uint64_t seed);

/// synthesize(sample_alm(spectrum, seed), grid). Requires grid degree >= 2 l_max.
std::vector<double> simulate_field(const PowerSpectrum& spectrum, const CubatureGrid& grid,
                                   std::uint64_t seed);

/// Two-column text "l C_l".
void write_spectrum(std::ostream& out, const PowerSpectrum& spectrum);
PowerSpectrum read_spectrum(std::istream& in);

}  // namespace needlets
