#include "needlets/filter_bank.hpp"

#include "needlets/error.hpp"
#include "needlets/table_io.hpp"

// Boost 1.74 pchip calls isnan unqualified.
#include <math.h>

#include <boost/math/interpolators/pchip.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

namespace needlets {

namespace {

double bump(double t) {
  if (t <= -1.0 || t >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - t * t));
}

std::vector<double> knots(int resolution) {
  std::vector<double> u(static_cast<std::size_t>(resolution));
  const double h = 2.0 / (resolution - 1);
  for (int i = 0; i < resolution; ++i) u[static_cast<std::size_t>(i)] = -1.0 + h * i;
  u.back() = 1.0;
  return u;
}

}  // namespace

std::vector<double> build_bump_table(int resolution) {
  if (resolution < FilterProfile::kMinResolution) {
    throw InvalidArgument(fmt::format("bump table resolution must be >= {}, got {}",
                                      FilterProfile::kMinResolution, resolution));
  }
  const auto u = knots(resolution);
  std::vector<double> table(u.size(), 0.0);
  double acc = 0.0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    const double a = u[i - 1];
    const double b = u[i];
    acc += (b - a) / 6.0 * (bump(a) + 4.0 * bump(0.5 * (a + b)) + bump(b));
    table[i] = acc;
  }
  const double total = acc;
  for (auto& v : table) v /= total;
  table.front() = 0.0;
  table.back() = 1.0;
  return table;
}

struct FilterProfile::Impl {
  double bandwidth;
  std::vector<double> table;
  boost::math::interpolators::pchip<std::vector<double>> interpolant;

  mutable std::mutex cache_mutex;
  mutable std::map<std::pair<int, int>, std::vector<double>> weight_cache;

  Impl(double B, std::vector<double> t)
      : bandwidth(B),
        table(t),
        interpolant(knots(static_cast<int>(t.size())), std::move(t)) {}
};

FilterProfile::FilterProfile(double bandwidth, std::vector<double> transition_table) {
  if (!(bandwidth > 1.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument(fmt::format("bandwidth B must satisfy B > 1, got {}", bandwidth));
  }
  if (transition_table.size() < static_cast<std::size_t>(kMinResolution)) {
    throw InvalidArgument(fmt::format("transition table needs >= {} samples, got {}",
                                      kMinResolution, transition_table.size()));
  }
  if (transition_table.front() != 0.0 || transition_table.back() != 1.0 ||
      !std::is_sorted(transition_table.begin(), transition_table.end())) {
    throw InvalidArgument("transition table must be nondecreasing from 0 to 1");
  }
  impl_ = std::make_shared<const Impl>(bandwidth, std::move(transition_table));
}

double FilterProfile::bandwidth() const noexcept { return impl_->bandwidth; }

int FilterProfile::resolution() const noexcept { return static_cast<int>(impl_->table.size()); }

const std::vector<double>& FilterProfile::transition_table() const noexcept { return impl_->table; }

double FilterProfile::psi(double u) const {
  if (u <= -1.0) return 0.0;
  if (u >= 1.0) return 1.0;
  // PCHIP never overshoots monotone data, but rounding can leave it a few ulps
  // outside [0, 1].
  return std::clamp(impl_->interpolant(u), 0.0, 1.0);
}

double FilterProfile::phi(double xi) const {
  const double x = std::abs(xi);
  const double inv_b = 1.0 / impl_->bandwidth;
  if (x <= inv_b) return 1.0;
  if (x >= 1.0) return 0.0;
  return psi(1.0 - 2.0 * (x - inv_b) / (1.0 - inv_b));
}

double FilterProfile::b_squared(double xi) const { return phi(xi / impl_->bandwidth) - phi(xi); }

double FilterProfile::b(double xi) const {
  const double d = b_squared(xi);
  if (d >= 0.0) return std::sqrt(d);
  if (d >= -kClampTolerance) return 0.0;
  throw ConsistencyError(
      fmt::format("window table corrupt: b^2({}) = {} is negative", xi, d));
}

const std::vector<double>& FilterProfile::window_weights(int j, int l_max) const {
  if (j < 0) throw InvalidArgument(fmt::format("scale index must be >= 0, got {}", j));
  if (l_max < 1) throw InvalidArgument(fmt::format("l_max must be >= 1, got {}", l_max));

  std::lock_guard lock(impl_->cache_mutex);
  auto [it, inserted] = impl_->weight_cache.try_emplace({j, l_max});
  if (inserted) {
    const double scale = std::pow(impl_->bandwidth, j);
    auto& w = it->second;
    w.resize(static_cast<std::size_t>(l_max) + 1);
    for (int l = 0; l <= l_max; ++l) w[static_cast<std::size_t>(l)] = b(l / scale);
  }
  return it->second;
}

std::pair<double, double> FilterProfile::support(int j) const {
  return {std::pow(impl_->bandwidth, j - 1), std::pow(impl_->bandwidth, j + 1)};
}

std::pair<int, int> FilterProfile::degree_range(int j) const {
  const auto [lo, hi] = support(j);
  return {std::max(0, static_cast<int>(std::floor(lo))), static_cast<int>(std::ceil(hi))};
}

FilterProfile build_profile(double bandwidth, int resolution) {
  if (!(bandwidth > 1.0) || !std::isfinite(bandwidth)) {
    throw InvalidArgument(fmt::format("bandwidth B must satisfy B > 1, got {}", bandwidth));
  }
  return FilterProfile(bandwidth, build_bump_table(resolution));
}

double eval_b(const FilterProfile& profile, double xi) {
  if (!(xi >= 0.0)) throw InvalidArgument(fmt::format("eval_b needs xi >= 0, got {}", xi));
  return profile.b(xi);
}

const std::vector<double>& window_weights(const FilterProfile& profile, int j, int l_max) {
  return profile.window_weights(j, l_max);
}

double partition_of_unity_deviation(const FilterProfile& profile, int l_max) {
  const double B = profile.bandwidth();
  double worst = 0.0;
  for (int l = 1; l <= l_max; ++l) {
    double sum = 0.0;
    double scale = 1.0;  // B^j
    for (int j = 0; scale / B <= l_max; ++j, scale *= B) sum += profile.b_squared(l / scale);
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

void write_profile(std::ostream& out, const FilterProfile& profile) {
  out << "# needlets filter profile format-version: " << kTableFormatVersion << '\n';
  out << "B " << format_double(profile.bandwidth()) << '\n';
  out << "resolution " << profile.resolution() << '\n';
  for (double v : profile.transition_table()) out << format_double(v) << '\n';
}

FilterProfile read_profile(std::istream& in) {
  std::string line;
  double bandwidth = 0.0;
  long resolution = -1;
  std::vector<double> table;
  while (next_data_line(in, line)) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "B") {
      fields >> bandwidth;
    } else if (key == "resolution") {
      fields >> resolution;
    } else {
      table.push_back(std::stod(line));
    }
    if (fields.fail()) throw InvalidArgument("malformed profile header line: " + line);
  }
  if (resolution < 0 || static_cast<std::size_t>(resolution) != table.size()) {
    throw InvalidArgument(fmt::format("profile declares resolution {} but has {} samples",
                                      resolution, table.size()));
  }
  return FilterProfile(bandwidth, std::move(table));
}

}  // namespace needlets
