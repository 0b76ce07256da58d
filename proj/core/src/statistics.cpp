#include "needlets/statistics.hpp"

#include "needlets/error.hpp"
#include "needlets/parallel.hpp"
#include "needlets/rng.hpp"

#include <boost/math/tools/roots.hpp>
#include <fmt/format.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace needlets {

namespace {

// Upper normal tail 1 - Phi(x), accurate far into the tail.
double upper_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double factorial(int q) { return std::tgamma(q + 1.0); }

}  // namespace

double hermite(int q, double x) {
  if (q < 0 || q > kMaxHermiteOrder) {
    throw InvalidArgument(fmt::format("Hermite order must be in [0, {}], got {}", kMaxHermiteOrder, q));
  }
  if (q == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < q; ++k) {
    const double next = x * cur - k * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

HermiteWeights::HermiteWeights(Eigen::MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() == 0 || w_.cols() == 0) throw InvalidArgument("Hermite weight matrix is empty");
  if (w_.cols() > kMaxHermiteOrder) {
    throw InvalidArgument(fmt::format("Hermite order {} exceeds {}", w_.cols(), kMaxHermiteOrder));
  }
  if (!w_.allFinite()) throw InvalidArgument("Hermite weights must be finite");
  for (Eigen::Index u = 0; u < w_.rows(); ++u) {
    if (w_.row(u).isZero(0.0)) throw InvalidArgument(fmt::format("Hermite weight row {} is all zero", u + 1));
  }
  if (w_.rows() > 1) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(w_.transpose());
    if (lu.rank() < w_.rows()) throw InvalidArgument("Hermite weight rows are linearly dependent");
  }
}

HermiteWeights gof_presets() {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3, 4);
  w(0, 1) = 1.0;
  w(1, 0) = 3.0;
  w(1, 2) = 1.0;
  w(2, 1) = 6.0;
  w(2, 3) = 1.0;
  return HermiteWeights(std::move(w));
}

Eigen::VectorXd h_vector(const NeedletCoefficients& coeffs, const HermiteWeights& weights) {
  if (coeffs.beta_hat.size() != coeffs.beta.size() || coeffs.beta.empty()) {
    throw PreconditionError("h statistics need normalized coefficients");
  }
  const int U = weights.statistics();
  const int Q = weights.max_order();
  const Eigen::MatrixXd& w = weights.matrix();
  Eigen::VectorXd h = Eigen::VectorXd::Zero(U);
  Eigen::VectorXd H(Q);
  for (double x : coeffs.beta_hat) {
    double prev = 1.0;
    double cur = x;
    H(0) = x;
    for (int k = 1; k < Q; ++k) {
      const double next = x * cur - k * prev;
      prev = cur;
      cur = next;
      H(k) = cur;
    }
    h.noalias() += w * H;
  }
  return h / coeffs.grid.n_scale();
}

double h_statistic(const NeedletCoefficients& coeffs, const HermiteWeights& weights, int u) {
  if (u < 1 || u > weights.statistics()) {
    throw InvalidArgument(fmt::format("statistic index {} outside 1..{}", u, weights.statistics()));
  }
  return h_vector(coeffs, weights)(u - 1);
}

void check_omega(const Eigen::MatrixXd& omega) {
  if (omega.rows() != omega.cols() || omega.rows() == 0) throw InvalidArgument("Omega must be square and nonempty");
  if (!omega.allFinite()) throw AssumptionViolation("Omega has non-finite entries");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > kMinOmegaEigenvalue)) {
    throw AssumptionViolation(fmt::format("Omega is not positive definite (smallest eigenvalue {:.3g})", lo));
  }
  if (hi / lo > kMaxOmegaCondition) {
    throw AssumptionViolation(fmt::format("Omega is ill conditioned (condition number {:.3g})", hi / lo));
  }
}

Eigen::MatrixXd omega_matrix(const GammaPowerSums& sums, const HermiteWeights& weights) {
  const int U = weights.statistics();
  const int Q = weights.max_order();
  if (static_cast<int>(sums.sums.size()) < Q) {
    throw InvalidArgument(fmt::format("need power sums up to q = {}, have {}", Q, sums.sums.size()));
  }
  if (!(sums.point_count > 0.0)) throw InvalidArgument("power sums over an empty grid");
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(U, U);
  for (int u = 1; u <= U; ++u) {
    for (int v = u; v <= U; ++v) {
      double s = 0.0;
      for (int q = 1; q <= Q; ++q) {
        const double wu = weights(u, q);
        const double wv = weights(v, q);
        if (wu == 0.0 || wv == 0.0) continue;
        s += factorial(q) * wu * wv * sums.sums[static_cast<std::size_t>(q - 1)];
      }
      omega(u - 1, v - 1) = s / sums.point_count;
      omega(v - 1, u - 1) = omega(u - 1, v - 1);
    }
  }
  check_omega(omega);
  return omega;
}

Eigen::MatrixXd omega_matrix(const Eigen::MatrixXd& gamma, const HermiteWeights& weights) {
  if (gamma.rows() != gamma.cols()) throw InvalidArgument("correlation matrix must be square");
  return omega_matrix(gamma_power_sums(gamma, weights.max_order()), weights);
}

Eigen::MatrixXd inverse_sqrt(const Eigen::MatrixXd& omega) {
  check_omega(omega);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(omega);
  const Eigen::VectorXd inv = eig.eigenvalues().cwiseSqrt().cwiseInverse();
  return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

std::vector<double> WPath::component(int u) const {
  std::vector<double> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    if (u < 0 || u >= v.size()) throw InvalidArgument(fmt::format("path has no component {}", u));
    out.push_back(v(u));
  }
  return out;
}

WPath wj_path(std::span<const int> scales, std::span<const Eigen::VectorXd> standardized) {
  if (scales.empty()) throw InvalidArgument("W path needs at least one scale");
  if (scales.size() != standardized.size()) {
    throw InvalidArgument(fmt::format("{} scales but {} vectors", scales.size(), standardized.size()));
  }
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const int expected = 2 * static_cast<int>(i + 1);
    if (scales[i] != expected) {
      throw InvalidArgument(fmt::format("scale ladder must be 2, 4, ..., found {} where {} was expected", scales[i],
                                        expected));
    }
    if (standardized[i].size() != standardized[0].size()) throw InvalidArgument("vectors differ in length");
  }
  const auto m = static_cast<int>(scales.size());
  const double norm = 1.0 / std::sqrt(static_cast<double>(m));
  WPath path;
  path.r.push_back(0.0);
  path.values.push_back(Eigen::VectorXd::Zero(standardized[0].size()));
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(standardized[0].size());
  for (int i = 0; i < m; ++i) {
    acc += standardized[static_cast<std::size_t>(i)];
    path.r.push_back(static_cast<double>(i + 1) / m);
    path.values.push_back(norm * acc);
  }
  return path;
}

double brownian_sup_tail(double t) {
  if (!(t > 0.0)) return 1.0;
  if (t < 1.0) {
    // Theta-function form; the image series cancels badly here.
    double stay = 0.0;
    for (int k = 0;; ++k) {
      const double odd = 2.0 * k + 1.0;
      const double term = std::exp(-odd * odd * kPi * kPi / (8.0 * t * t)) / odd;
      stay += (k % 2 == 0) ? term : -term;
      if (term < 1e-18) break;
    }
    return std::clamp(1.0 - 4.0 / kPi * stay, 0.0, 1.0);
  }
  // k = 0 term gives 2 Q(t); terms k and -k coincide for k >= 1.
  double p = 2.0 * upper_tail(t);
  for (int k = 1;; ++k) {
    const double term = upper_tail((2.0 * k - 1.0) * t) - upper_tail((2.0 * k + 1.0) * t);
    p -= 2.0 * ((k % 2 == 1) ? -term : term);
    if (std::abs(term) < 1e-12 && (2.0 * k - 1.0) * t > 1.0) break;
  }
  return std::clamp(p, 0.0, 1.0);
}

double ks_threshold(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument(fmt::format("level must be in (0, 1), got {}", level));
  std::uintmax_t iterations = 200;
  const auto f = [level](double t) { return brownian_sup_tail(t) - level; };
  const auto [lo, hi] = boost::math::tools::toms748_solve(f, 1e-3, 20.0, boost::math::tools::eps_tolerance<double>(50),
                                                          iterations);
  return 0.5 * (lo + hi);
}

KsResult ks_test(std::span<const double> path) {
  if (path.empty()) throw InvalidArgument("KS test needs a nonempty path");
  KsResult out;
  for (double v : path) out.statistic = std::max(out.statistic, std::abs(v));
  out.p_value = brownian_sup_tail(out.statistic);
  return out;
}

KsResult ks_normal_test(std::span<const double> sample) {
  if (sample.empty()) throw InvalidArgument("KS test needs a nonempty sample");
  std::vector<double> x(sample.begin(), sample.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = normal_cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - F, F - static_cast<double>(i) / n});
  }
  const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0.0;
  if (lambda < 0.2) {
    p = 1.0;
  } else {
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      p += (k % 2 == 1 ? 2.0 : -2.0) * term;
      if (term < 1e-16) break;
    }
  }
  return {d, std::clamp(p, 0.0, 1.0)};
}

MomentSummary summarize_samples(Eigen::MatrixXd samples) {
  const auto R = samples.rows();
  const auto U = samples.cols();
  if (R < 2 || U < 1) throw InvalidArgument("need at least 2 replicates and one statistic");
  MomentSummary s;
  s.replicates = static_cast<std::size_t>(R);
  s.mean = samples.colwise().mean();
  const Eigen::MatrixXd centered = samples.rowwise() - s.mean.transpose();
  s.covariance = centered.transpose() * centered / static_cast<double>(R - 1);
  s.mean_se = (s.covariance.diagonal() / static_cast<double>(R)).cwiseSqrt();
  s.covariance_se.resize(U, U);
  for (Eigen::Index u = 0; u < U; ++u) {
    for (Eigen::Index v = 0; v < U; ++v) {
      const Eigen::ArrayXd prod = centered.col(u).array() * centered.col(v).array();
      const double m = prod.mean();
      const double var = (prod - m).square().sum() / static_cast<double>(R - 1);
      s.covariance_se(u, v) = std::sqrt(var / static_cast<double>(R));
    }
  }
  s.skewness.resize(U);
  s.excess_kurtosis.resize(U);
  for (Eigen::Index u = 0; u < U; ++u) {
    const Eigen::ArrayXd c = centered.col(u).array();
    const double m2 = c.square().mean();
    s.skewness(u) = c.cube().mean() / std::pow(m2, 1.5);
    s.excess_kurtosis(u) = c.square().square().mean() / (m2 * m2) - 3.0;
  }
  s.samples = std::move(samples);
  return s;
}

MomentSummary mc_moment_oracle(const PowerSpectrum& spectrum, const FilterProfile& profile, int j,
                               const HermiteWeights& weights, std::size_t replicates, std::uint64_t seed,
                               int workers) {
  if (replicates < 100) throw InvalidArgument(fmt::format("moment oracle needs >= 100 replicates, got {}", replicates));
  const CubatureGrid grid = grid_for_scale(j, profile.bandwidth());
  const auto variance = coeff_variance(spectrum, profile, j, grid);
  // Degrees above the window never reach the coefficients; the per-(l, m)
  // streams make the truncation invisible in the draws.
  const int top = window_top_degree(profile, j);
  const PowerSpectrum truncated =
      spectrum_from_table(std::vector<double>(spectrum.cl.begin(), spectrum.cl.begin() + top + 1));
  Eigen::MatrixXd samples(static_cast<Eigen::Index>(replicates), weights.statistics());
  parallel_for(replicates, workers, [&](std::size_t r) {
    auto coeffs = needlet_coeffs(sample_alm(truncated, derive_seed(seed, r)), profile, j, grid);
    coeffs.normalize(variance);
    samples.row(static_cast<Eigen::Index>(r)) = h_vector(coeffs, weights).transpose();
  });
  auto summary = summarize_samples(std::move(samples));
  summary.seed = seed;
  return summary;
}

GofPipeline::GofPipeline(PowerSpectrum spectrum, FilterProfile profile, std::vector<int> scales,
                         HermiteWeights weights, int component, int workers)
    : spectrum_(std::move(spectrum)),
      profile_(std::move(profile)),
      scales_(std::move(scales)),
      weights_(std::move(weights)),
      component_(component) {
  if (component_ < 0 || component_ >= weights_.statistics()) {
    throw InvalidArgument(fmt::format("tested component {} outside 0..{}", component_, weights_.statistics() - 1));
  }
  // Validate the ladder up front with placeholder vectors.
  std::vector<Eigen::VectorXd> probe(scales_.size(), Eigen::VectorXd::Zero(weights_.statistics()));
  wj_path(scales_, probe);
  for (int j : scales_) {
    const CubatureGrid grid = grid_for_scale(j, profile_.bandwidth());
    required_l_max_ = std::max(required_l_max_, window_top_degree(profile_, j));
    variances_.push_back(coeff_variance(spectrum_, profile_, j, grid));
    const auto sums = gamma_power_sums(spectrum_, profile_, j, grid, weights_.max_order(), workers);
    omegas_.push_back(omega_matrix(sums, weights_));
    whiteners_.push_back(inverse_sqrt(omegas_.back()));
    grids_.push_back(grid);
  }
}

StatisticsReport GofPipeline::run(const HarmonicCoefficients& alm, double level) const {
  if (alm.l_max() < required_l_max_) {
    throw PreconditionError(fmt::format("field carries degrees up to {}, the ladder needs {}", alm.l_max(),
                                        required_l_max_));
  }
  StatisticsReport report;
  report.level = level;
  report.threshold = ks_threshold(level);
  report.component = component_;
  std::vector<Eigen::VectorXd> standardized;
  for (std::size_t i = 0; i < scales_.size(); ++i) {
    auto coeffs = needlet_coeffs(alm, profile_, scales_[i], grids_[i]);
    coeffs.normalize(variances_[i]);
    ScaleStatistics s;
    s.j = scales_[i];
    s.h = h_vector(coeffs, weights_);
    s.omega = omegas_[i];
    s.standardized = whiteners_[i] * s.h;
    standardized.push_back(s.standardized);
    report.scales.push_back(std::move(s));
  }
  report.path = wj_path(scales_, standardized);
  report.ks = ks_test(report.path.component(component_));
  report.reject = report.ks.statistic > report.threshold;
  return report;
}

}  // namespace needlets
