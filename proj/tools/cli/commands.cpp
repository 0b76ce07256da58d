#include "cli/commands.hpp"

#include "needlets/error.hpp"
#include "needlets/filter_bank.hpp"
#include "needlets/harmonics.hpp"
#include "needlets/masking.hpp"
#include "needlets/needlet_transform.hpp"
#include "needlets/parallel.hpp"
#include "needlets/random_field.hpp"
#include "needlets/rng.hpp"
#include "needlets/sphere_geom.hpp"
#include "needlets/statistics.hpp"
#include "needlets/table_io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>

#ifndef NEEDLETS_VERSION
#define NEEDLETS_VERSION "unknown"
#endif

namespace needlets::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const std::set<std::string> kModelKeys = {"B", "resolution", "alpha", "amplitude", "spectrum", "spectrum_file",
                                          "l_max", "seed", "workers"};

std::set<std::string> keys_with(std::initializer_list<std::string> extra) {
  std::set<std::string> out = kModelKeys;
  out.insert(extra.begin(), extra.end());
  return out;
}

struct Context {
  const Config& cfg;
  fs::path out_dir;
  std::ostream& log;
  std::vector<std::string> outputs;

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(out_dir / name, std::ios::binary);
    if (!out) throw InvalidArgument(fmt::format("cannot write '{}'", (out_dir / name).string()));
    body(out);
    if (!out) throw InvalidArgument(fmt::format("failed writing '{}'", (out_dir / name).string()));
    outputs.push_back(name);
  }

  void write_json(const std::string& name, const json& doc) {
    write(name, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
  }
};

std::uint64_t seed_of(const Config& cfg) {
  const std::string text = cfg.get_string("seed", "0");
  if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
    throw InvalidArgument(fmt::format("config key 'seed': '{}' is not a nonnegative integer", text));
  }
  try {
    return std::stoull(text);
  } catch (const std::out_of_range&) {
    throw InvalidArgument(fmt::format("config key 'seed': '{}' does not fit in 64 bits", text));
  }
}

int workers_of(const Config& cfg) {
  const long w = cfg.get_int("workers", 1);
  if (w < 1 || w > 1024) throw InvalidArgument(fmt::format("workers must be in [1, 1024], got {}", w));
  return static_cast<int>(w);
}

std::size_t replicates_of(const Config& cfg, long fallback) {
  const long r = cfg.get_int("replicates", fallback);
  if (r < 1) throw InvalidArgument(fmt::format("replicates must be >= 1, got {}", r));
  return static_cast<std::size_t>(r);
}

double level_of(const Config& cfg) {
  const double level = cfg.get_double("level", 0.05);
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument(fmt::format("level must be in (0, 1), got {}", level));
  return level;
}

FilterProfile profile_of(const Config& cfg) {
  const long res = cfg.get_int("resolution", FilterProfile::kDefaultResolution);
  if (res > 1 << 20) throw ResourceLimit(fmt::format("filter resolution {} exceeds 2^20", res));
  return build_profile(cfg.get_double("B", 2.0), static_cast<int>(res));
}

std::vector<int> scales_of(const Config& cfg, const std::vector<int>& fallback) {
  auto scales = cfg.get_int_list("scales", fallback);
  for (int j : scales) {
    if (j < 0) throw InvalidArgument(fmt::format("scale indices must be >= 0, got {}", j));
  }
  return scales;
}

int top_of(const FilterProfile& profile, const std::vector<int>& scales) {
  int top = 1;
  for (int j : scales) top = std::max(top, window_top_degree(profile, j));
  return top;
}

// The window of every requested scale must fit below l_max.
int l_max_of(const Config& cfg, int required) {
  const long l_max = cfg.get_int("l_max", required);
  if (l_max > kMaxHarmonicDegree) {
    throw ResourceLimit(fmt::format("l_max {} exceeds the harmonic degree cap {}", l_max, kMaxHarmonicDegree));
  }
  if (l_max < required) {
    throw PreconditionError(
        fmt::format("l_max {} is below the upper window support of the requested scales (needs >= {})", l_max, required));
  }
  return static_cast<int>(l_max);
}

PowerSpectrum truncate(const PowerSpectrum& s, int l_max) {
  return spectrum_from_table(std::vector<double>(s.cl.begin(), s.cl.begin() + l_max + 1), s.envelope);
}

PowerSpectrum spectrum_of(const Config& cfg, int l_max) {
  if (const auto file = cfg.get_optional("spectrum_file")) {
    std::ifstream in(*file);
    if (!in) throw InvalidArgument(fmt::format("cannot open spectrum file '{}'", *file));
    const PowerSpectrum s = read_spectrum(in);
    if (s.l_max() < l_max) {
      throw PreconditionError(fmt::format("spectrum file ends at l = {}, need {}", s.l_max(), l_max));
    }
    return truncate(s, l_max);
  }
  const std::string kind = cfg.get_string("spectrum", "power_law");
  if (kind == "power_law") {
    return power_law_spectrum(cfg.get_double("alpha", 3.0), cfg.get_double("amplitude", 1.0), l_max);
  }
  if (kind == "cmb_like") return cmb_like_spectrum(l_max);
  throw InvalidArgument(fmt::format("unknown spectrum '{}' (power_law, cmb_like)", kind));
}

HarmonicCoefficients load_alm(const std::string& path, int l_max) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument(fmt::format("cannot open coefficient file '{}'", path));
  const auto alm = read_coefficients(in);
  if (alm.l_max() < l_max) {
    throw PreconditionError(fmt::format("coefficient file ends at l = {}, need {}", alm.l_max(), l_max));
  }
  return alm;
}

HermiteWeights weights_of(const Config& cfg) {
  const std::string preset = cfg.get_string("weights", "gof");
  if (preset == "gof") return gof_presets();
  const auto rows = cfg.get_matrix("weights");
  const std::size_t q = rows.empty() ? 0 : rows.front().size();
  Eigen::MatrixXd w(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(q));
  for (std::size_t u = 0; u < rows.size(); ++u) {
    if (rows[u].size() != q) throw InvalidArgument("weight rows must all have the same length");
    for (std::size_t i = 0; i < q; ++i) w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(i)) = rows[u][i];
  }
  return HermiteWeights(std::move(w));
}

json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Eigen::VectorXd(m.row(i).transpose())));
  return out;
}

json cmd_filter(Context& ctx) {
  ctx.cfg.require_known({"B", "resolution", "l_max"});
  const FilterProfile profile = profile_of(ctx.cfg);
  const long l_max = ctx.cfg.get_int("l_max", 256);
  if (l_max < 1) throw InvalidArgument(fmt::format("l_max must be >= 1, got {}", l_max));
  if (l_max > 1 << 16) throw ResourceLimit(fmt::format("l_max {} exceeds 65536", l_max));
  const double B = profile.bandwidth();

  ctx.write("profile.txt", [&](std::ostream& out) { write_profile(out, profile); });
  ctx.write("window_weights.tsv", [&](std::ostream& out) {
    write_table_header(out, "needlets window weights", {"j", "l", "xi", "b", "b_squared"});
    for (int j = 0; std::pow(B, j - 1) <= static_cast<double>(l_max); ++j) {
      const auto [lo, hi] = profile.degree_range(j);
      const double scale = std::pow(B, j);
      for (int l = std::max(lo, 0); l <= std::min<long>(hi, l_max); ++l) {
        const double xi = l / scale;
        out << j << '\t' << l << '\t' << format_double(xi) << '\t' << format_double(profile.b(xi)) << '\t'
            << format_double(std::max(0.0, profile.b_squared(xi))) << '\n';
      }
    }
  });
  const double deviation = partition_of_unity_deviation(profile, static_cast<int>(l_max));
  ctx.log << fmt::format("partition of unity: max |sum_j b^2(l/B^j) - 1| over 1 <= l <= {} is {:.3e}\n", l_max,
                         deviation);
  return json{{"bandwidth", B}, {"l_max", l_max}, {"partition_of_unity_max_deviation", deviation}};
}

json cmd_simulate(Context& ctx) {
  ctx.cfg.require_known(keys_with({"grid_degree"}));
  const int l_max = l_max_of(ctx.cfg, static_cast<int>(ctx.cfg.get_int("l_max", 64)));
  const PowerSpectrum spectrum = spectrum_of(ctx.cfg, l_max);
  const long degree = ctx.cfg.get_int("grid_degree", 2L * l_max);
  if (degree > kDefaultMaxGridDegree) {
    throw ResourceLimit(fmt::format("grid degree {} exceeds {}", degree, kDefaultMaxGridDegree));
  }
  const CubatureGrid grid = build_grid(static_cast<int>(degree));
  const std::uint64_t seed = seed_of(ctx.cfg);
  const auto alm = sample_alm(spectrum, seed);
  if (grid.degree() < 2 * l_max) {
    throw PreconditionError(fmt::format("grid_degree {} is below 2 l_max = {}", grid.degree(), 2 * l_max));
  }
  const auto field = synthesize(alm, grid);

  ctx.write("spectrum.tsv", [&](std::ostream& out) { write_spectrum(out, spectrum); });
  ctx.write("alm.txt", [&](std::ostream& out) { write_coefficients(out, alm); });
  ctx.write("field.tsv", [&](std::ostream& out) {
    write_table_header(out, "needlets field samples", {"theta", "phi", "weight", "value"});
    const auto pts = grid.points();
    const auto w = grid.weights();
    for (std::size_t i = 0; i < field.size(); ++i) {
      out << format_double(pts[i].theta) << '\t' << format_double(pts[i].phi) << '\t' << format_double(w[i]) << '\t'
          << format_double(field[i]) << '\n';
    }
  });
  double mean_sq = 0.0;
  const auto w = grid.weights();
  for (std::size_t i = 0; i < field.size(); ++i) mean_sq += w[i] * field[i] * field[i];
  mean_sq /= kFourPi;
  ctx.log << fmt::format("simulated l_max {} on {} points; sample variance {:.6g}, model {:.6g}\n", l_max, grid.size(),
                         mean_sq, covariance_function(spectrum, 1.0));
  return json{{"l_max", l_max},
              {"grid_points", grid.size()},
              {"sample_variance", mean_sq},
              {"model_variance", covariance_function(spectrum, 1.0)}};
}

json cmd_transform(Context& ctx) {
  ctx.cfg.require_known(keys_with({"scales", "alm_file"}));
  const FilterProfile profile = profile_of(ctx.cfg);
  const auto scales = scales_of(ctx.cfg, {2, 3, 4});
  const int l_max = l_max_of(ctx.cfg, top_of(profile, scales));
  const PowerSpectrum spectrum = spectrum_of(ctx.cfg, l_max);
  const auto alm_file = ctx.cfg.get_optional("alm_file");
  const HarmonicCoefficients alm = alm_file ? load_alm(*alm_file, l_max) : sample_alm(spectrum, seed_of(ctx.cfg));

  std::vector<NeedletCoefficients> all;
  json per_scale = json::array();
  for (int j : scales) {
    const CubatureGrid grid = grid_for_scale(j, profile.bandwidth());
    auto coeffs = needlet_coeffs(alm, profile, j, grid);
    coeffs.normalize(coeff_variance(spectrum, profile, j, grid));
    double mean_sq = 0.0;
    for (double b : coeffs.beta_hat) mean_sq += b * b;
    mean_sq /= static_cast<double>(coeffs.beta_hat.size());
    ctx.log << fmt::format("scale {}: {} coefficients, mean beta_hat^2 = {:.4f}\n", j, coeffs.beta.size(), mean_sq);
    per_scale.push_back({{"j", j}, {"points", coeffs.beta.size()}, {"mean_beta_hat_squared", mean_sq}});
    all.push_back(std::move(coeffs));
  }
  ctx.write("coefficients.tsv", [&](std::ostream& out) { write_needlet_coefficients(out, all); });
  return json{{"l_max", l_max}, {"source", alm_file ? "alm_file" : "simulated"}, {"scales", per_scale}};
}

json cmd_corr(Context& ctx) {
  ctx.cfg.require_known(keys_with({"scales", "replicates", "decay_exponent", "pair_cap"}));
  const FilterProfile profile = profile_of(ctx.cfg);
  auto scales = scales_of(ctx.cfg, {3, 5});
  const int l_max = l_max_of(ctx.cfg, top_of(profile, scales));
  const PowerSpectrum spectrum = spectrum_of(ctx.cfg, l_max);
  const double exponent = ctx.cfg.get_double("decay_exponent", 3.0);
  const long cap = ctx.cfg.get_int("pair_cap", static_cast<long>(kDefaultPairCap));
  if (cap < 2) throw InvalidArgument("pair_cap must be >= 2");
  const std::size_t replicates = replicates_of(ctx.cfg, 200);
  const std::uint64_t seed = seed_of(ctx.cfg);
  const int workers = workers_of(ctx.cfg);
  const double B = profile.bandwidth();

  json decay = json::array();
  for (int j : scales) {
    const CubatureGrid grid = grid_for_scale(j, B);
    const auto diag = decay_diagnostic(spectrum, profile, j, grid, exponent, static_cast<std::size_t>(cap), workers);
    ctx.write(fmt::format("decay_j{}.tsv", j), [&](std::ostream& out) { write_decay_table(out, diag); });
    ctx.log << fmt::format("scale {}: max |Cor| (1 + B^j d)^{} = {:.4f} at d = {:.4f}\n", j, exponent,
                           diag.max_weighted, diag.argmax_distance);
    decay.push_back({{"j", j}, {"max_weighted_product", diag.max_weighted}, {"argmax_distance", diag.argmax_distance}});
  }

  json cross = json::array();
  std::vector<std::string> rows;
  for (std::size_t a = 0; a < scales.size(); ++a) {
    for (std::size_t b = a + 1; b < scales.size(); ++b) {
      const int j = scales[a];
      const int j2 = scales[b];
      if (j == j2) continue;
      const CubatureGrid g1 = grid_for_scale(j, B);
      const CubatureGrid g2 = grid_for_scale(j2, B);
      // Formula covariance over a strided subset of at most `cap` pairs.
      const std::size_t total = g1.size() * g2.size();
      const std::size_t stride = std::max<std::size_t>(1, total / static_cast<std::size_t>(cap));
      double max_cov = 0.0;
      for (std::size_t p = 0; p < total; p += stride) {
        max_cov = std::max(max_cov, std::abs(cross_scale_covariance(spectrum, profile, j, g1, p / g2.size(), j2, g2,
                                                                    p % g2.size())));
      }
      const auto mc = mc_cross_scale_correlation(spectrum, profile, j, j2, replicates, seed, workers);
      ctx.log << fmt::format("scales ({}, {}): formula max |cov| = {:.3e}, MC correlation = {:.5f} (SE {:.5f})\n", j, j2,
                             max_cov, mc.correlation, mc.standard_error);
      rows.push_back(fmt::format("{}\t{}\t{}\t{}\t{}\t{}", j, j2, format_double(max_cov), format_double(mc.correlation),
                                 format_double(mc.standard_error), replicates));
      cross.push_back({{"j", j},
                       {"j2", j2},
                       {"formula_max_abs_covariance", max_cov},
                       {"mc_correlation", mc.correlation},
                       {"mc_standard_error", mc.standard_error}});
    }
  }
  ctx.write("cross_scale.tsv", [&](std::ostream& out) {
    write_table_header(out, "needlets cross-scale correlation",
                       {"j", "j2", "formula_max_abs_cov", "mc_corr", "mc_se", "replicates"});
    for (const auto& r : rows) out << r << '\n';
  });
  return json{{"decay_exponent", exponent}, {"replicates", replicates}, {"decay", decay}, {"cross_scale", cross}};
}

json report_json(const StatisticsReport& r) {
  json scales = json::array();
  for (const auto& s : r.scales) {
    scales.push_back({{"j", s.j}, {"h", to_json(s.h)}, {"omega", to_json(s.omega)}, {"standardized", to_json(s.standardized)}});
  }
  json path = json::array();
  for (std::size_t i = 0; i < r.path.r.size(); ++i) path.push_back({{"r", r.path.r[i]}, {"W", to_json(r.path.values[i])}});
  return json{{"scales", scales},
              {"path", path},
              {"tested_component", r.component + 1},
              {"ks_statistic", r.ks.statistic},
              {"p_value", r.ks.p_value},
              {"threshold", r.threshold},
              {"level", r.level},
              {"reject", r.reject}};
}

json cmd_gof(Context& ctx) {
  ctx.cfg.require_known(keys_with({"scales", "replicates", "level", "weights", "component", "alm_file"}));
  const FilterProfile profile = profile_of(ctx.cfg);
  const auto scales = scales_of(ctx.cfg, {2, 4, 6});
  const int l_max = l_max_of(ctx.cfg, top_of(profile, scales));
  const PowerSpectrum spectrum = spectrum_of(ctx.cfg, l_max);
  const double level = level_of(ctx.cfg);
  const long component = ctx.cfg.get_int("component", 1);
  const HermiteWeights weights = weights_of(ctx.cfg);
  if (component < 1 || component > weights.statistics()) {
    throw InvalidArgument(fmt::format("component must be in 1..{}, got {}", weights.statistics(), component));
  }
  const std::uint64_t seed = seed_of(ctx.cfg);
  const int workers = workers_of(ctx.cfg);
  const GofPipeline pipeline(spectrum, profile, scales, weights, static_cast<int>(component - 1), workers);

  const auto alm_file = ctx.cfg.get_optional("alm_file");
  const std::size_t campaigns = alm_file ? 1 : replicates_of(ctx.cfg, 200);
  std::vector<StatisticsReport> reports(campaigns);
  if (alm_file) {
    reports[0] = pipeline.run(load_alm(*alm_file, l_max), level);
  } else {
    const PowerSpectrum field = truncate(spectrum, pipeline.required_l_max());
    parallel_for(campaigns, workers, [&](std::size_t c) {
      reports[c] = pipeline.run(sample_alm(field, derive_seed(seed, c)), level);
      reports[c].replicates = campaigns;
      reports[c].seed = seed;
    });
  }

  std::size_t rejections = 0;
  for (const auto& r : reports) rejections += r.reject ? 1 : 0;
  const double rate = static_cast<double>(rejections) / static_cast<double>(campaigns);

  ctx.write("campaigns.tsv", [&](std::ostream& out) {
    write_table_header(out, "needlets gof campaigns", {"campaign", "ks_statistic", "p_value", "reject"});
    for (std::size_t c = 0; c < campaigns; ++c) {
      out << c << '\t' << format_double(reports[c].ks.statistic) << '\t' << format_double(reports[c].ks.p_value) << '\t'
          << (reports[c].reject ? 1 : 0) << '\n';
    }
  });
  ctx.write("omega.tsv", [&](std::ostream& out) {
    write_table_header(out, "needlets omega", {"j", "u", "v", "omega"});
    for (std::size_t i = 0; i < scales.size(); ++i) {
      const auto& om = pipeline.omegas()[i];
      for (Eigen::Index u = 0; u < om.rows(); ++u) {
        for (Eigen::Index v = 0; v < om.cols(); ++v) {
          out << scales[i] << '\t' << u + 1 << '\t' << v + 1 << '\t' << format_double(om(u, v)) << '\n';
        }
      }
    }
  });
  json first = report_json(reports.front());
  first["replicates"] = campaigns;
  first["seed"] = seed;
  ctx.write_json("gof_report.json", first);

  const double threshold = ks_threshold(level);
  ctx.log << fmt::format("KS threshold at level {} is {:.4f}\n", level, threshold);
  if (campaigns == 1) {
    const auto& r = reports.front();
    ctx.log << fmt::format("statistic {:.4f}, p-value {:.4f}: {}\n", r.ks.statistic, r.ks.p_value,
                           r.reject ? "reject" : "accept");
  } else {
    ctx.log << fmt::format("{} of {} campaigns rejected (rate {:.4f})\n", rejections, campaigns, rate);
  }
  return json{{"level", level},
              {"threshold", threshold},
              {"campaigns", campaigns},
              {"rejections", rejections},
              {"rejection_rate", rate},
              {"first_statistic", reports.front().ks.statistic},
              {"first_p_value", reports.front().ks.p_value}};
}

json cmd_mask(Context& ctx) {
  ctx.cfg.require_known(keys_with({"j", "mask_file", "replicates", "flag_threshold", "exponent", "field_l_max", "bins"}));
  const FilterProfile profile = profile_of(ctx.cfg);
  MaskExperimentConfig mc;
  mc.j = static_cast<int>(ctx.cfg.get_int("j", 5));
  if (mc.j < 0) throw InvalidArgument(fmt::format("j must be >= 0, got {}", mc.j));
  const int top = window_top_degree(profile, mc.j);
  mc.field_l_max = static_cast<int>(ctx.cfg.get_int("field_l_max", top));
  const int l_max = l_max_of(ctx.cfg, std::max(top, mc.field_l_max));
  if (mc.field_l_max > l_max) {
    throw PreconditionError(fmt::format("field_l_max {} exceeds l_max {}", mc.field_l_max, l_max));
  }
  const PowerSpectrum spectrum = spectrum_of(ctx.cfg, l_max);
  mc.replicates = replicates_of(ctx.cfg, 200);
  mc.seed = seed_of(ctx.cfg);
  mc.workers = workers_of(ctx.cfg);
  mc.flag_threshold = ctx.cfg.get_double("flag_threshold", 0.1);
  mc.exponent = ctx.cfg.get_double("exponent", 4.0);
  mc.bins = static_cast<int>(ctx.cfg.get_int("bins", 8));

  SkyMask mask;
  if (const auto file = ctx.cfg.get_optional("mask_file")) {
    std::ifstream in(*file);
    if (!in) throw InvalidArgument(fmt::format("cannot open mask file '{}'", *file));
    mask = read_mask(in);
  }
  const auto map = run_mask_experiment(spectrum, profile, mask, mc);

  ctx.write("mask.txt", [&](std::ostream& out) { write_mask(out, mask); });
  ctx.write("discrepancy.tsv", [&](std::ostream& out) { write_discrepancy_map(out, map); });
  ctx.write("clearance_bins.tsv", [&](std::ostream& out) {
    write_table_header(out, "needlets clearance bins", {"lo_radians", "hi_radians", "points", "mean_D", "SE"});
    for (const auto& b : map.bins) {
      out << format_double(b.lo) << '\t' << format_double(b.hi) << '\t' << b.points << '\t' << format_double(b.mean_d)
          << '\t' << format_double(b.se) << '\n';
    }
  });
  const double max_d = map.d.empty() ? 0.0 : *std::max_element(map.d.begin(), map.d.end());
  const bool monotone = nonincreasing_within_se(map.bins);
  ctx.log << fmt::format("masked fraction {:.4f}; {} of {} points flagged (D > {}); max D {:.4g}\n",
                         map.masked_fraction, map.flagged_count(), map.d.size(), mc.flag_threshold, max_d);
  ctx.log << fmt::format("flagged within 2 needlet widths: {:.3f}; binned D nonincreasing: {}; calibrated C_M {:.4g}\n",
                         map.flagged_fraction_within(2.0), monotone ? "yes" : "no", map.calibrated_cm);
  return json{{"j", mc.j},
              {"replicates", mc.replicates},
              {"masked_fraction", map.masked_fraction},
              {"points", map.d.size()},
              {"flagged", map.flagged_count()},
              {"max_D", max_d},
              {"flagged_within_two_widths", map.flagged_fraction_within(2.0)},
              {"binned_D_nonincreasing", monotone},
              {"needlet_width", map.width},
              {"v_star", map.v_star},
              {"calibrated_C_M", map.calibrated_cm},
              {"exponent", map.exponent}};
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const PreconditionError*>(&e)) return kExitConfig;
  if (dynamic_cast<const DegenerateSpectrum*>(&e) || dynamic_cast<const AssumptionViolation*>(&e) ||
      dynamic_cast<const ConsistencyError*>(&e)) {
    return kExitNumeric;
  }
  if (dynamic_cast<const ResourceLimit*>(&e)) return kExitResource;
  return kExitInternal;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"filter", "simulate", "transform", "corr", "gof", "mask"};
  return names;
}

json run_command(const std::string& name, const Config& config, const fs::path& out_dir, std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InvalidArgument(fmt::format("cannot create output directory '{}': {}", out_dir.string(), ec.message()));

  Context ctx{config, out_dir, log, {}};
  json summary;
  if (name == "filter") {
    summary = cmd_filter(ctx);
  } else if (name == "simulate") {
    summary = cmd_simulate(ctx);
  } else if (name == "transform") {
    summary = cmd_transform(ctx);
  } else if (name == "corr") {
    summary = cmd_corr(ctx);
  } else if (name == "gof") {
    summary = cmd_gof(ctx);
  } else if (name == "mask") {
    summary = cmd_mask(ctx);
  } else {
    throw InvalidArgument(fmt::format("unknown command '{}'", name));
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json inputs = json::object();
  for (const auto& [k, v] : config.entries()) inputs[k] = v;
  json manifest{{"command", name},
                {"version", NEEDLETS_VERSION},
                {"table_format_version", kTableFormatVersion},
                {"inputs", inputs},
                {"seed", config.get_string("seed", "0")},
                {"outputs", ctx.outputs},
                {"summary", summary},
                {"wall_time_seconds", wall}};
  ctx.outputs.clear();
  ctx.write_json("manifest.json", manifest);
  return summary;
}

}  // namespace needlets::cli
