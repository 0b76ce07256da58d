#include <cli/commands.hpp>
#include <cli/config.hpp>
#include <needlets/error.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using needlets::cli::Config;
using needlets::cli::run_command;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("needlets_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Config parse(const std::string& text) {
  std::istringstream in(text);
  return Config::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_tool(const std::string& args) {
  const int status = std::system((std::string(NEEDLETS_TOOL_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_expect(const std::string& name, const std::string& text) {
  TempDir dir;
  std::ostringstream log;
  try {
    run_command(name, parse(text), dir.path(), log);
    return 0;
  } catch (const std::exception& e) {
    return needlets::cli::exit_code_for(e);
  }
}

}  // namespace

TEST(Config, ParsingRules) {
  const auto c = parse("B = 2.5  # bandwidth\n\n# comment\nscales = 2, 4 6\nangle = 0.2 rad\nweights = 1 0; 0 1\n");
  EXPECT_DOUBLE_EQ(c.get_double("B", 0.0), 2.5);
  EXPECT_EQ(c.get_int_list("scales", {}), (std::vector<int>{2, 4, 6}));
  EXPECT_DOUBLE_EQ(c.get_angle("angle", 0.0), 0.2);
  EXPECT_EQ(c.get_matrix("weights"), (std::vector<std::vector<double>>{{1, 0}, {0, 1}}));
  EXPECT_EQ(c.get_int("missing", 7), 7);
  EXPECT_FALSE(c.get_optional("missing").has_value());
  EXPECT_THROW(parse("B = 2\nB = 3\n"), needlets::InvalidArgument);
  EXPECT_THROW(parse("no equals sign\n"), needlets::InvalidArgument);
  EXPECT_THROW(parse("a = 10 deg\n").get_angle("a", 0.0), needlets::InvalidArgument);
  EXPECT_THROW(parse("a = 10\n").get_angle("a", 0.0), needlets::InvalidArgument);
  EXPECT_THROW(parse("a = x\n").get_double("a", 0.0), needlets::InvalidArgument);
  EXPECT_THROW(parse("a = 1.5\n").get_int("a", 0), needlets::InvalidArgument);
  EXPECT_THROW(parse("bogus = 1\n").require_known({"B"}), needlets::InvalidArgument);
}

TEST(Cli, FilterWritesTablesAndSelfCheck) {
  TempDir dir;
  std::ostringstream log;
  const auto summary = run_command("filter", parse("B = 2\n"), dir.path(), log);
  EXPECT_LT(summary["partition_of_unity_max_deviation"].get<double>(), 1e-8);
  EXPECT_NE(log.str().find("partition of unity"), std::string::npos);
  ASSERT_TRUE(fs::exists(dir.path() / "profile.txt"));
  ASSERT_TRUE(fs::exists(dir.path() / "manifest.json"));
  std::ifstream in(dir.path() / "window_weights.tsv");
  std::string line;
  int unit_rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'j') continue;
    std::istringstream f(line);
    int j, l;
    double xi, b;
    f >> j >> l >> xi >> b;
    if (l == (1 << j)) {
      EXPECT_EQ(b, 1.0) << line;
      ++unit_rows;
    }
  }
  EXPECT_GE(unit_rows, 8);
  const auto manifest = nlohmann::json::parse(slurp(dir.path() / "manifest.json"));
  EXPECT_EQ(manifest["command"], "filter");
  EXPECT_TRUE(manifest.contains("wall_time_seconds"));
  EXPECT_TRUE(manifest.contains("version"));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_expect("filter", "B = 0.9\n"), needlets::cli::kExitConfig);
  EXPECT_EQ(run_expect("filter", "B = 2\nunknown_key = 1\n"), needlets::cli::kExitConfig);
  EXPECT_EQ(run_expect("simulate", "alpha = 2\n"), needlets::cli::kExitConfig);
  EXPECT_EQ(run_expect("transform", "scales = 4\nl_max = 20\n"), needlets::cli::kExitConfig);
  EXPECT_EQ(run_expect("transform", "scales = 4\nl_max = 600\n"), needlets::cli::kExitResource);
  EXPECT_EQ(run_expect("nonsense", ""), needlets::cli::kExitConfig);

  TempDir dir;
  const auto spec = dir.path() / "spectrum.txt";
  {
    std::ofstream out(spec);
    for (int l = 0; l <= 40; ++l) out << l << ' ' << (l == 40 ? 1.0 : 0.0) << '\n';
  }
  EXPECT_EQ(run_expect("transform", "scales = 3\nl_max = 40\nspectrum_file = " + spec.string() + "\n"),
            needlets::cli::kExitNumeric);
}

TEST(Cli, BinaryExitCodes) {
  TempDir dir;
  const auto cfg = dir.path() / "bad.cfg";
  std::ofstream(cfg) << "B = 0.9\n";
  EXPECT_EQ(run_tool("filter --config " + cfg.string() + " --out " + (dir.path() / "o").string()), 2);
  const auto good = dir.path() / "good.cfg";
  std::ofstream(good) << "B = 2\nl_max = 64\n";
  EXPECT_EQ(run_tool("filter --config " + good.string() + " --out " + (dir.path() / "o").string()), 0);
  EXPECT_EQ(run_tool("filter --out " + (dir.path() / "o").string()), 2);
  EXPECT_EQ(run_tool("filter --config " + good.string() + " --out " + (dir.path() / "o").string() + " --set B=1"), 2);
}

TEST(Cli, SimulateIsByteReproducible) {
  TempDir a, b;
  std::ostringstream log;
  const auto cfg = parse("l_max = 24\nseed = 99\n");
  run_command("simulate", cfg, a.path(), log);
  auto cfg8 = cfg;
  cfg8.set("workers", "8");
  run_command("simulate", cfg8, b.path(), log);
  for (const char* f : {"spectrum.tsv", "alm.txt", "field.tsv"}) {
    ASSERT_TRUE(fs::exists(a.path() / f)) << f;
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
  }
  TempDir c;
  run_command("simulate", parse("l_max = 24\nseed = 100\n"), c.path(), log);
  EXPECT_NE(slurp(a.path() / "alm.txt"), slurp(c.path() / "alm.txt"));
}

TEST(Cli, TransformFromAlmFile) {
  TempDir sim, tr;
  std::ostringstream log;
  run_command("simulate", parse("l_max = 31\nseed = 5\n"), sim.path(), log);
  const auto summary = run_command(
      "transform", parse("scales = 2, 3, 4\nalm_file = " + (sim.path() / "alm.txt").string() + "\n"), tr.path(), log);
  ASSERT_TRUE(fs::exists(tr.path() / "coefficients.tsv"));
  EXPECT_EQ(slurp(tr.path() / "coefficients.tsv").find("nan"), std::string::npos);
  (void)summary;
}

TEST(Cli, CorrScalesThreeAndFive) {
  TempDir dir;
  std::ostringstream log;
  const auto summary = run_command("corr", parse("scales = 3, 5\nreplicates = 100\nseed = 8\n"), dir.path(), log);
  const auto& cross = summary["cross_scale"];
  ASSERT_EQ(cross.size(), 1u);
  EXPECT_EQ(cross[0]["formula_max_abs_covariance"].get<double>(), 0.0);
  EXPECT_LT(std::abs(cross[0]["mc_correlation"].get<double>()), 0.01);
  EXPECT_TRUE(fs::exists(dir.path() / "decay_j3.tsv"));
  EXPECT_TRUE(fs::exists(dir.path() / "decay_j5.tsv"));
}

TEST(Cli, MaskEmpty) {
  TempDir dir;
  std::ostringstream log;
  const auto summary = run_command("mask", parse("j = 4\nreplicates = 50\nseed = 3\n"), dir.path(), log);
  EXPECT_EQ(summary["flagged"].get<std::size_t>(), 0u);
  EXPECT_LT(summary["max_D"].get<double>(), 1e-6);
}

TEST(Cli, MaskFileBand) {
  TempDir dir;
  const auto mask = dir.path() / "mask.txt";
  std::ofstream(mask) << "# equatorial cut\nband 1.3707963267948966 1.7707963267948966\n";
  std::ostringstream log;
  const auto summary = run_command(
      "mask", parse("j = 4\nreplicates = 60\nseed = 3\nmask_file = " + mask.string() + "\n"), dir.path() / "out", log);
  EXPECT_GT(summary["flagged"].get<std::size_t>(), 0u);
  EXPECT_GT(summary["masked_fraction"].get<double>(), 0.15);
}

TEST(Cli, GofSingleFieldAndWorkerInvariance) {
  TempDir a, b;
  std::ostringstream log;
  const auto cfg = parse("scales = 2, 4\nreplicates = 6\nseed = 12\n");
  run_command("gof", cfg, a.path(), log);
  auto cfg8 = cfg;
  cfg8.set("workers", "8");
  run_command("gof", cfg8, b.path(), log);
  for (const char* f : {"campaigns.tsv", "omega.tsv", "gof_report.json"}) {
    ASSERT_TRUE(fs::exists(a.path() / f)) << f;
    EXPECT_EQ(slurp(a.path() / f), slurp(b.path() / f)) << f;
  }
  TempDir sim, one;
  run_command("simulate", parse("l_max = 31\nseed = 2\n"), sim.path(), log);
  const auto summary = run_command(
      "gof", parse("scales = 2, 4\nalm_file = " + (sim.path() / "alm.txt").string() + "\n"), one.path(), log);
  EXPECT_EQ(summary["campaigns"].get<int>(), 1);
  EXPECT_EQ(run_expect("gof", "scales = 2, 4\nweights = 1 0; 2 0\n"), needlets::cli::kExitConfig);
  EXPECT_EQ(run_expect("gof", "scales = 2, 4\nlevel = 1.5\n"), needlets::cli::kExitConfig);
}
