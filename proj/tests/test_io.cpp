#include <gtest/gtest.h>

#include <sstream>

#include "nlsfs/io.hpp"

using namespace nlsfs;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string violation(const std::string& text) {
  try {
    validate(parse(text));
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("nlsfs_io_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, DefaultsValidate) {
  EXPECT_NO_THROW(validate(ExperimentConfig{}));
  auto c = parse("");
  EXPECT_EQ(c.nonlinearity.family, "real-part");
  EXPECT_DOUBLE_EQ(c.analysis.delta, 1.55);
}

TEST(Config, ShippedDefaultsMatchTheBuiltInDefaults) {
  auto c = load_config(fs::path(NLSFS_CONFIG_DIR) / "default.ini");
  EXPECT_EQ(to_json(c), to_json(ExperimentConfig{}));
  EXPECT_EQ(c.out, ExperimentConfig{}.out);
  EXPECT_NO_THROW(validate(load_config(fs::path(NLSFS_CONFIG_DIR) / "gauge_picard.ini")));
}

TEST(Config, ParsesSections) {
  auto c = parse(
      "[nonlinearity]\nfamily = real-part\nn_max = 31\n"
      "[data]\neps = 0.1\n[grid]\nkind = cartesian\ndim = 1\nn = 128\nL = 20\n"
      "[solver]\ndt = 0.005\ninclude_calV = true\nframe = physical\n"
      "[analysis]\ndelta = 1.6\neta = 0.2\n[run]\nseed = 7\nthreads = 2\n");
  EXPECT_EQ(c.nonlinearity.family, "real-part");
  EXPECT_EQ(c.nonlinearity.n_max, 31);
  EXPECT_DOUBLE_EQ(c.data.eps, 0.1);
  EXPECT_EQ(c.grid.n, 128);
  EXPECT_TRUE(c.solver.include_calV);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.threads, 2);
  EXPECT_NO_THROW(validate(c));
  Grid g = make_grid(c.grid);
  EXPECT_FALSE(g.radial_kind());
  EXPECT_EQ(g.dim, 1);
}

TEST(Config, RejectsUnknownKeysAndBadNumbers) {
  EXPECT_THROW(parse("[solver]\ndtt = 0.1\n"), config_error);
  EXPECT_THROW(parse("[nowhere]\nx = 1\n"), config_error);
  EXPECT_THROW(parse("[solver]\ndt = 0.1x\n"), config_error);
  EXPECT_THROW(parse("[solver]\ninclude_calV = maybe\n"), config_error);
}

TEST(Config, NamesTheViolatedInequality) {
  EXPECT_NE(violation("[analysis]\ndelta = 1.5\n").find("3/2 < delta"), std::string::npos);
  EXPECT_NE(violation("[analysis]\ndelta = 1.7\n").find("delta < 5/3"), std::string::npos);
  EXPECT_NE(violation("[analysis]\ndelta = 1.6\neta = 0.04\n").find("delta - 3/2 < 2 eta"),
            std::string::npos);
  EXPECT_NE(violation("[analysis]\neta = -1\n").find("eta > 0"), std::string::npos);
  EXPECT_NE(violation("[solver]\nt_start = 4\nt_end = 8\n").find("t_start > t_end >= 2"),
            std::string::npos);
  EXPECT_NE(violation("[solver]\nT = 8\nT_max = 8\n").find("2 <= T < T_max"), std::string::npos);
  EXPECT_NE(violation("[solver]\niters = 1\n").find("iters >= 2"), std::string::npos);
  EXPECT_NE(violation("[data]\neps = -1\n").find("eps >= 0"), std::string::npos);
  EXPECT_NE(violation("[nonlinearity]\nfamily = cubic\n").find("nonlinearity.family"), std::string::npos);
  EXPECT_NE(violation("[grid]\nkind = radial\ndim = 2\n").find("radial grids"), std::string::npos);
  EXPECT_EQ(violation("[analysis]\ndelta = 1.6\neta = 0.051\n"), "");
}

TEST(Hash, GitBlobOracle) {
  // git hash-object of an empty file and of "hello\n"
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
  ExperimentConfig a, b;
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.seed = 2;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Archive, RoundTripIsBitExact) {
  Grid g = Grid::cartesian(2, 16, 5);
  Trajectory tr;
  tr.frame = "lens";
  tr.config_hash = config_hash(ExperimentConfig{});
  for (double t : {2.0, 4.0, 8.0}) {
    Field f = sample(g, [t](const std::array<double, 3>& x) {
      return std::polar(std::exp(-x[0] * x[0] - x[1] * x[1]), t * x[0]);
    });
    tr.add(t, f, 1.0 / t);
  }
  fs::path dir = scratch("archive");
  json m = write_archive(dir, tr, to_json(ExperimentConfig{}));
  EXPECT_EQ(m["samples"].size(), 3u);
  Trajectory back = read_archive(dir);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.frame, "lens");
  EXPECT_EQ(back.config_hash, tr.config_hash);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.times[i], tr.times[i]);
    EXPECT_EQ(back.residuals[i], tr.residuals[i]);
    EXPECT_EQ(std::memcmp(back.states[i].v.data(), tr.states[i].v.data(), tr.states[i].size() * 16), 0);
  }
  // a corrupted snapshot is detected
  {
    std::fstream f(dir / "state_0001.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    f.put('\x7f');
  }
  EXPECT_THROW(read_archive(dir), numeric_error);
  fs::remove_all(dir);
}

TEST(Output, CsvAndJsonAreDeterministic) {
  fs::path dir = scratch("csv");
  Series s{{1, 0.1}, {2, 1.0 / 3}, {4, 1e-300}};
  write_series_csv(dir / "a.csv", s, "value");
  write_series_csv(dir / "b.csv", s, "value");
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  EXPECT_EQ(slurp(dir / "a.csv").substr(0, 8), "t,value\n");
  // values survive a text round trip exactly
  std::istringstream rows(slurp(dir / "a.csv"));
  std::string line;
  std::getline(rows, line);
  for (auto [t, v] : s) {
    std::getline(rows, line);
    EXPECT_EQ(std::stod(line.substr(line.find(',') + 1)), v);
  }
  write_json(dir / "c.json", to_json(ExperimentConfig{}));
  EXPECT_EQ(read_json(dir / "c.json"), to_json(ExperimentConfig{}));
  fs::remove_all(dir);
}

TEST(Factories, NonlinearityFamilies) {
  NonlinearitySpec s;
  s.family = "gauge";
  s.lambda = 0.4456;
  EXPECT_NEAR(make_symbol(s)[1].real(), 0.4456, 1e-15);
  s.family = "cos-power";
  s.alpha = 2;
  s.n_max = 5;
  EXPECT_NEAR(make_symbol(s)[1].real(), 4 / (3 * pi), 1e-12);
  EXPECT_THROW(make_nonlinearity(s), config_error);
  s.family = "re-im-combo";
  s.n_max = 21;
  EXPECT_LT(std::abs(make_symbol(s)[1]), 1e-10);
  ExperimentConfig c;
  c.nonlinearity.family = "gauge";
  c.nonlinearity.lambda = 0.4456;
  SolverConfig sc = make_solver_config(c);
  EXPECT_EQ(sc.frame, Frame::lens);
  EXPECT_NEAR(std::abs(sc.nonlinearity(cplx(8, 0))), 0.4456 * 8 * 4, 1e-12);
}
