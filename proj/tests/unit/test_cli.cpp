#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "fockmetro/cli/cache.hpp"
#include "fockmetro/cli/config.hpp"
#include "fockmetro/cli/csv.hpp"
#include "fockmetro/cli/runner.hpp"
#include "fockmetro/errors.hpp"

using namespace fockmetro;
using namespace fockmetro::cli;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("fockmetro_unit_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }
  std::string str(const std::string& sub = "") const { return (path_ / sub).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string config_error(const std::string& text, std::optional<Task> t = std::nullopt) {
  try {
    parse_config(text, t);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "config accepted: " << text;
  return "";
}

RunOptions quiet(const std::string& out, const std::string& cache, std::ostream& log) {
  RunOptions o;
  o.out_dir = out;
  o.cache_dir = cache;
  o.log = &log;
  return o;
}

}  // namespace

TEST(Config, ParsesLogGrid) {
  const SweepConfig c = parse_config(
      R"({"task":"qfi_sweep","family":{"kind":"mth_phase","m":3},"grid":{"start":0.01,"stop":10,"per_decade":10}})");
  EXPECT_EQ(c.task, Task::QfiSweep);
  EXPECT_EQ(c.grid.size(), 31u);
  EXPECT_EQ(c.family.kind, FamilyKind::MthPhase);
}

TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(config_error(R"({"task":"qfi_sweep","family":{"kind":"mth_phase","m":3}})").find("'grid'"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"task":"qfi_sweep","family":{"kind":"mth_phase","m":3},"grid":[1],"bogus":1})")
                .find("bogus"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"task":"qfi_sweep","family":{"kind":"mth_phase","m":3},"grid":[1,0.5]})").find("grid"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"task":"qfi_sweep","family":{"kind":"multisqueezed","m":3},"grid":[1]})")
                .find("alpha"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"task":"sensitivity_sweep","family":{"kind":"mth_phase","m":3},"grid":[1]})")
                .find("pool_order"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"task":"sc_sweep","family":{"kind":"mth_phase","m":3},"grid":[1]})").find("channel"),
            std::string::npos);
  EXPECT_NE(config_error(R"({"task":"qfi_sweep","family":{"kind":"mth_phase","m":3},"grid":[1]})", Task::ScSweep)
                .find("task"),
            std::string::npos);
  EXPECT_NE(config_error("{not json").find("JSON"), std::string::npos);
}

TEST(Config, TruncationKeyTracksTailTolerance) {
  Truncation a, b;
  b.tail_tol = 1e-15;
  EXPECT_NE(truncation_key(a), truncation_key(b));
  EXPECT_NE(Cache::key_for("state|" + truncation_key(a)), Cache::key_for("state|" + truncation_key(b)));
  FamilySpec f{FamilyKind::Multisqueezed, 3, 10.0, std::nullopt}, g = f;
  g.alpha = 20.0;
  EXPECT_NE(family_key(f), family_key(g));
}

TEST(Cache, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cache, RoundTripAndCorruption) {
  TempDir dir;
  const Cache c(dir.path());
  const std::string key = Cache::key_for("entry");
  EXPECT_FALSE(c.get(key));
  ASSERT_TRUE(c.put(key, "payload bytes"));
  EXPECT_EQ(c.get(key).value_or(""), "payload bytes");

  fs::path file;
  for (const auto& e : fs::recursive_directory_iterator(dir.path()))
    if (e.is_regular_file()) file = e.path();
  ASSERT_FALSE(file.empty());
  std::string raw = slurp(file.string());
  raw.back() ^= 0x01;
  std::ofstream(file, std::ios::binary | std::ios::trunc) << raw;
  EXPECT_FALSE(c.get(key));
  std::ofstream(file, std::ios::binary | std::ios::trunc) << raw.substr(0, raw.size() / 2);
  EXPECT_FALSE(c.get(key));
}

TEST(Cache, DisabledAndUnwritable) {
  const Cache off;
  EXPECT_FALSE(off.enabled());
  EXPECT_FALSE(off.put("k", "v"));
  EXPECT_FALSE(off.get("k"));
  const Cache bad("/proc/fockmetro-no-such-dir");
  EXPECT_FALSE(bad.put(Cache::key_for("x"), "v"));
}

TEST(Cache, StateSerializationRoundTrip) {
  const Cache none;
  Truncation t;
  for (const FamilySpec& f : {FamilySpec{FamilyKind::MthPhase, 3, 0.0, std::nullopt},
                              FamilySpec{FamilyKind::Multisqueezed, 3, 5.0, std::nullopt}}) {
    const PreparedState s = prepare_state(f, 0.1, t, none);
    const PreparedState r = deserialize_state(serialize_state(s));
    EXPECT_EQ(r.dim_lo, s.dim_lo);
    EXPECT_EQ(r.dim_p, s.dim_p);
    EXPECT_EQ(r.occupation, s.occupation);
    EXPECT_EQ(r.is_pure(), s.is_pure());
    if (s.is_pure()) EXPECT_EQ(r.pure->amplitudes(), s.pure->amplitudes());
    else EXPECT_EQ(r.mixed->rho(), s.mixed->rho());
  }
  EXPECT_THROW(deserialize_state("garbage"), std::exception);
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(std::nan("")), "");
  EXPECT_EQ(format_number(std::optional<double>{}), "");
  EXPECT_EQ(escape_cell("a,b"), "\"a,b\"");
  CsvTable t({"a", "b"});
  EXPECT_THROW(t.add_row({"1"}), Error);
}

TEST(Run, StateInfoCoherent) {
  TempDir dir;
  std::ostringstream log;
  const SweepConfig c =
      parse_config(R"({"task":"state_info","family":{"kind":"coherent","parameter":1.0}})");
  ASSERT_EQ(run(c, quiet(dir.str("out"), dir.str("cache"), log)), kExitOk);
  const std::string js = slurp(dir.str("out/state_info.json"));
  EXPECT_NE(js.find("\"occupation\": 1.0"), std::string::npos) << js;
  EXPECT_NE(js.find("\"qfi\": 4.0"), std::string::npos) << js;
}

TEST(Run, QfiSweepMatchesClosedFormColumn) {
  TempDir dir;
  std::ostringstream log;
  const SweepConfig c = parse_config(
      R"({"task":"qfi_sweep","family":{"kind":"squeezed"},"grid":{"start":0.1,"stop":10,"per_decade":2}})");
  ASSERT_EQ(run(c, quiet(dir.str("out"), dir.str("cache"), log)), kExitOk);
  std::istringstream in(slurp(dir.str("out/qfi_sweep.csv")));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "nbar,qfi,qfi_squeezed_ref,family,m,alpha,dim_lo,dim_p,converged");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    ASSERT_GE(cells.size(), 3u);
    EXPECT_NEAR(std::stod(cells[1]), std::stod(cells[2]), 1e-8 * std::stod(cells[2]));
  }
  EXPECT_EQ(rows, 5);
}

TEST(Run, WorkerCountAndCacheDoNotChangeBytes) {
  TempDir dir;
  std::ostringstream log;
  const std::string cfg =
      R"({"task":"sensitivity_sweep","family":{"kind":"mth_phase","m":3},"grid":[0.01,0.05,0.1,0.3],"pool_order":3})";
  SweepConfig c = parse_config(cfg);
  RunOptions a = quiet(dir.str("a"), dir.str("cache"), log);
  a.workers = 1;
  RunOptions b = quiet(dir.str("b"), dir.str("cache"), log);
  b.workers = 4;
  SweepConfig nocache = c;
  nocache.cache = false;
  RunOptions d = quiet(dir.str("d"), dir.str("cache"), log);
  d.workers = 3;
  ASSERT_EQ(run(c, a), kExitOk);
  ASSERT_EQ(run(c, b), kExitOk);
  ASSERT_EQ(run(nocache, d), kExitOk);
  const std::string ra = slurp(dir.str("a/sensitivity_sweep.csv"));
  EXPECT_FALSE(ra.empty());
  EXPECT_EQ(ra, slurp(dir.str("b/sensitivity_sweep.csv")));
  EXPECT_EQ(ra, slurp(dir.str("d/sensitivity_sweep.csv")));
}

TEST(Run, FailedPointGivesPartialExit) {
  TempDir dir;
  std::ostringstream log;
  const SweepConfig c = parse_config(
      R"({"task":"qfi_sweep","family":{"kind":"mth_phase","m":3},"grid":[0.01,5],"truncation":{"max_dim":256}})");
  EXPECT_EQ(run(c, quiet(dir.str("out"), dir.str("cache"), log)), kExitPartial);
  const std::string csv = slurp(dir.str("out/qfi_sweep.csv"));
  EXPECT_NE(csv.find(",true\n"), std::string::npos);
  EXPECT_NE(csv.find("5,,,mth_phase,3,,,,false\n"), std::string::npos) << csv;
  EXPECT_NE(log.str().find("nbar=5"), std::string::npos);
}

TEST(Run, LongRunNeedsFlag) {
  TempDir dir;
  std::ostringstream log;
  const SweepConfig c = parse_config(
      R"({"task":"fit_beta","family":{"kind":"multisqueezed","m":3},"alpha_list":[10,20,40],)"
      R"("grid":{"start":0.01,"stop":3,"per_decade":10}})");
  EXPECT_GT(estimate_runtime_seconds(c), kLongRunSeconds);
  EXPECT_EQ(run(c, quiet(dir.str("out"), dir.str("cache"), log)), kExitConfig);
  EXPECT_NE(log.str().find("estimated runtime"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir.str("out/fit_beta.json")));
}

TEST(Cli, ExitCodes) {
  const char* exe = std::getenv("FOCKMETRO_CLI");
  if (!exe) GTEST_SKIP() << "FOCKMETRO_CLI not set";
  TempDir dir;
  std::ofstream(dir.str("bad.json")) << R"({"task":"qfi_sweep","family":{"kind":"mth_phase","m":3}})";
  std::ofstream(dir.str("ok.json")) << R"({"task":"state_info","family":{"kind":"coherent","parameter":0.5}})";
  auto code = [&](const std::string& args) {
    const std::string cmd = "FOCKMETRO_CACHE_DIR=" + dir.str("cache") + " " + exe + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  EXPECT_EQ(code("qfi-sweep --config " + dir.str("bad.json")), 3);
  EXPECT_EQ(code("qfi-sweep --config " + dir.str("missing.json")), 3);
  EXPECT_EQ(code("qfi-sweep"), 3);
  EXPECT_EQ(code("state-info --config " + dir.str("ok.json") + " --out " + dir.str("o")), 0);
  EXPECT_TRUE(fs::exists(dir.str("o/state_info.json")));
}
