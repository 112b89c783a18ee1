#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "rtt/csv.hpp"

namespace fs = std::filesystem;
using rtt::cli::run;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  args.insert(args.begin(), "rtt");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::absolute("cli_test_out") / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::vector<std::string> lines_of(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("csv quoting and numbers") {
  CHECK(rtt::csv::field("plain") == "plain");
  CHECK(rtt::csv::field("a,b") == "\"a,b\"");
  CHECK(rtt::csv::field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(rtt::csv::field("two\nlines") == "\"two\nlines\"");
  CHECK(rtt::csv::num(0.1) == "0.1");
  CHECK(std::stod(rtt::csv::num(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK(rtt::csv::num(std::nan("")) == "nan");
  rtt::csv::Table t({"a", "b"});
  t.add({"1", "x,y"});
  CHECK(t.str() == "a,b\n1,\"x,y\"\n");
  CHECK_THROWS(t.add({"1"}));
  const std::string r = rtt::cli::report_csv({{"e", "p=1;q=2", "m", 0.5, true}});
  CHECK(r == "experiment,parameters,metric,value,fitted\ne,p=1;q=2,m,0.5,1\n");
}

TEST_CASE("frame-check reconstructs within 1e-6") {
  const fs::path dir = scratch("frame");
  const Result r = call({"frame-check", "--J", "12", "--L", "16", "--trials", "4", "--out", dir.string()});
  CHECK(r.code == 0);
  const auto rows = lines_of(slurp(dir / "frame-check.csv"));
  REQUIRE(rows.size() == 1 + 4 * 5);
  CHECK(rows[0] == "trial,k,rel_l2_error,frame_deviation");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::istringstream ls(rows[i]);
    std::string trial, k, err;
    std::getline(ls, trial, ',');
    std::getline(ls, k, ',');
    std::getline(ls, err, ',');
    CHECK(std::stod(err) <= 1e-6);
  }
  // an impossible tolerance is reported through the exit code
  CHECK(call({"frame-check", "--J", "10", "--trials", "1", "--tol", "0", "--out", dir.string()}).code ==
        rtt::cli::kCheckFailed);
}

TEST_CASE("mm-scan writes one row per N") {
  const fs::path dir = scratch("mm");
  const Result r = call({"mm-scan", "--q", "1.5", "--r", "3", "--eps", "0.01", "--N", "2,4,8,16,32", "--trials", "5",
                         "--out", dir.string(), "--plot"});
  CHECK(r.code == 0);
  const auto rows = lines_of(slurp(dir / "mm-scan.csv"));
  REQUIRE(rows.size() == 6);
  CHECK(rows[0] == "q,r,eps,N,trial_count,max_ratio,max_numerator,fitted_slope");
  for (int i = 0; i < 5; ++i) CHECK(rows[1 + i].rfind("1.5,3,0.01," + std::to_string(2 << i) + ",5,", 0) == 0);
  CHECK(lines_of(slurp(dir / "mm-scan.dat")).size() == 5);
  CHECK(slurp(dir / "mm-scan_summary.csv").find("fitted_slope") != std::string::npos);
}

TEST_CASE("tree-select on an empty tile file") {
  const fs::path dir = scratch("tree");
  { std::ofstream(dir / "empty.txt") << "# no tiles\n"; }
  const Result r = call({"tree-select", "--tiles", (dir / "empty.txt").string(), "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(slurp(dir / "tree-select.csv") == "level,tree,k_time,m_time,k_freq,m_freq,is_top\n");

  { std::ofstream(dir / "tiles.txt") << "2 1 -2 2\n1 2 -1 4\n1 3 -1 5\n"; }
  CHECK(call({"tree-select", "--tiles", (dir / "tiles.txt").string(), "--out", dir.string()}).code == 0);
  const auto rows = lines_of(slurp(dir / "tree-select.csv"));
  CHECK(rows.size() == 4);

  { std::ofstream(dir / "bad.txt") << "1 2 3\n"; }
  const Result bad = call({"tree-select", "--tiles", (dir / "bad.txt").string(), "--out", dir.string()});
  CHECK(bad.code == rtt::cli::kInvalidConfig);
  CHECK(bad.err.find("line 1") != std::string::npos);
  CHECK(call({"tree-select", "--tiles", (dir / "missing.txt").string()}).code == rtt::cli::kInvalidConfig);
}

TEST_CASE("invalid parameters name the violated check") {
  const Result r = call({"exceptional", "--p", "1.2", "--q", "1.5", "--out", scratch("bad").string()});
  CHECK(r.code == rtt::cli::kInvalidConfig);
  CHECK(r.err.find("exponent check fails: 1/p+1/q = 1.5") != std::string::npos);
  CHECK(call({"mm-scan", "--q", "2.5"}).code == rtt::cli::kInvalidConfig);
  CHECK(call({"mm-scan", "--N", "2,x"}).code == rtt::cli::kInvalidConfig);
  CHECK(call({"no-such-command"}).code == rtt::cli::kInvalidConfig);
  CHECK(call({}).code == rtt::cli::kInvalidConfig);
  CHECK(call({"rtt-sim", "--f", "1,2"}).code == rtt::cli::kInvalidConfig);
  const Result help = call({"blowup", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("Columns: p,q,J,proxy,growth") != std::string::npos);
}

TEST_CASE("JSON config with flag overrides") {
  const fs::path dir = scratch("config");
  {
    std::ofstream(dir / "tails.json") << R"({"sharpness": [0.1, 0.01], "samples": 4, "n-max": 500, "seed": 3,
                                              "out": ")" << (dir / "from_config").string() << "\"}";
  }
  Result r = call({"tails", "--config", (dir / "tails.json").string()});
  CHECK(r.code == 0);
  auto rows = lines_of(slurp(dir / "from_config" / "tails.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rfind("0.1,", 0) == 0);

  // flags win over the file
  r = call({"tails", "--config", (dir / "tails.json").string(), "--sharpness", "0.001", "--out", dir.string()});
  CHECK(r.code == 0);
  rows = lines_of(slurp(dir / "tails.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].rfind("0.001,", 0) == 0);

  { std::ofstream(dir / "unknown.json") << R"({"samples": 4, "bogus": 1})"; }
  r = call({"tails", "--config", (dir / "unknown.json").string()});
  CHECK(r.code == rtt::cli::kInvalidConfig);
  CHECK(r.err.find("bogus") != std::string::npos);

  { std::ofstream(dir / "broken.json") << "{ not json"; }
  CHECK(call({"tails", "--config", (dir / "broken.json").string()}).code == rtt::cli::kInvalidConfig);

  // range checks apply to config values too
  { std::ofstream(dir / "range.json") << R"({"p": 1.1, "q": 1.1})"; }
  r = call({"exceptional", "--config", (dir / "range.json").string()});
  CHECK(r.code == rtt::cli::kInvalidConfig);
  CHECK(r.err.find("exponent check fails") != std::string::npos);
}

TEST_CASE("environment variable sets the default output directory") {
  const fs::path dir = scratch("env");
  ::setenv(rtt::cli::kOutDirEnv, dir.string().c_str(), 1);
  const Result r = call({"blowup", "--J", "8"});
  ::unsetenv(rtt::cli::kOutDirEnv);
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "blowup.csv"));
  CHECK(fs::exists(dir / "blowup_summary.csv"));
}

TEST_CASE("repeated runs are byte-identical") {
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  for (const fs::path& d : {a, b}) {
    CHECK(call({"exceptional", "--x-samples", "5", "--seed", "11", "--out", d.string(), "--plot"}).code == 0);
    CHECK(call({"rtt-sim", "--k-max", "10", "--N-extra", "3000", "--out", d.string(), "--plot"}).code == 0);
    CHECK(call({"prop37", "--trials", "1", "--l", "0,1", "--seed", "5", "--out", d.string()}).code == 0);
  }
  for (const std::string f : {"exceptional.csv", "exceptional_summary.csv", "exceptional.dat", "rtt-sim.csv",
                              "rtt-sim_summary.csv", "rtt-sim.dat", "prop37.csv", "prop37_summary.csv"}) {
    CHECK(!slurp(a / f).empty());
    CHECK(slurp(a / f) == slurp(b / f));
  }
  // a different seed changes the output
  CHECK(call({"prop37", "--trials", "1", "--l", "0,1", "--seed", "6", "--out", b.string()}).code == 0);
  CHECK(slurp(a / "prop37.csv") != slurp(b / "prop37.csv"));
}
