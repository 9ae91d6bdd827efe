#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "dbm/io.hpp"

using namespace dbm;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dbm-overlaps");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) v.push_back(l);
  return v;
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dbm_cli_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("number formatting round-trips") {
    CHECK(format_double(0.125) == "0.125");
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK(format_double(std::nan("")) == "nan");
  }

  TEST_CASE("theory curves and scalars") {
    const auto goe = cli({"theory", "--kernel", "goe", "--q", "0.9", "--t", "1", "--x", "0.5", "--bins", "50"});
    CHECK(goe.code == 0);
    const auto rows = lines(goe.out);
    REQUIRE(rows.size() == 51);
    CHECK(rows[0] == kBulkHeader);

    const auto f = cli({"theory", "--spike-f", "--lambda", "1", "--mu", "0.3", "--qfrac", "0.3", "--t", "0.2"});
    CHECK(f.code == 0);
    REQUIRE(lines(f.out).size() == 2);
    CHECK(std::stod(lines(f.out)[1].substr(lines(f.out)[1].find(',') + 1)) == doctest::Approx(0.125));

    const auto ls = cli({"theory", "--lambda-star", "--mu", "0", "--t", "1", "--qfrac", "0.5"});
    CHECK(ls.code == 0);
    CHECK(lines(ls.out).back() == "lambda_star,0");

    const auto g = cli({"theory", "--spike-g", "--lambda", "3", "--q", "0.7", "--bins", "10", "--format", "json"});
    CHECK(g.code == 0);
    const auto j = nlohmann::json::parse(g.out);
    CHECK(j["theory"].size() == 10);
  }

  TEST_CASE("input errors exit with 2") {
    CHECK(cli({"theory", "--no-such-flag"}).code == 2);
    CHECK(cli({}).code == 2);
    const auto dom = cli({"theory", "--lambda-star", "--mu", "3", "--q", "0.5"});
    CHECK(dom.code == 2);
    CHECK(dom.err.find("minor edge") != std::string::npos);
    CHECK(dom.out.empty());
    const auto few = cli({"simulate", "--N", "40", "--trials", "10"});
    CHECK(few.code == 2);
    CHECK(few.err.find("trials") != std::string::npos);
    const auto window = cli({"spike", "--lambda", "1", "--mu", "0.3", "--q", "0.3", "--t", "0.5"});
    CHECK(window.code == 2);
    CHECK(window.err.find("validity window") != std::string::npos);
    CHECK(cli({"probe", "--kind", "drift", "--N", "500"}).code == 2);
    CHECK(cli({"theory", "--kernel", "goe", "--q", "0.5", "--format", "xml"}).code == 2);
  }

  TEST_CASE("help exits with 0") { CHECK(cli({"--help"}).code == 0); }

  TEST_CASE("simulate writes files and nothing to stdout") {
    const auto path = scratch("sim.csv");
    const auto r = cli({"simulate", "--N", "40", "--trials", "100", "--bins", "8", "--out", path.string()});
    CHECK(r.code == 0);
    CHECK(r.out.empty());
    const auto text = read_text_file(path.string());
    CHECK(lines(text).size() == 9);
    CHECK(lines(text)[0] == kBulkHeader);
  }

  TEST_CASE("repeated runs are byte-identical for any thread count") {
    const std::vector<std::string> base = {"simulate", "--N", "40", "--trials", "100", "--seed", "7", "--format", "json"};
    std::vector<std::string> contents;
    for (const char* threads : {"1", "1", "2", "5"}) {
      auto args = base;
      const auto path = scratch(std::string("det_") + threads + "_" + std::to_string(contents.size()) + ".json");
      args.insert(args.end(), {"--threads", threads, "--out", path.string()});
      REQUIRE(cli(args).code == 0);
      contents.push_back(read_text_file(path.string()));
    }
    for (const auto& c : contents) CHECK(c == contents[0]);
    const auto j = nlohmann::json::parse(contents[0]);
    for (const char* key : {"config", "estimates", "theory", "coverage", "wall_time_s", "tool_version"}) {
      CHECK(j.contains(key));
    }
    CHECK(j["wall_time_s"].is_null());
    CHECK(j["config"]["master_seed"] == 7);
  }

  TEST_CASE("compare exit code follows the coverage threshold") {
    const auto path = scratch("cmp.csv");
    const auto ok = cli({"compare", "--bulk", "--N", "40", "--trials", "100", "--bins", "6", "--threshold", "0",
                         "--out", path.string()});
    CHECK(ok.code == 0);
    CHECK(std::filesystem::exists(path.string() + ".summary.csv"));
    const auto summary = lines(read_text_file(path.string() + ".summary.csv"));
    CHECK(summary[0] == kScalarHeader);
    CHECK(summary[1].rfind("coverage,", 0) == 0);
    // Far from the large-N limit the finite-size bias dominates the intervals.
    const auto high = cli({"compare", "--N", "8", "--trials", "3000", "--threshold", "0.9", "--out", path.string()});
    CHECK(high.code == 3);
    CHECK(high.err.find("below threshold") != std::string::npos);
  }

  TEST_CASE("spike and Bernoulli subcommands") {
    const auto path = scratch("traj.csv");
    const auto traj = cli({"spike", "--mode", "path", "--lambda", "1", "--N", "60", "--t-max", "0.5", "--dt", "0.1",
                           "--out", path.string()});
    CHECK(traj.code == 0);
    const auto tl = lines(read_text_file(path.string()));
    CHECK(tl[0] == kTrajectoryHeader);
    CHECK(tl.size() == 7);

    const auto sb = cli({"spike", "--mode", "bulk", "--lambda", "3", "--q", "0.7", "--N", "60", "--trials", "100",
                         "--bins", "5"});
    CHECK(sb.code == 0);
    CHECK(lines(sb.out)[0] == kSpikeBulkHeader);
    CHECK(sb.err.find("total_mass_theory") != std::string::npos);

    const auto bs = cli({"bernoulli", "--mode", "spike", "--p", "0.7", "--N-list", "40,60", "--trials", "100"});
    CHECK(bs.code == 0);
    CHECK(lines(bs.out).size() == 3);
    CHECK(cli({"bernoulli", "--p", "1.0", "--N", "40", "--trials", "100"}).code == 2);
  }

  TEST_CASE("probe subcommand") {
    const auto r = cli({"probe", "--kind", "drift", "--N", "20", "--trials", "200", "--dt", "1e-4"});
    CHECK(r.code == 0);
    CHECK(r.out.find("relative_deviation") != std::string::npos);
    const auto c = cli({"probe", "--kind", "correlation", "--N", "12", "--samples", "10000", "--format", "json"});
    CHECK(c.code == 0);
    CHECK(nlohmann::json::parse(c.out)["estimates"].size() == 36);
  }
}
