#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fpchain/harness.hpp"
#include "fpchain/records.hpp"
#include "json.hpp"
#include "test_util.hpp"

using namespace fpchain;
using testutil::code_of;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fpchain_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_config(
      "# stationary check\n"
      "experiment = stationary-sweep\n"
      "primes = 7, 11, 19\n"
      "gammas = 1\n"
      "chains = chain:nonlazy;map=square\n"
      "seeds = 1\n");
  CHECK(cfg.id == "stationary-sweep");
  CHECK(cfg.primes == std::vector<std::uint64_t>{7, 11, 19});
  CHECK(cfg.chains == std::vector<std::string>{"chain:nonlazy;map=square"});
  CHECK(cfg.config_hash.size() == 16);
  // comments and spacing do not change the hash
  const auto again = parse_config("seeds=1\nchains=chain:nonlazy;map=square\ngammas=1\nprimes =   7, 11, 19\n"
                                  "experiment=stationary-sweep # same\n");
  CHECK(again.config_hash == cfg.config_hash);
  CHECK(parse_config("experiment=stationary-sweep\nprimes=7\nseeds=2\n").config_hash != cfg.config_hash);

  const auto ranged = parse_config("experiment=conjecture-sweep\nprime_min=10\nprime_max=60\nresidue_mod4=1\n"
                                   "prime_count=3\nseeds=0\n");
  CHECK(ranged.primes == std::vector<std::uint64_t>{13, 17, 29});
}

TEST_CASE("config errors") {
  const char* bad[] = {
      "experiment=stationary-sweep\nprimes=7\n",                        // no seeds
      "experiment=stationary-sweep\nprimes=9\nseeds=1\n",               // not prime
      "experiment=stationary-sweep\nprimes=7\ngammas=14\nseeds=1\n",    // gamma vanishes
      "experiment=stationary-sweep\nprimes=7\nseeds=1\ncolour=red\n",   // unknown key
      "experiment=orbit-sweep\nprimes=7\nseeds=1\n",                    // unknown experiment
      "experiment=stationary-sweep\nseeds=1\n",                         // no primes
      "experiment=stationary-sweep\nprimes=7\nseeds=1\nseeds=2\n",      // duplicate
      "experiment=stationary-sweep\nprimes=7\nseeds=1\nformats=xml\n",  // bad format
      "experiment=stationary-sweep\nprimes=7\nseeds=1\nepsilon=2\n",    // epsilon range
      "experiment=stationary-sweep\nprimes=seven\nseeds=1\n",           // not a number
      "just some words\n",
  };
  for (const char* text : bad) CHECK_MESSAGE(code_of([&] { parse_config(text); }) == ErrorCode::Config, text);
  CHECK(code_of([] { load_config("/nonexistent/fpchain.cfg"); }) == ErrorCode::Config);
}

TEST_CASE("stationary sweep rows") {
  const auto cfg = parse_config("experiment=stationary-sweep\nprimes=7,11,19\ngammas=1\n"
                                "chains=chain:nonlazy;map=square\nseeds=1\nworkers=2\n");
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 3);
  const std::uint64_t primes[] = {7, 11, 19};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rows[i].p == primes[i]);
    CHECK(rows[i].metric == "formula_matches_exact");
    CHECK(rows[i].value == "true");
    CHECK(rows[i].oracle == "true");
    CHECK(rows[i].config_hash == cfg.config_hash);
    CHECK_FALSE(rows[i].is_error());
  }
  const auto serial = parse_config("experiment=stationary-sweep\nprimes=7,11,19\ngammas=1\n"
                                   "chains=chain:nonlazy;map=square\nseeds=1\nworkers=1\n");
  CHECK(format_report(run_experiment(serial), ReportFormat::Csv, false) ==
        format_report(rows, ReportFormat::Csv, false));
}

TEST_CASE("task failures become error rows") {
  const auto cfg = parse_config("experiment=mixing-sweep\nprimes=101\nchains=chain:additive\nseeds=1\nbudget=10\n");
  const auto rows = run_experiment(cfg);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].is_error());
  CHECK(rows[0].value.find("BudgetExceeded") != std::string::npos);
}

TEST_CASE("other experiments") {
  const auto mix = run_experiment(parse_config("experiment=mixing-sweep\nprimes=11\nchains=chain:lazy;map=square\nseeds=3\n"));
  REQUIRE(mix.size() == 1);
  CHECK(mix[0].metric == "t_mix");
  CHECK(mix[0].value == "10");

  const auto conj = run_experiment(parse_config("experiment=conjecture-sweep\nprimes=11,13\nseeds=0\n"));
  REQUIRE(conj.size() == 2);
  CHECK(conj[0].value == "9/11");
  CHECK(conj[0].metric == "support_fraction");

  const auto es = run_experiment(parse_config("experiment=expsum-sweep\nprimes=101\nmaps=square|inverse\nseeds=4\ntwists=10\n"));
  REQUIRE(es.size() == 6);
  CHECK(es[2].metric == "avg_square_constant");
  CHECK(std::stod(es[2].value) == doctest::Approx(1.0));
  CHECK(std::stod(es[3].value) <= 4.0);

  const auto ch = run_experiment(parse_config("experiment=cheeger-sweep\nprimes=11\nchains=chain:nonlazy;map=square\nseeds=0\nc=2\n"));
  REQUIRE(ch.size() == 3);
  CHECK(ch[0].metric == "mass_spread");
  CHECK(ch[0].value == "4");
  CHECK(ch[1].metric == "cheeger_h");
  CHECK(ch[2].value == "true");
}

TEST_CASE("reports") {
  ResultRow row;
  row.experiment = "stationary-sweep";
  row.p = 11;
  row.gamma = 1;
  row.chain = "chain:nonlazy;map=square";
  row.metric = "pi_0";
  row.value = rational_string(mpq_class(2, 22));
  row.seed = 5;
  row.config_hash = "00000000deadbeef";
  CHECK(row.value == "1/11");
  CHECK(rational_string(mpq_class(4, 2)) == "2");

  const std::vector<ResultRow> rows{row};
  const auto csv = format_report(rows, ReportFormat::Csv, false);
  std::istringstream lines(csv);
  std::string header, body, extra;
  std::getline(lines, header);
  std::getline(lines, body);
  CHECK(header == kCsvHeader);
  CHECK(body == "stationary-sweep,11,1,chain:nonlazy;map=square,pi_0,1/11,,,5,00000000deadbeef");
  const auto timed = format_report(rows, ReportFormat::Csv, true);
  CHECK(timed.find(",1/11,,0,5,") != std::string::npos);
  CHECK_FALSE(std::getline(lines, extra));

  const auto jsonl = format_report(rows, ReportFormat::Jsonl, false);
  const auto parsed = nlohmann::json::parse(jsonl.substr(0, jsonl.find('\n')));
  CHECK(parsed["value"] == "1/11");
  CHECK(parsed["oracle"].is_null());
  std::string previous;
  for (const auto& [key, _] : parsed.items()) {
    CHECK(previous < key);
    previous = key;
  }

  const auto dir = scratch_dir("reports");
  const auto a = emit_report(rows, ReportFormat::Csv, dir, "one");
  const auto first = slurp(a);
  emit_report(rows, ReportFormat::Csv, dir, "one");
  CHECK(slurp(a) == first);
  CHECK(a.filename() == "one.csv");
  CHECK(emit_report(rows, ReportFormat::Jsonl, dir, "one").filename() == "one.jsonl");
  CHECK(code_of([&] { emit_report({}, ReportFormat::Csv, dir, "none"); }) == ErrorCode::InvalidArgument);
  CHECK(emit_report({}, ReportFormat::Csv, dir, "none", true).filename() == "none.csv");
  CHECK(code_of([&] { emit_report(rows, ReportFormat::Csv, "/proc/definitely/not/here", "x"); }) == ErrorCode::Io);
  std::filesystem::remove_all(dir);
}

TEST_CASE("empty prime list") {
  const auto cfg = parse_config("experiment=stationary-sweep\nprimes=\nseeds=1\n");
  CHECK(cfg.primes.empty());
  CHECK(run_experiment(cfg).empty());
}

TEST_CASE("output directory override") {
  auto cfg = parse_config("experiment=stationary-sweep\nprimes=7\nseeds=1\noutput_dir=here\n");
  ::unsetenv("FPCHAIN_OUTPUT_DIR");
  CHECK(resolve_output_dir(cfg) == "here");
  ::setenv("FPCHAIN_OUTPUT_DIR", "/tmp/elsewhere", 1);
  CHECK(resolve_output_dir(cfg) == "/tmp/elsewhere");
  ::unsetenv("FPCHAIN_OUTPUT_DIR");
}
