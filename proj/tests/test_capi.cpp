#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fpchain/fpchain.h"
#include "json.hpp"

using nlohmann::json;

namespace {

// Takes ownership of a result and returns its parsed payload.
json take(fpc_result* r) {
  REQUIRE(r != nullptr);
  auto j = json::parse(fpc_result_text(r));
  fpc_result_destroy(r);
  return j;
}

struct Chain {
  explicit Chain(const char* desc) { REQUIRE(fpc_chain_create(desc, &handle) == FPC_OK); }
  ~Chain() { fpc_chain_destroy(handle); }
  fpc_chain* handle = nullptr;
};

}  // namespace

TEST_CASE("status names and error messages") {
  CHECK(std::string(fpc_status_name(FPC_OK)) == "ok");
  CHECK(std::string(fpc_status_name(FPC_ERR_NOT_PRIME)) == "NotPrime");
  fpc_map* map = nullptr;
  CHECK(fpc_map_create(9, "square", &map) == FPC_ERR_NOT_PRIME);
  CHECK(map == nullptr);
  CHECK(std::string(fpc_last_error_message()).find('9') != std::string::npos);
  CHECK(fpc_map_create(7, "sqaure", &map) == FPC_ERR_PARSE);
  CHECK(fpc_map_create(7, "compose:shift=1;base=square", &map) == FPC_ERR_NOT_A_BIJECTION);
  CHECK(fpc_map_create(7, nullptr, &map) == FPC_ERR_INVALID_ARGUMENT);
  CHECK(fpc_map_create(7, "square", nullptr) == FPC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("maps") {
  fpc_map* map = nullptr;
  REQUIRE(fpc_map_create(5, "square", &map) == FPC_OK);
  CHECK(fpc_map_modulus(map) == 5);
  std::vector<uint32_t> table(5);
  CHECK(fpc_map_table(map, table.data(), table.size()) == FPC_OK);
  CHECK(table == std::vector<uint32_t>{0, 1, 4, 4, 1});
  CHECK(fpc_map_table(map, table.data(), 4) == FPC_ERR_INVALID_ARGUMENT);
  int bij = -1, lin = -1, in_class = -1;
  CHECK(fpc_map_classify(map, &bij, &lin, &in_class) == FPC_OK);
  CHECK(bij == 0);
  CHECK(in_class == 0);
  fpc_map_destroy(map);

  REQUIRE(fpc_map_create(11, "cube", &map) == FPC_OK);
  CHECK(fpc_map_classify(map, &bij, &lin, &in_class) == FPC_OK);
  CHECK(bij == 1);
  CHECK(lin == 0);
  CHECK(in_class == 1);
  fpc_map_destroy(map);
  fpc_map_destroy(nullptr);
}

TEST_CASE("chains and stationary laws") {
  Chain chain("chain:nonlazy;map=square;gamma=1;p=11");
  CHECK(fpc_chain_modulus(chain.handle) == 11);
  fpc_result* r = nullptr;
  REQUIRE(fpc_chain_stationary(chain.handle, "exact", &r) == FPC_OK);
  const auto j = take(r);
  CHECK(j["weights"] == json({"1/11", "1/22", "2/11", "1/11", "2/11", "1/11", "1/11", "0", "1/11", "0", "3/22"}));
  CHECK(j["support"] == json({0, 1, 2, 3, 4, 5, 6, 8, 10}));
  CHECK(j["period"] == 1);
  CHECK(j["recurrent_classes"] == 1);
  CHECK(fpc_chain_stationary(chain.handle, "psychic", &r) == FPC_ERR_INVALID_ARGUMENT);

  fpc_chain* bad = nullptr;
  CHECK(fpc_chain_create("chain:lazy;map=square;gamma=0;p=11", &bad) == FPC_ERR_INVALID_ARGUMENT);
  CHECK(fpc_chain_create("chain:lazy;map=square;gamma=1;p=13", &bad) == FPC_OK);
  fpc_chain_destroy(bad);
}

TEST_CASE("sample paths through the C interface") {
  Chain chain("chain:additive;gamma=2;p=13");
  std::vector<uint64_t> a(11), b(11);
  CHECK(fpc_chain_sample_path(chain.handle, 4, 10, 7, a.data(), a.size()) == FPC_OK);
  CHECK(fpc_chain_sample_path(chain.handle, 4, 10, 7, b.data(), b.size()) == FPC_OK);
  CHECK(a == b);
  CHECK(a[0] == 4);
  CHECK(fpc_chain_sample_path(chain.handle, 4, 10, 7, a.data(), 10) == FPC_ERR_INVALID_ARGUMENT);
  CHECK(fpc_chain_sample_path(chain.handle, 13, 10, 7, a.data(), a.size()) == FPC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("mixing through the C interface") {
  Chain chain("chain:lazy;map=square;gamma=1;p=11");
  const auto path = (std::filesystem::temp_directory_path() / "fpchain_capi_traj.csv").string();
  fpc_result* r = nullptr;
  REQUIRE(fpc_chain_mixing(chain.handle, 0.25, "all", 0, 1000, path.c_str(), &r) == FPC_OK);
  const auto j = take(r);
  CHECK(j["t_mix"] == 10);
  CHECK(j["trajectory_path"] == path);
  std::ifstream csv(path);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "step,tv");
  int lines = 0;
  while (std::getline(csv, line)) ++lines;
  CHECK(lines == 11);
  std::filesystem::remove(path);

  Chain slow("chain:additive;gamma=1;p=101");
  CHECK(fpc_chain_mixing(slow.handle, 0.25, "0", 0, 20, nullptr, &r) == FPC_ERR_BUDGET_EXCEEDED);
}

TEST_CASE("Cheeger through the C interface") {
  Chain chain("chain:lazy;map=inverse;gamma=1;p=7");
  fpc_result* r = nullptr;
  REQUIRE(fpc_cheeger_exact(chain.handle, 0, &r) == FPC_OK);
  auto j = take(r);
  CHECK(j["ratio"] == "1/6");
  CHECK(j["subset"] == json({0, 1, 6}));
  REQUIRE(fpc_cheeger_search(chain.handle, "intervals,random", 500, 3, &r) == FPC_OK);
  j = take(r);
  CHECK(j.contains("ratio"));
  REQUIRE(fpc_cheeger_tvbound(chain.handle, 1.0, &r) == FPC_OK);
  j = take(r);
  CHECK(j["passed"] == true);
  Chain big("chain:lazy;map=inverse;gamma=1;p=29");
  CHECK(fpc_cheeger_exact(big.handle, 0, &r) == FPC_ERR_TOO_LARGE);
}

TEST_CASE("primes and conjecture") {
  size_t count = 0;
  uint64_t primes[8];
  CHECK(fpc_primes_in_range(10, 60, 1, primes, 2, &count) == FPC_OK);
  CHECK(count == 6);
  CHECK(primes[0] == 13);
  CHECK(primes[1] == 17);
  CHECK(fpc_primes_in_range(10, 60, 2, primes, 2, &count) == FPC_ERR_INVALID_ARGUMENT);
  const uint64_t ps[] = {11, 13};
  fpc_result* r = nullptr;
  REQUIRE(fpc_conjecture(ps, 2, 1, &r) == FPC_OK);
  const auto j = take(r);
  CHECK(std::abs(j["alpha"].get<double>() - 0.2956) < 5e-5);
  CHECK(j["support"].size() == 2);
}

TEST_CASE("exponential sums through the C interface") {
  fpc_expsum_request req{};
  req.kind = "avg";
  req.p = 101;
  req.map = "square";
  req.k = 3;
  req.interval_start = 5;
  req.interval_length = 10;
  req.exact = 1;
  fpc_result* r = nullptr;
  REQUIRE(fpc_expsum(&req, &r) == FPC_OK);
  auto j = take(r);
  CHECK(j["exact_value"] == 1010);
  CHECK(j["exact_is_integer"] == true);

  req.kind = "weil";
  req.map = "inverse";
  req.alpha = 0;
  req.k = 1;
  REQUIRE(fpc_expsum(&req, &r) == FPC_OK);
  j = take(r);
  CHECK(j["lhs_value"].get<double>() == doctest::Approx(1.0));
  req.k = 0;
  CHECK(fpc_expsum(&req, &r) == FPC_ERR_CONSTANT_PHASE);

  req.kind = "linear";
  req.p = 7;
  req.family = "delta=1;aps=0:1";
  REQUIRE(fpc_expsum(&req, &r) == FPC_OK);
  CHECK(take(r)["lhs_value"].get<double>() == doctest::Approx(6.0));

  req.kind = "count";
  req.p = 11;
  req.map = "inverse";
  req.family = "delta=1;aps=0:11";
  req.family2 = "delta=1;aps=0:11";
  REQUIRE(fpc_expsum(&req, &r) == FPC_OK);
  CHECK(take(r)["count"] == 11);

  req.kind = "mystery";
  CHECK(fpc_expsum(&req, &r) == FPC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("sweeps through the C interface") {
  const auto dir = std::filesystem::temp_directory_path() / "fpchain_capi_sweep";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "stationary.cfg";
  std::ofstream(cfg) << "id = golden\nexperiment = stationary-sweep\nprimes = 7, 11, 19\nseeds = 1\n"
                        "chains = chain:nonlazy;map=square\nformats = csv, jsonl\noutput_dir = "
                     << dir.string() << "\n";
  fpc_result* r = nullptr;
  REQUIRE(fpc_sweep(cfg.string().c_str(), 0, &r) == FPC_OK);
  const auto j = take(r);
  CHECK(j["rows"] == 3);
  CHECK(j["error_rows"] == 0);
  CHECK(j["paths"].size() == 2);
  CHECK(std::filesystem::exists(dir / "golden.csv"));
  CHECK(std::filesystem::exists(dir / "golden.jsonl"));

  const auto broken = dir / "broken.cfg";
  std::ofstream(broken) << "experiment = stationary-sweep\nprimes = 7\n";
  CHECK(fpc_sweep(broken.string().c_str(), 0, &r) == FPC_ERR_CONFIG);
  std::filesystem::remove_all(dir);
}
