#include "doctest.h"

#include <cmath>
#include <map>

#include "fpchain/chain.hpp"
#include "fpchain/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fpchain;
using testutil::code_of;

namespace {

std::map<std::uint32_t, mpq_class> row_of(const TransitionKernel& k, std::size_t x) {
  std::map<std::uint32_t, mpq_class> out;
  for (const auto& t : k.row(x)) {
    out[t.target] = mpq_class(t.weight, k.denominator());
    out[t.target].canonicalize();
  }
  return out;
}

std::map<std::uint32_t, mpq_class> expect(std::initializer_list<std::pair<std::uint32_t, mpq_class>> entries) {
  return {entries.begin(), entries.end()};
}

}  // namespace

TEST_CASE("chain descriptors") {
  const auto spec = parse_chain("chain:lazy;map=compose:shift=1;base=inverse;gamma=2;p=7");
  CHECK(spec.variant() == ChainVariant::LazyHold);
  CHECK(spec.gamma() == 2);
  CHECK(spec.modulus() == 7);
  CHECK(spec.map()(1) == 4);
  CHECK(parse_chain(spec.descriptor()).descriptor() == spec.descriptor());
  CHECK(parse_chain("chain:additive;gamma=1;p=5").variant() == ChainVariant::PureAdditive);
  CHECK(code_of([] { parse_chain("chain:lazy;map=square;gamma=11;p=11"); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { parse_chain("chain:sideways;map=square;gamma=1;p=11"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_chain("chain:lazy;map=square;p=11"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_chain("chain:lazy;map=square;gamma=1;p=15"); }) == ErrorCode::NotPrime);
}

TEST_CASE("build_kernel examples") {
  const auto lazy = build_kernel(parse_chain("chain:lazy;map=square;gamma=1;p=11"));
  CHECK(row_of(lazy, 0) == expect({{0, mpq_class(1, 2)}, {1, mpq_class(1, 4)}, {10, mpq_class(1, 4)}}));
  const auto additive = build_kernel(parse_chain("chain:additive;gamma=2;p=5"));
  CHECK(row_of(additive, 1) == expect({{3, mpq_class(1, 2)}, {4, mpq_class(1, 2)}}));
  const auto noisy = build_kernel(parse_chain("chain:noisezero;map=inverse;gamma=1;p=7"));
  CHECK(row_of(noisy, 3) == expect({{4, mpq_class(1, 3)}, {5, mpq_class(1, 3)}, {6, mpq_class(1, 3)}}));
  // state 1 on the lazy square chain at p=3 sends 1 -> 1 +/- 1, merging into the hold
  const auto merged = build_kernel(parse_chain("chain:lazy;map=square;gamma=1;p=3"));
  CHECK(row_of(merged, 1) == expect({{0, mpq_class(1, 4)}, {1, mpq_class(1, 2)}, {2, mpq_class(1, 4)}}));
}

TEST_CASE("kernels agree with the dense oracle and rows sum to one") {
  for (const char* variant : {"lazy", "noisezero", "additive", "nonlazy"}) {
    for (std::uint64_t p : {3ull, 5ull, 7ull, 11ull, 13ull, 31ull}) {
      for (const char* map : {"square", "inverse"}) {
        const auto spec = parse_chain(std::string("chain:") + variant + ";map=" + map + ";gamma=2;p=" + std::to_string(p));
        const auto kernel = build_kernel(spec);
        const auto dense = oracle::dense_kernel(spec);
        REQUIRE(kernel.size() == p);
        for (std::size_t x = 0; x < p; ++x) {
          mpq_class total = 0;
          const auto expected_degree = spec.variant() == ChainVariant::PureAdditive ? 2u : 3u;
          CHECK(kernel.row(x).size() <= expected_degree);
          for (std::size_t y = 0; y < p; ++y) {
            CHECK(kernel.probability(x, y) == dense[x][y]);
            total += kernel.probability(x, y);
          }
          CHECK(total == 1);
        }
      }
    }
  }
}

TEST_CASE("bijective kernels are doubly stochastic") {
  for (std::uint64_t p : primes_in_range(3, 600)) {
    for (const char* variant : {"lazy", "noisezero", "nonlazy"}) {
      const auto kernel =
          build_kernel(parse_chain(std::string("chain:") + variant + ";map=inverse;gamma=1;p=" + std::to_string(p)));
      std::vector<std::uint64_t> column(p, 0);
      for (std::size_t x = 0; x < p; ++x) {
        for (const auto& t : kernel.row(x)) column[t.target] += t.weight;
      }
      for (auto c : column) CHECK(c == kernel.denominator());
    }
  }
}

TEST_CASE("step_distribution examples") {
  const auto additive = build_kernel(parse_chain("chain:additive;gamma=1;p=5"));
  const auto stepped = step_distribution(additive, Distribution::point_mass(5, 0, Distribution::Mode::Exact));
  CHECK(stepped.exact_weights() ==
        std::vector<mpq_class>{0, mpq_class(1, 2), 0, 0, mpq_class(1, 2)});

  const auto lazy_inv = build_kernel(parse_chain("chain:lazy;map=inverse;gamma=3;p=13"));
  const auto uniform = Distribution::uniform(13, Distribution::Mode::Exact);
  CHECK(step_distribution(lazy_inv, uniform).exact_weights() == uniform.exact_weights());

  const auto spec = parse_chain("chain:lazy;map=square;gamma=1;p=11");
  const auto kernel = build_kernel(spec);
  const auto dense = oracle::dense_kernel(spec);
  auto dist = Distribution::point_mass(11, 0, Distribution::Mode::Exact);
  std::vector<mpq_class> ref(11, 0);
  ref[0] = 1;
  for (int step = 0; step < 2; ++step) {
    dist = step_distribution(kernel, dist);
    ref = oracle::row_times(ref, dense);
  }
  CHECK(dist.exact_weights() == ref);

  const auto as_float = Distribution::uniform(11, Distribution::Mode::Float);
  CHECK(code_of([&] { step_distribution(kernel, as_float, true); }) == ErrorCode::ModeMismatch);
  CHECK(code_of([&] { as_float.exact_weights(); }) == ErrorCode::ModeMismatch);
}

TEST_CASE("float evolution tracks exact evolution") {
  for (std::uint64_t p : {101ull, 499ull}) {
    const auto kernel = build_kernel(parse_chain("chain:lazy;map=square;gamma=1;p=" + std::to_string(p)));
    auto exact = Distribution::point_mass(p, 1, Distribution::Mode::Exact);
    auto flt = Distribution::point_mass(p, 1, Distribution::Mode::Float);
    for (int step = 0; step < 100; ++step) {
      exact = step_distribution(kernel, exact);
      flt = step_distribution(kernel, flt);
    }
    const auto e = exact.to_float();
    for (std::size_t i = 0; i < p; ++i) CHECK(std::abs(e[i] - flt.at(i)) <= 1e-9);
  }
}

TEST_CASE("tv_distance examples") {
  const auto u = Distribution::uniform(7, Distribution::Mode::Exact);
  const auto d = Distribution::point_mass(7, 3, Distribution::Mode::Exact);
  CHECK(tv_distance(u, u) == 0.0);
  CHECK(tv_distance_exact(d, u) == mpq_class(6, 7));
  CHECK(tv_distance(d, u) == doctest::Approx(6.0 / 7.0));
  CHECK(tv_distance(d, Distribution::point_mass(7, 4, Distribution::Mode::Float)) == 1.0);
}

TEST_CASE("sample paths") {
  const auto additive = parse_chain("chain:additive;gamma=3;p=17");
  CHECK(sample_path(additive, 5, 0, 9) == std::vector<Residue>{5});
  const auto path = sample_path(additive, 5, 500, 9);
  REQUIRE(path.size() == 501);
  CHECK(path.front() == 5);
  for (std::size_t i = 1; i < path.size(); ++i) {
    const auto d = (path[i] + 17 - path[i - 1]) % 17;
    CHECK((d == 3 || d == 14));
  }
  CHECK(sample_path(additive, 5, 500, 9) == path);
  CHECK(sample_path(additive, 5, 500, 10) != path);
  // pinned stream: the generator is fixed, so these values never change
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFull);
}

TEST_CASE("one-step frequencies match the kernel row") {
  const auto spec = parse_chain("chain:lazy;map=square;gamma=1;p=11");
  const auto kernel = build_kernel(spec);
  // paths of length one from a fixed state, a million seeds
  constexpr int kSamples = 1'000'000;
  std::map<Residue, int> hits;
  for (int s = 0; s < kSamples; ++s) hits[sample_path(spec, 3, 1, s)[1]] += 1;
  for (const auto& t : kernel.row(3)) {
    const double prob = static_cast<double>(t.weight) / kernel.denominator();
    const double se = std::sqrt(prob * (1 - prob) / kSamples);
    CHECK(std::abs(hits[t.target] / double(kSamples) - prob) <= 3 * se);
  }
  int total = 0;
  for (auto& [_, n] : hits) total += n;
  int in_row = 0;
  for (const auto& t : kernel.row(3)) in_row += hits[t.target];
  CHECK(total == in_row);
}
