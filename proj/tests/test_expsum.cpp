#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fpchain/expsum.hpp"
#include "fpchain/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fpchain;
using testutil::code_of;

namespace {

std::vector<std::uint64_t> table_of(const TotalMap& f) { return {f.table().begin(), f.table().end()}; }

// J disjoint progressions of difference delta and length len at seeded positions.
APFamily random_family(const PrimeField& field, Residue delta, std::size_t count, std::uint64_t len,
                       SplitMix64& rng) {
  const std::uint64_t p = field.modulus();
  std::vector<bool> used(p, false);
  std::vector<APBlock> blocks;
  while (blocks.size() < count) {
    const APBlock b{rng.below(p), len};
    bool ok = true;
    for (std::uint64_t i = 0; i < len && ok; ++i) ok = !used[(b.start + i * delta) % p];
    if (!ok) continue;
    for (std::uint64_t i = 0; i < len; ++i) used[(b.start + i * delta) % p] = true;
    blocks.push_back(b);
  }
  return APFamily(field, delta, blocks);
}

}  // namespace

TEST_CASE("full Weil sums") {
  const PrimeField f13(13);
  const auto inv = build_total_map("inverse", f13);
  const auto zero = ep_sum_full(inv, 0, 1);
  CHECK(zero.real() == doctest::Approx(-1.0));
  CHECK(std::abs(zero.imag()) < 1e-12);
  const auto kloosterman = ep_sum_full(inv, 1, 1);
  CHECK(std::abs(kloosterman) <= 2 * std::sqrt(13.0));
  // a Kloosterman sum is real
  CHECK(std::abs(kloosterman.imag()) < 1e-12);
  CHECK(code_of([&] { ep_sum_full(inv, 0, 0); }) == ErrorCode::ConstantPhase);
  const auto record = weil_record(inv, 1, 1);
  CHECK(record.empirical_constant == doctest::Approx(std::abs(kloosterman) / std::sqrt(13.0)));

  SplitMix64 rng(3);
  for (std::uint64_t p : {101ull, 107ull, 1013ull}) {
    const PrimeField field(p);
    const auto fi = build_total_map("inverse", field);
    const auto fc = build_total_map("cube", field);  // p = 2 mod 3 here
    for (int t = 0; t < 20; ++t) {
      const Residue alpha = rng.below(p), k = 1 + rng.below(p - 1);
      CHECK(weil_record(fi, alpha, k).empirical_constant <= 4.0);
      CHECK(weil_record(fc, alpha, k).empirical_constant <= 8.0);
    }
  }
}

TEST_CASE("progression sums") {
  const PrimeField field(13);
  const auto sq = build_total_map("square", field);
  const auto lin = build_total_map("linear:a=1", field);
  CHECK(ap_sum(sq, 0, 3, {4, 7}).real() == doctest::Approx(7.0));
  Complex direct = 0;
  for (int x : {1, 2, 3}) direct += oracle::ep(x * x, 13);
  CHECK(std::abs(ap_sum(sq, 1, 1, {1, 3}) - direct) < 1e-12);
  for (Residue k = 1; k < 13; ++k) {
    for (Residue delta : {1ull, 5ull}) {
      const double expected = std::abs(std::sin(std::numbers::pi * double(k * delta * 6) / 13) /
                                        std::sin(std::numbers::pi * double(k * delta) / 13));
      CHECK(std::abs(ap_sum(lin, k, delta, {2, 6})) == doctest::Approx(expected));
    }
  }
  CHECK(code_of([&] { ap_sum(sq, 1, 1, {0, 14}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("averaged square sums") {
  SplitMix64 rng(5);
  for (std::uint64_t p : {13ull, 31ull, 101ull, 211ull}) {
    const PrimeField field(p);
    const auto sq = build_total_map("square", field);
    const auto inv = build_total_map("inverse", field);
    for (int t = 0; t < 5; ++t) {
      const Interval iv{rng.below(p), 1 + rng.below(p)};
      const Residue k = 1 + rng.below(p - 1);
      CHECK(averaged_square_sum(sq, k, iv) == doctest::Approx(double(p * iv.length)).epsilon(1e-9));
      const auto exact = averaged_square_sum_exact(sq, k, iv);
      CHECK(exact.is_integer);
      CHECK(exact.value == static_cast<std::int64_t>(p * iv.length));
      const double direct = oracle::averaged_square_direct(table_of(inv), k, iv.start, iv.length);
      CHECK(averaged_square_sum(inv, k, iv) == doctest::Approx(direct).epsilon(1e-9));
      CHECK(oracle::averaged_square_fourier(table_of(inv), k, iv.start, iv.length) ==
            doctest::Approx(direct).epsilon(1e-9));
      // shifting the interval re-indexes n
      const Interval moved{(iv.start + 1 + rng.below(p - 1)) % p, iv.length};
      CHECK(averaged_square_sum(inv, k, moved) == doctest::Approx(averaged_square_sum(inv, k, iv)).epsilon(1e-9));
      const auto counts_moved = averaged_square_sum_exact(inv, k, moved).residue_counts;
      CHECK(counts_moved == averaged_square_sum_exact(inv, k, iv).residue_counts);
    }
    // full interval: every shift sees the same complete sum over the total map
    Complex whole = 0;
    for (Residue x = 0; x < p; ++x) whole += oracle::ep(3 * sq(x), p);
    CHECK(averaged_square_sum(sq, 3, {0, p}) == doctest::Approx(double(p) * std::norm(whole)).epsilon(1e-9));
    CHECK(averaged_square_sum(inv, 1, {0, p}) == doctest::Approx(0.0).epsilon(1e-9));
  }
  const auto inv101 = build_total_map("inverse", PrimeField(101));
  const auto record = averaged_square_record(inv101, 1, {0, 10});
  CHECK(record.empirical_constant == doctest::Approx(record.lhs_value / (101.0 * 10.0)));
  CHECK(record.empirical_constant <= 20.0);
  CHECK(code_of([&] { averaged_square_sum(inv101, 0, {0, 10}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { averaged_square_sum(inv101, 101, {0, 10}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("families") {
  const PrimeField f7(7);
  CHECK(code_of([&] { APFamily(f7, 0, {{0, 1}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { APFamily(f7, 2, {{0, 2}, {2, 1}}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { APFamily(f7, 1, {{0, 8}}); }) == ErrorCode::InvalidArgument);
  const auto fam = parse_family("delta=2;aps=0:2,1:3", f7);
  CHECK(fam.total_size() == 5);
  CHECK_FALSE(fam.equal_lengths());
  CHECK(fam.average_length() == doctest::Approx(2.5));
  CHECK(fam.elements() == std::vector<Residue>{0, 2, 1, 3, 5});
  CHECK(code_of([&] { parse_family("aps=0:2", f7); }) == ErrorCode::Parse);
  CHECK(code_of([&] { parse_family("delta=1;aps=0-2", f7); }) == ErrorCode::Parse);
}

TEST_CASE("family square sums") {
  const PrimeField f7(7);
  const auto sq7 = build_total_map("square", f7);
  CHECK(family_square_sum(sq7, 1, APFamily(f7, 1, {{3, 1}})).lhs_value == doctest::Approx(1.0));
  std::vector<APBlock> singletons;
  for (Residue x = 0; x < 7; ++x) singletons.push_back({x, 1});
  const auto part = family_square_sum(sq7, 3, APFamily(f7, 1, singletons));
  CHECK(part.lhs_value == doctest::Approx(7.0));
  CHECK(part.empirical_constant == doctest::Approx(7.0 / (7.0 * std::log(2.0) * std::log(2.0))));

  const PrimeField field(1009);
  const auto sq = build_total_map("square", field);
  SplitMix64 rng(17);
  const auto fam = random_family(field, 2, 10, 31, rng);
  const auto rec = family_square_sum(sq, 7, fam);
  double direct = 0, worst = 0;
  for (const auto& b : fam.progressions()) {
    Complex s = 0;
    for (std::uint64_t i = 0; i < b.length; ++i) s += oracle::ep(7 * sq(fam.element(b, i)), 1009);
    CHECK(std::abs(s) <= 31.0 + 1e-9);
    direct += std::norm(s);
    worst = std::max(worst, std::norm(s));
  }
  CHECK(rec.lhs_value == doctest::Approx(direct).epsilon(1e-9));
  CHECK(rec.lhs_value <= 10 * worst + 1e-9);
  CHECK(rec.lhs_value <= 10.0 * 31 * 31);
  CHECK(rec.empirical_constant == doctest::Approx(direct / (1009 * std::pow(std::log(32.0), 2))));
  CHECK(code_of([&] { family_square_sum(sq7, 1, parse_family("delta=1;aps=0:2,3:1", f7)); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("linear family sums") {
  const PrimeField f7(7);
  CHECK(linear_family_sum(APFamily(f7, 1, {{0, 7}})).lhs_value == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(linear_family_sum(APFamily(f7, 3, {{0, 1}})).lhs_value == doctest::Approx(6.0));

  const PrimeField field(1009);
  SplitMix64 rng(23);
  const auto fam = random_family(field, 1, 5, 20, rng);
  double direct = 0;
  for (std::uint64_t k = 1; k < 1009; ++k) {
    Complex s = 0;
    for (auto x : fam.elements()) s += oracle::ep(k * x, 1009);
    direct += std::abs(s);
  }
  const auto rec = linear_family_sum(fam);
  CHECK(std::abs(rec.lhs_value - direct) <= 1e-6 * direct);
  CHECK(rec.empirical_constant ==
        doctest::Approx(direct / (std::sqrt(5.0) * 1009 * std::pow(std::log(1009.0), 1.5))).epsilon(1e-6));
}

TEST_CASE("solution counts") {
  const PrimeField f11(11);
  const auto inv = build_total_map("inverse", f11);
  const APFamily all(f11, 1, {{0, 11}});
  CHECK(count_solutions(inv, all, all).count == 11);
  // S' = complement of f(S)
  const APFamily s(f11, 1, {{2, 4}});
  std::vector<bool> image(11, false);
  for (auto x : s.elements()) image[inv(x)] = true;
  std::vector<APBlock> rest;
  for (Residue y = 0; y < 11; ++y) {
    if (!image[y]) rest.push_back({y, 1});
  }
  CHECK(count_solutions(inv, s, APFamily(f11, 1, rest)).count == 0);

  const PrimeField field(1009);
  const auto f = build_total_map("inverse", field);
  SplitMix64 rng(29);
  const auto a = random_family(field, 3, 10, 50, rng);
  const auto b = random_family(field, 7, 10, 50, rng);
  const auto count = count_solutions(f, a, b);
  const auto member = b.membership();
  std::uint64_t brute = 0;
  for (auto x : a.elements()) brute += member[f(x)];
  CHECK(count.count == brute);
  CHECK(count.size_s == 500);
  CHECK(count.expected == doctest::Approx(500.0 * 500.0 / 1009));
  CHECK(count.ratio == doctest::Approx(brute / count.expected));
  CHECK(count.regime_lhs == doctest::Approx(10.0 * 50 * 50));
  CHECK(count.in_regime == (count.regime_lhs >= std::pow(1009.0, 1.6)));

  // summing over a partition of F_p recovers |S|
  const APFamily p1(field, 1, {{0, 400}}), p2(field, 1, {{400, 609}});
  CHECK(count_solutions(f, a, p1).count + count_solutions(f, a, p2).count == a.total_size());
}

TEST_CASE("composed-map averaged sums") {
  const PrimeField field(101);
  const auto inv = build_total_map("inverse", field);
  const std::vector<Residue> alphas{1, 2, 3, 50};
  const auto report = averaged_square_sum_g(inv, 1, 1, {0, 10}, alphas);
  const auto g = TotalMap::composed(inv, 1);
  const double direct = oracle::averaged_square_direct(table_of(g), 1, 0, 10);
  CHECK(report.record.lhs_value == doctest::Approx(direct).epsilon(1e-9));
  CHECK(report.record.empirical_constant == doctest::Approx(direct / 1010.0));
  CHECK(report.twists_checked == alphas.size());
  CHECK(report.max_twisted_ratio <= 4.0);
  CHECK(averaged_square_sum_g(inv, 1, 1, {5, 1}, alphas).record.lhs_value == doctest::Approx(101.0));
  CHECK(code_of([&] { averaged_square_sum_g(inv, 1, 0, {0, 10}, alphas); }) == ErrorCode::InvalidArgument);
  const auto sq = build_total_map("square", field);
  CHECK(code_of([&] { averaged_square_sum_g(sq, 1, 1, {0, 10}, alphas); }) == ErrorCode::NotABijection);
  // alpha = -k makes the twisted phase of the identity map constant
  const auto id = build_total_map("linear:a=1", field);
  const std::vector<Residue> bad{100};
  CHECK(code_of([&] { averaged_square_sum_g(id, 1, 1, {0, 10}, bad); }) == ErrorCode::ConstantPhase);
}
