#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fpchain {

/// Canonical representative of an element of F_p, always in [0, p).
using Residue = std::uint64_t;

bool is_prime(std::uint64_t n) noexcept;

/// Primes in [lo, hi] by a segmented-free plain sieve (hi is machine-word sized
/// but is expected to stay below a few million in practice).
std::vector<std::uint64_t> primes_in_range(std::uint64_t lo, std::uint64_t hi);

/// Arithmetic context for an odd prime p < 2^32, so every product of two
/// residues fits in 64 bits.
class PrimeField {
 public:
  explicit PrimeField(std::uint64_t p);

  std::uint64_t modulus() const noexcept { return p_; }

  Residue reduce(std::int64_t value) const noexcept;
  Residue reduce_unsigned(std::uint64_t value) const noexcept { return value % p_; }

  Residue add(Residue a, Residue b) const noexcept {
    const Residue s = a + b;
    return s >= p_ ? s - p_ : s;
  }
  Residue sub(Residue a, Residue b) const noexcept { return a >= b ? a - b : a + p_ - b; }
  Residue neg(Residue a) const noexcept { return a == 0 ? 0 : p_ - a; }
  Residue mul(Residue a, Residue b) const noexcept { return (a * b) % p_; }
  Residue pow(Residue base, std::uint64_t exponent) const noexcept;
  Residue inv(Residue a) const;

  /// Euler's criterion; zero counts as a square.
  bool is_square(Residue a) const noexcept;

  bool operator==(const PrimeField&) const = default;

 private:
  std::uint64_t p_;
};

/// Polynomial over F_p with coefficients stored low degree first and no
/// trailing zeros. The zero polynomial has degree -1.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(const PrimeField& field, std::vector<Residue> coefficients);

  int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const noexcept { return coeffs_.empty(); }
  Residue leading() const noexcept { return coeffs_.empty() ? 0 : coeffs_.back(); }
  std::span<const Residue> coefficients() const noexcept { return coeffs_; }

  Residue evaluate(const PrimeField& field, Residue x) const noexcept;

  bool operator==(const Polynomial&) const = default;

 private:
  std::vector<Residue> coeffs_;
};

/// Monic gcd; returns the zero polynomial only when both inputs are zero.
Polynomial polynomial_gcd(const PrimeField& field, Polynomial a, Polynomial b);

/// P/Q over F_p with deg P, deg Q <= degree bound and gcd(P, Q) = 1.
/// Linear or constant quotients are representable; classify_map reports them.
class RationalMap {
 public:
  static RationalMap create(const PrimeField& field, std::vector<Residue> numerator,
                            std::vector<Residue> denominator, int degree_bound = -1);

  const PrimeField& field() const noexcept { return field_; }
  const Polynomial& numerator() const noexcept { return num_; }
  const Polynomial& denominator() const noexcept { return den_; }
  int degree_bound() const noexcept { return degree_bound_; }

  /// Roots of Q in F_p, ascending.
  std::vector<Residue> poles() const;

  /// True when the points (x, P(x)/Q(x)) off the poles lie on one line.
  bool is_linear_or_constant() const;

 private:
  RationalMap(PrimeField field, Polynomial num, Polynomial den, int bound)
      : field_(field), num_(std::move(num)), den_(std::move(den)), degree_bound_(bound) {}

  PrimeField field_;
  Polynomial num_;
  Polynomial den_;
  int degree_bound_;
};

/// P(x)/Q(x), or std::nullopt at a pole.
std::optional<Residue> eval_rational(const RationalMap& map, Residue x);

/// Values used at the roots of Q. With default_zero set, unassigned poles map
/// to 0 (the convention that makes 1/x total with 0 -> 0).
struct PoleAssignments {
  std::map<Residue, Residue> values;
  bool default_zero = false;

  static PoleAssignments zero_default() { return PoleAssignments{{}, true}; }
};

struct ClassReport {
  bool is_bijection = false;
  bool is_linear_or_constant = false;
  bool in_class = false;  // bijective extension of a non-linear, non-constant P/Q
};

ClassReport classify_map(const RationalMap& map, const PoleAssignments& poles);

enum class MapKind { Rational, Square, Linear, ComposedG };

class TotalMap;

struct MapProvenance {
  MapKind kind = MapKind::Rational;
  std::optional<RationalMap> rational;
  PoleAssignments poles;
  Residue linear_a = 0;
  Residue shift = 0;                      // gamma of the composed map
  std::shared_ptr<const TotalMap> base;   // composed map only
};

/// A function F_p -> F_p materialized as a lookup table.
class TotalMap {
 public:
  static TotalMap from_rational(const RationalMap& map, const PoleAssignments& poles);
  static TotalMap square(const PrimeField& field);
  static TotalMap linear(const PrimeField& field, Residue a);
  /// x -> f(f^{-1}(x) + shift); the base must be a bijection.
  static TotalMap composed(const TotalMap& base, Residue shift);

  const PrimeField& field() const noexcept { return field_; }
  std::uint64_t size() const noexcept { return table_.size(); }
  Residue operator()(Residue x) const noexcept { return table_[x]; }
  std::span<const std::uint32_t> table() const noexcept { return table_; }
  const MapProvenance& provenance() const noexcept { return provenance_; }

  bool is_bijection() const noexcept { return bijective_; }
  /// Throws NotABijection for non-injective tables.
  std::vector<std::uint32_t> inverse_table() const;

  /// True where the underlying formula is undefined (roots of Q).
  bool is_pole(Residue x) const noexcept;

 private:
  TotalMap(PrimeField field, std::vector<std::uint32_t> table, MapProvenance provenance);

  PrimeField field_;
  std::vector<std::uint32_t> table_;
  std::vector<bool> pole_mask_;
  MapProvenance provenance_;
  bool bijective_ = false;
};

/// Parsed text form of a map, independent of p.
///   rational:P=<c0,c1,...>;Q=<c0,...>[;poles=<x:v,...>]
///   square | cube | inverse | linear:a=<a> | compose:shift=<g>;base=<map>
struct MapDescriptor {
  MapKind kind = MapKind::Rational;
  std::vector<std::int64_t> numerator;
  std::vector<std::int64_t> denominator;
  std::optional<std::vector<std::pair<std::int64_t, std::int64_t>>> poles;
  std::int64_t linear_a = 1;
  std::int64_t shift = 0;
  std::shared_ptr<const MapDescriptor> base;
  std::string text;
};

MapDescriptor parse_map_descriptor(std::string_view text);
TotalMap build_total_map(const MapDescriptor& descriptor, const PrimeField& field);
inline TotalMap build_total_map(std::string_view text, const PrimeField& field) {
  return build_total_map(parse_map_descriptor(text), field);
}

}  // namespace fpchain
