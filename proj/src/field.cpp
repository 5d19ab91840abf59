#include "fpchain/field.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "fpchain/error.hpp"
#include "text_util.hpp"

namespace fpchain {

namespace {

using u128 = unsigned __int128;

std::uint64_t mulmod64(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % m);
}

std::uint64_t powmod64(std::uint64_t b, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  b %= m;
  while (e > 0) {
    if (e & 1) r = mulmod64(r, b, m);
    b = mulmod64(b, b, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

bool is_prime(std::uint64_t n) noexcept {
  if (n < 2) return false;
  for (std::uint64_t q : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % q == 0) return n == q;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // These witnesses are deterministic for all n < 2^64.
  for (std::uint64_t a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    std::uint64_t x = powmod64(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod64(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

std::vector<std::uint64_t> primes_in_range(std::uint64_t lo, std::uint64_t hi) {
  std::vector<std::uint64_t> out;
  if (hi < 2 || lo > hi) return out;
  std::vector<bool> composite(hi + 1, false);
  for (std::uint64_t i = 2; i * i <= hi; ++i) {
    if (composite[i]) continue;
    for (std::uint64_t j = i * i; j <= hi; j += i) composite[j] = true;
  }
  for (std::uint64_t n = std::max<std::uint64_t>(lo, 2); n <= hi; ++n) {
    if (!composite[n]) out.push_back(n);
  }
  return out;
}

PrimeField::PrimeField(std::uint64_t p) : p_(p) {
  if (p < 3 || p % 2 == 0 || !is_prime(p)) {
    fail(ErrorCode::NotPrime, "modulus " + std::to_string(p) + " is not an odd prime");
  }
  if (p >= (1ull << 32)) {
    fail(ErrorCode::InvalidArgument, "modulus " + std::to_string(p) + " exceeds 32 bits");
  }
}

Residue PrimeField::reduce(std::int64_t value) const noexcept {
  const auto p = static_cast<std::int64_t>(p_);
  std::int64_t r = value % p;
  if (r < 0) r += p;
  return static_cast<Residue>(r);
}

Residue PrimeField::pow(Residue base, std::uint64_t exponent) const noexcept {
  Residue r = 1;
  while (exponent > 0) {
    if (exponent & 1) r = mul(r, base);
    base = mul(base, base);
    exponent >>= 1;
  }
  return r;
}

Residue PrimeField::inv(Residue a) const {
  if (a % p_ == 0) fail(ErrorCode::InvalidArgument, "inverse of zero");
  return pow(a, p_ - 2);
}

bool PrimeField::is_square(Residue a) const noexcept {
  return a == 0 || pow(a, (p_ - 1) / 2) == 1;
}

// ---------------------------------------------------------------------------

Polynomial::Polynomial(const PrimeField& field, std::vector<Residue> coefficients)
    : coeffs_(std::move(coefficients)) {
  for (auto& c : coeffs_) c = field.reduce_unsigned(c);
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

Residue Polynomial::evaluate(const PrimeField& field, Residue x) const noexcept {
  Residue acc = 0;
  for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) {
    acc = field.add(field.mul(acc, x), *it);
  }
  return acc;
}

namespace {

Polynomial make_monic(const PrimeField& field, const Polynomial& a) {
  if (a.is_zero()) return a;
  const Residue scale = field.inv(a.leading());
  std::vector<Residue> c(a.coefficients().begin(), a.coefficients().end());
  for (auto& v : c) v = field.mul(v, scale);
  return Polynomial(field, std::move(c));
}

Polynomial remainder(const PrimeField& field, const Polynomial& a, const Polynomial& b) {
  std::vector<Residue> r(a.coefficients().begin(), a.coefficients().end());
  const auto bc = b.coefficients();
  const int db = b.degree();
  const Residue lead_inv = field.inv(b.leading());
  for (int i = static_cast<int>(r.size()) - 1; i >= db; --i) {
    const Residue q = field.mul(r[i], lead_inv);
    if (q == 0) continue;
    for (int j = 0; j <= db; ++j) {
      r[i - db + j] = field.sub(r[i - db + j], field.mul(q, bc[j]));
    }
  }
  r.resize(std::min<std::size_t>(r.size(), static_cast<std::size_t>(std::max(db, 0))));
  return Polynomial(field, std::move(r));
}

}  // namespace

Polynomial polynomial_gcd(const PrimeField& field, Polynomial a, Polynomial b) {
  while (!b.is_zero()) {
    Polynomial r = remainder(field, a, b);
    a = std::move(b);
    b = std::move(r);
  }
  return make_monic(field, a);
}

// ---------------------------------------------------------------------------

RationalMap RationalMap::create(const PrimeField& field, std::vector<Residue> numerator,
                                std::vector<Residue> denominator, int degree_bound) {
  Polynomial num(field, std::move(numerator));
  Polynomial den(field, std::move(denominator));
  if (den.is_zero()) fail(ErrorCode::InvalidArgument, "denominator polynomial is zero");
  const int natural = std::max({num.degree(), den.degree(), 0});
  if (degree_bound < 0) degree_bound = natural;
  if (num.degree() > degree_bound || den.degree() > degree_bound) {
    fail(ErrorCode::InvalidArgument, "polynomial degree exceeds the degree bound");
  }
  if (polynomial_gcd(field, num, den).degree() > 0) {
    fail(ErrorCode::InvalidArgument, "numerator and denominator are not coprime");
  }
  return RationalMap(field, std::move(num), std::move(den), degree_bound);
}

std::vector<Residue> RationalMap::poles() const {
  std::vector<Residue> out;
  if (den_.degree() == 0) return out;
  for (Residue x = 0; x < field_.modulus(); ++x) {
    if (den_.evaluate(field_, x) == 0) out.push_back(x);
  }
  return out;
}

bool RationalMap::is_linear_or_constant() const {
  const Residue p = field_.modulus();
  std::optional<std::pair<Residue, Residue>> first;
  std::optional<Residue> slope;
  for (Residue x = 0; x < p; ++x) {
    const auto y = eval_rational(*this, x);
    if (!y) continue;
    if (!first) {
      first = {x, *y};
      continue;
    }
    const Residue expected_slope =
        field_.mul(field_.sub(*y, first->second), field_.inv(field_.sub(x, first->first)));
    if (!slope) {
      slope = expected_slope;
    } else if (expected_slope != *slope) {
      return false;
    }
  }
  return true;
}

std::optional<Residue> eval_rational(const RationalMap& map, Residue x) {
  const auto& f = map.field();
  const Residue q = map.denominator().evaluate(f, x);
  if (q == 0) return std::nullopt;
  return f.mul(map.numerator().evaluate(f, x), f.inv(q));
}

namespace {

std::vector<std::uint32_t> rational_table(const RationalMap& map, const PoleAssignments& poles) {
  const auto& f = map.field();
  const Residue p = f.modulus();
  std::vector<std::uint32_t> table(p);
  const bool constant_den = map.denominator().degree() == 0;
  const Residue den_inv = constant_den ? f.inv(map.denominator().leading()) : 0;
  for (Residue x = 0; x < p; ++x) {
    if (constant_den) {
      table[x] = static_cast<std::uint32_t>(f.mul(map.numerator().evaluate(f, x), den_inv));
      continue;
    }
    if (const auto y = eval_rational(map, x)) {
      table[x] = static_cast<std::uint32_t>(*y);
      continue;
    }
    if (const auto it = poles.values.find(x); it != poles.values.end()) {
      table[x] = static_cast<std::uint32_t>(f.reduce_unsigned(it->second));
    } else if (poles.default_zero) {
      table[x] = 0;
    } else {
      fail(ErrorCode::MissingPoleAssignment, "no value assigned at pole x=" + std::to_string(x));
    }
  }
  return table;
}

bool table_is_permutation(std::span<const std::uint32_t> table) {
  std::vector<bool> seen(table.size(), false);
  for (auto v : table) {
    if (seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

}  // namespace

ClassReport classify_map(const RationalMap& map, const PoleAssignments& poles) {
  const auto table = rational_table(map, poles);
  ClassReport report;
  report.is_bijection = table_is_permutation(table);
  report.is_linear_or_constant = map.is_linear_or_constant();
  report.in_class = report.is_bijection && !report.is_linear_or_constant;
  return report;
}

// ---------------------------------------------------------------------------

TotalMap::TotalMap(PrimeField field, std::vector<std::uint32_t> table, MapProvenance provenance)
    : field_(field), table_(std::move(table)), pole_mask_(table_.size(), false),
      provenance_(std::move(provenance)) {
  bijective_ = table_is_permutation(table_);
  if (provenance_.kind == MapKind::Rational && provenance_.rational) {
    for (Residue x : provenance_.rational->poles()) pole_mask_[x] = true;
  }
}

TotalMap TotalMap::from_rational(const RationalMap& map, const PoleAssignments& poles) {
  MapProvenance prov;
  prov.kind = MapKind::Rational;
  prov.rational = map;
  prov.poles = poles;
  return TotalMap(map.field(), rational_table(map, poles), std::move(prov));
}

TotalMap TotalMap::square(const PrimeField& field) {
  std::vector<std::uint32_t> table(field.modulus());
  for (Residue x = 0; x < field.modulus(); ++x) table[x] = static_cast<std::uint32_t>(field.mul(x, x));
  MapProvenance prov;
  prov.kind = MapKind::Square;
  return TotalMap(field, std::move(table), std::move(prov));
}

TotalMap TotalMap::linear(const PrimeField& field, Residue a) {
  a = field.reduce_unsigned(a);
  std::vector<std::uint32_t> table(field.modulus());
  for (Residue x = 0; x < field.modulus(); ++x) table[x] = static_cast<std::uint32_t>(field.mul(a, x));
  MapProvenance prov;
  prov.kind = MapKind::Linear;
  prov.linear_a = a;
  return TotalMap(field, std::move(table), std::move(prov));
}

TotalMap TotalMap::composed(const TotalMap& base, Residue shift) {
  const auto& f = base.field();
  const auto inverse = base.inverse_table();
  shift = f.reduce_unsigned(shift);
  std::vector<std::uint32_t> table(f.modulus());
  for (Residue x = 0; x < f.modulus(); ++x) table[x] = base.table_[f.add(inverse[x], shift)];
  MapProvenance prov;
  prov.kind = MapKind::ComposedG;
  prov.shift = shift;
  prov.base = std::make_shared<const TotalMap>(base);
  return TotalMap(f, std::move(table), std::move(prov));
}

std::vector<std::uint32_t> TotalMap::inverse_table() const {
  if (!bijective_) fail(ErrorCode::NotABijection, "map is not a bijection of F_p");
  std::vector<std::uint32_t> inv(table_.size());
  for (std::size_t x = 0; x < table_.size(); ++x) inv[table_[x]] = static_cast<std::uint32_t>(x);
  return inv;
}

bool TotalMap::is_pole(Residue x) const noexcept { return pole_mask_[x]; }

// ---------------------------------------------------------------------------

namespace {

std::vector<std::int64_t> parse_coefficients(std::string_view text) {
  std::vector<std::int64_t> out;
  for (auto part : detail::split(text, ',')) out.push_back(detail::parse_int(part, "coefficient"));
  if (out.empty()) fail(ErrorCode::Parse, "empty coefficient list");
  return out;
}

}  // namespace

MapDescriptor parse_map_descriptor(std::string_view text) {
  text = detail::trim(text);
  MapDescriptor d;
  d.text = std::string(text);
  if (text == "square") {
    d.kind = MapKind::Square;
    return d;
  }
  if (text == "cube") {
    d.kind = MapKind::Rational;
    d.numerator = {0, 0, 0, 1};
    d.denominator = {1};
    return d;
  }
  if (text == "inverse") {
    d.kind = MapKind::Rational;
    d.numerator = {1};
    d.denominator = {0, 1};
    return d;
  }
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) fail(ErrorCode::Parse, "unknown map descriptor '" + d.text + "'");
  const auto head = text.substr(0, colon);
  const auto body = text.substr(colon + 1);

  if (head == "linear") {
    const auto kv = detail::split_key_value(body);
    if (kv.first != "a") fail(ErrorCode::Parse, "linear map expects a=<a>");
    d.kind = MapKind::Linear;
    d.linear_a = detail::parse_int(kv.second, "a");
    return d;
  }
  if (head == "compose") {
    const auto base_pos = body.find("base=");
    if (base_pos == std::string_view::npos) fail(ErrorCode::Parse, "compose expects base=<map>");
    d.kind = MapKind::ComposedG;
    bool have_shift = false;
    for (auto token : detail::split(body.substr(0, base_pos), ';')) {
      if (token.empty()) continue;
      const auto kv = detail::split_key_value(token);
      if (kv.first != "shift") fail(ErrorCode::Parse, "unknown compose key '" + std::string(kv.first) + "'");
      d.shift = detail::parse_int(kv.second, "shift");
      have_shift = true;
    }
    if (!have_shift) fail(ErrorCode::Parse, "compose expects shift=<gamma>");
    d.base = std::make_shared<const MapDescriptor>(parse_map_descriptor(body.substr(base_pos + 5)));
    return d;
  }
  if (head == "rational") {
    d.kind = MapKind::Rational;
    bool have_p = false;
    bool have_q = false;
    for (auto token : detail::split(body, ';')) {
      if (token.empty()) continue;
      const auto kv = detail::split_key_value(token);
      if (kv.first == "P") {
        d.numerator = parse_coefficients(kv.second);
        have_p = true;
      } else if (kv.first == "Q") {
        d.denominator = parse_coefficients(kv.second);
        have_q = true;
      } else if (kv.first == "poles") {
        std::vector<std::pair<std::int64_t, std::int64_t>> poles;
        for (auto item : detail::split(kv.second, ',')) {
          if (detail::trim(item).empty()) continue;
          const auto sep = item.find(':');
          if (sep == std::string_view::npos) fail(ErrorCode::Parse, "pole entry expects x:v");
          poles.emplace_back(detail::parse_int(item.substr(0, sep), "pole"),
                             detail::parse_int(item.substr(sep + 1), "pole value"));
        }
        d.poles = std::move(poles);
      } else {
        fail(ErrorCode::Parse, "unknown rational key '" + std::string(kv.first) + "'");
      }
    }
    if (!have_p || !have_q) fail(ErrorCode::Parse, "rational map needs both P= and Q=");
    return d;
  }
  fail(ErrorCode::Parse, "unknown map descriptor '" + d.text + "'");
}

TotalMap build_total_map(const MapDescriptor& d, const PrimeField& field) {
  auto reduce_all = [&](const std::vector<std::int64_t>& c) {
    std::vector<Residue> out;
    out.reserve(c.size());
    for (auto v : c) out.push_back(field.reduce(v));
    return out;
  };
  switch (d.kind) {
    case MapKind::Square:
      return TotalMap::square(field);
    case MapKind::Linear:
      return TotalMap::linear(field, field.reduce(d.linear_a));
    case MapKind::ComposedG:
      return TotalMap::composed(build_total_map(*d.base, field), field.reduce(d.shift));
    case MapKind::Rational: {
      auto map = RationalMap::create(field, reduce_all(d.numerator), reduce_all(d.denominator));
      PoleAssignments poles = PoleAssignments::zero_default();
      if (d.poles) {
        poles.default_zero = false;
        for (auto [x, v] : *d.poles) poles.values[field.reduce(x)] = field.reduce(v);
      }
      return TotalMap::from_rational(map, poles);
    }
  }
  fail(ErrorCode::Parse, "unsupported map kind");
}

}  // namespace fpchain
