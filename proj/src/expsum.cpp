#include "fpchain/expsum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "fpchain/error.hpp"

namespace fpchain {

PhaseTable::PhaseTable(std::uint64_t p) : table_(p) {
  const double step = 2.0 * std::numbers::pi / static_cast<double>(p);
  for (std::uint64_t r = 0; r < p; ++r) {
    const double angle = step * static_cast<double>(r);
    table_[r] = {std::cos(angle), std::sin(angle)};
  }
}

namespace {

void require_nonzero_k(const PrimeField& field, Residue k) {
  if (field.reduce_unsigned(k) == 0) fail(ErrorCode::InvalidArgument, "frequency k must be non-zero mod p");
}

// v[x] = e_p(k f(x))
std::vector<Complex> phase_values(const TotalMap& f, const PhaseTable& e, Residue k) {
  const auto& field = f.field();
  std::vector<Complex> v(f.size());
  for (Residue x = 0; x < f.size(); ++x) v[x] = e(field.mul(k, f(x)));
  return v;
}

}  // namespace

Complex ep_sum_full(const TotalMap& f, Residue alpha, Residue k) {
  const auto& field = f.field();
  alpha = field.reduce_unsigned(alpha);
  k = field.reduce_unsigned(k);
  const PhaseTable e(field.modulus());
  CompensatedSum sum;
  std::optional<Residue> first_phase;
  bool constant = true;
  for (Residue x = 0; x < f.size(); ++x) {
    if (f.is_pole(x)) continue;
    const Residue phase = field.add(field.mul(alpha, x), field.mul(k, f(x)));
    if (!first_phase) {
      first_phase = phase;
    } else if (phase != *first_phase) {
      constant = false;
    }
    sum.add(e(phase));
  }
  if (constant) fail(ErrorCode::ConstantPhase, "phase alpha*x + k*f(x) is constant off the poles");
  return sum.value();
}

ExpSumRecord weil_record(const TotalMap& f, Residue alpha, Residue k) {
  ExpSumRecord r;
  r.kind = "weil";
  r.p = f.field().modulus();
  r.k = f.field().reduce_unsigned(k);
  r.lhs_value = std::abs(ep_sum_full(f, alpha, k));
  r.bound_form = "C*sqrt(p)";
  r.bound_without_constant = std::sqrt(static_cast<double>(r.p));
  r.empirical_constant = r.lhs_value / r.bound_without_constant;
  return r;
}

Complex ap_sum(const TotalMap& f, Residue k, Residue delta, const APBlock& block) {
  const auto& field = f.field();
  if (block.length > field.modulus()) fail(ErrorCode::InvalidArgument, "progression longer than p");
  k = field.reduce_unsigned(k);
  delta = field.reduce_unsigned(delta);
  const PhaseTable e(field.modulus());
  CompensatedSum sum;
  Residue x = field.reduce_unsigned(block.start);
  for (std::uint64_t i = 0; i < block.length; ++i) {
    sum.add(e(field.mul(k, f(x))));
    x = field.add(x, delta);
  }
  return sum.value();
}

double averaged_square_sum(const TotalMap& f, Residue k, const Interval& interval) {
  const auto& field = f.field();
  require_nonzero_k(field, k);
  const std::uint64_t p = field.modulus();
  const std::uint64_t len = std::min<std::uint64_t>(interval.length, p);
  const Residue start = field.reduce_unsigned(interval.start);
  const PhaseTable e(p);
  const auto v = phase_values(f, e, field.reduce_unsigned(k));

  auto window = [&](std::uint64_t n) {
    CompensatedSum s;
    for (std::uint64_t i = 0; i < len; ++i) s.add(v[(start + i + n) % p]);
    return s.value();
  };
  // Sliding window over n, re-summed from scratch periodically to bound drift.
  constexpr std::uint64_t kResync = 64;
  CompensatedSum total;
  Complex s = window(1);
  for (std::uint64_t n = 1; n <= p; ++n) {
    if ((n - 1) % kResync == 0 && n != 1) s = window(n);
    total.add(std::norm(s));
    s += v[(start + n + len) % p] - v[(start + n) % p];
  }
  return total.value().real();
}

ExpSumRecord averaged_square_record(const TotalMap& f, Residue k, const Interval& interval) {
  ExpSumRecord r;
  r.kind = "avg";
  r.p = f.field().modulus();
  r.k = f.field().reduce_unsigned(k);
  r.lhs_value = averaged_square_sum(f, k, interval);
  r.bound_form = "C*p*|I|";
  r.bound_without_constant = static_cast<double>(r.p) * static_cast<double>(std::min(interval.length, r.p));
  r.empirical_constant = r.lhs_value / r.bound_without_constant;
  return r;
}

ExactAveragedSum averaged_square_sum_exact(const TotalMap& f, Residue k, const Interval& interval) {
  const auto& field = f.field();
  require_nonzero_k(field, k);
  const std::uint64_t p = field.modulus();
  const std::uint64_t len = std::min<std::uint64_t>(interval.length, p);
  k = field.reduce_unsigned(k);
  std::vector<Residue> u(p);
  for (Residue x = 0; x < p; ++x) u[x] = field.mul(k, f(x));
  ExactAveragedSum out;
  out.residue_counts.assign(p, 0);
  for (std::uint64_t i = 0; i < len; ++i) {
    for (std::uint64_t j = 0; j < len; ++j) {
      Residue x = (interval.start + i) % p;
      Residue y = (interval.start + j) % p;
      for (std::uint64_t n = 0; n < p; ++n) {
        ++out.residue_counts[field.sub(u[x], u[y])];
        x = x + 1 == p ? 0 : x + 1;
        y = y + 1 == p ? 0 : y + 1;
      }
    }
  }
  out.is_integer = true;
  for (std::uint64_t r = 2; r < p; ++r) {
    if (out.residue_counts[r] != out.residue_counts[1]) out.is_integer = false;
  }
  // 1 + e_p(1) + ... + e_p(p-1) = 0 collapses equal non-zero counts.
  if (out.is_integer) {
    out.value = static_cast<std::int64_t>(out.residue_counts[0]) - static_cast<std::int64_t>(out.residue_counts[1]);
  }
  return out;
}

ExpSumRecord family_square_sum(const TotalMap& f, Residue k, const APFamily& family) {
  require_nonzero_k(f.field(), k);
  if (!(f.field() == family.field())) fail(ErrorCode::InvalidArgument, "family and map live over different fields");
  if (!family.equal_lengths() || family.count() == 0) {
    fail(ErrorCode::InvalidArgument, "family must be non-empty with equal lengths");
  }
  CompensatedSum lhs;
  for (const auto& block : family.progressions()) lhs.add(std::norm(ap_sum(f, k, family.delta(), block)));
  ExpSumRecord r;
  r.kind = "family";
  r.p = f.field().modulus();
  r.k = f.field().reduce_unsigned(k);
  r.lhs_value = lhs.value().real();
  const double log_term = std::log(static_cast<double>(family.progressions().front().length) + 1.0);
  r.bound_form = "C*p*log^2(L+1)";
  r.bound_without_constant = static_cast<double>(r.p) * log_term * log_term;
  r.empirical_constant = r.lhs_value / r.bound_without_constant;
  return r;
}

ExpSumRecord linear_family_sum(const APFamily& family) {
  const auto& field = family.field();
  if (!family.equal_lengths() || family.count() == 0) {
    fail(ErrorCode::InvalidArgument, "family must be non-empty with equal lengths");
  }
  const std::uint64_t p = field.modulus();
  const PhaseTable e(p);
  const Residue delta = family.delta();
  CompensatedSum total;
  for (Residue k = 1; k < p; ++k) {
    const Residue kd = field.mul(k, delta);  // non-zero since k, delta are
    CompensatedSum inner;
    for (const auto& block : family.progressions()) {
      // sum_{t<L} e(k(s + t delta)) = e(ks) (1 - e(k delta L)) / (1 - e(k delta))
      const Complex ratio = (Complex(1.0) - e(field.mul(kd, block.length % p))) / (Complex(1.0) - e(kd));
      inner.add(e(field.mul(k, block.start)) * ratio);
    }
    total.add(std::abs(inner.value()));
  }
  ExpSumRecord r;
  r.kind = "linear";
  r.p = p;
  r.k = 0;
  r.lhs_value = total.value().real();
  const double logp = std::log(static_cast<double>(p));
  r.bound_form = "C*J^(1/2)*p*log^(3/2)(p)";
  r.bound_without_constant = std::sqrt(static_cast<double>(family.count())) * static_cast<double>(p) * std::pow(logp, 1.5);
  r.empirical_constant = r.lhs_value / r.bound_without_constant;
  return r;
}

SolutionCount count_solutions(const TotalMap& f, const APFamily& s, const APFamily& s2, double epsilon) {
  if (!(f.field() == s.field()) || !(f.field() == s2.field())) {
    fail(ErrorCode::InvalidArgument, "sets and map live over different fields");
  }
  const auto target = s2.membership();
  SolutionCount out;
  for (Residue x : s.elements()) {
    if (target[f(x)]) ++out.count;
  }
  const double p = static_cast<double>(f.field().modulus());
  out.size_s = s.total_size();
  out.size_s2 = s2.total_size();
  out.expected = static_cast<double>(out.size_s) * static_cast<double>(out.size_s2) / p;
  out.ratio = out.expected > 0.0 ? static_cast<double>(out.count) / out.expected : 0.0;
  out.epsilon = epsilon;
  out.regime_lhs = static_cast<double>(s.count()) * s.average_length() * s2.average_length();
  out.regime_rhs = std::pow(p, 1.5 + epsilon);
  out.in_regime = out.regime_lhs >= out.regime_rhs;
  return out;
}

ComposedSumReport averaged_square_sum_g(const TotalMap& f, Residue gamma, Residue k, const Interval& interval,
                                        std::span<const Residue> alphas) {
  const auto& field = f.field();
  require_nonzero_k(field, k);
  gamma = field.reduce_unsigned(gamma);
  if (gamma == 0) fail(ErrorCode::InvalidArgument, "gamma must be non-zero mod p");
  if (!f.is_bijection()) fail(ErrorCode::NotABijection, "base map is not a bijection");
  k = field.reduce_unsigned(k);
  const auto g = TotalMap::composed(f, gamma);

  ComposedSumReport out;
  out.record = averaged_square_record(g, k, interval);
  out.record.kind = "avg_g";

  const std::uint64_t p = field.modulus();
  const PhaseTable e(p);
  for (Residue alpha : alphas) {
    alpha = field.reduce_unsigned(alpha);
    CompensatedSum sum;
    std::optional<Residue> first;
    bool constant = true;
    for (Residue a = 0; a < p; ++a) {
      const Residue shifted = field.sub(a, gamma);
      const Residue phase = field.add(field.mul(alpha, f(shifted)), field.mul(k, f(a)));
      sum.add(e(phase));
      if (f.is_pole(a) || f.is_pole(shifted)) continue;
      if (!first) {
        first = phase;
      } else if (phase != *first) {
        constant = false;
      }
    }
    if (constant) {
      fail(ErrorCode::ConstantPhase,
           "twisted phase alpha*f(a-gamma) + k*f(a) is constant for alpha=" + std::to_string(alpha));
    }
    ++out.twists_checked;
    out.max_twisted_ratio = std::max(out.max_twisted_ratio, std::abs(sum.value()) / std::sqrt(static_cast<double>(p)));
  }
  return out;
}

}  // namespace fpchain
