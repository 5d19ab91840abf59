#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fpchain/field.hpp"
#include "fpchain/progression.hpp"

namespace fpchain {

using Complex = std::complex<double>;

/// e_p(r) = exp(2 pi i r / p), tabulated for r in [0, p).
class PhaseTable {
 public:
  explicit PhaseTable(std::uint64_t p);
  Complex operator()(Residue r) const noexcept { return table_[r]; }
  std::uint64_t modulus() const noexcept { return table_.size(); }

 private:
  std::vector<Complex> table_;
};

/// Neumaier-compensated complex accumulator.
class CompensatedSum {
 public:
  void add(Complex v) noexcept {
    add_part(re_, re_c_, v.real());
    add_part(im_, im_c_, v.imag());
  }
  Complex value() const noexcept { return {re_ + re_c_, im_ + im_c_}; }

 private:
  static void add_part(double& sum, double& comp, double v) noexcept {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double re_ = 0.0, re_c_ = 0.0, im_ = 0.0, im_c_ = 0.0;
};

struct ExpSumRecord {
  std::string kind;
  std::uint64_t p = 0;
  Residue k = 0;
  double lhs_value = 0.0;
  std::string bound_form;             // bound with its implied constant dropped
  double bound_without_constant = 0.0;
  double empirical_constant = 0.0;    // lhs_value / bound_without_constant
};

/// Integer interval {start, ..., start + length - 1} mod p.
struct Interval {
  Residue start = 0;
  std::uint64_t length = 0;
};

/// Sum over non-pole x of e_p(alpha x + k f(x)). ConstantPhase if the phase
/// is constant there.
Complex ep_sum_full(const TotalMap& f, Residue alpha, Residue k);
ExpSumRecord weil_record(const TotalMap& f, Residue alpha, Residue k);

Complex ap_sum(const TotalMap& f, Residue k, Residue delta, const APBlock& block);

/// sum_{n=1..p} |sum_{x in I} e_p(k f(x + n))|^2, k != 0.
double averaged_square_sum(const TotalMap& f, Residue k, const Interval& interval);
ExpSumRecord averaged_square_record(const TotalMap& f, Residue k, const Interval& interval);

/// The same quantity kept exact: counts[r] is the number of (x, y, n) with
/// k (f(x+n) - f(y+n)) = r. The sum equals sum_r counts[r] e_p(r), which is
/// an integer exactly when all counts[r], r != 0, agree.
struct ExactAveragedSum {
  std::vector<std::uint64_t> residue_counts;
  bool is_integer = false;
  std::int64_t value = 0;  // valid when is_integer
};
ExactAveragedSum averaged_square_sum_exact(const TotalMap& f, Residue k, const Interval& interval);

/// sum_j |sum_{x in I_j} e_p(k f(x))|^2 over an equal-length family.
ExpSumRecord family_square_sum(const TotalMap& f, Residue k, const APFamily& family);

/// sum_{k=1..p-1} |sum_j sum_{x in I_j} e_p(k x)| by the geometric closed form.
ExpSumRecord linear_family_sum(const APFamily& family);

struct SolutionCount {
  std::uint64_t count = 0;
  std::uint64_t size_s = 0;
  std::uint64_t size_s2 = 0;
  double expected = 0.0;  // |S| |S'| / p
  double ratio = 0.0;     // count / expected
  double epsilon = 0.1;
  double regime_lhs = 0.0;  // J L L'
  double regime_rhs = 0.0;  // p^{3/2 + epsilon}
  bool in_regime = false;
};

/// #{x in S : f(x) in S'}.
SolutionCount count_solutions(const TotalMap& f, const APFamily& s, const APFamily& s2, double epsilon = 0.1);

struct ComposedSumReport {
  ExpSumRecord record;            // averaged square sum for g(x) = f(f^-1(x) + gamma)
  std::size_t twists_checked = 0;
  double max_twisted_ratio = 0.0; // max |sum_a e_p(alpha f(a - gamma) + k f(a))| / sqrt(p)
};

/// Requires a bijective f. Every alpha in `alphas` is checked for a non-constant
/// twisted phase; a constant one raises ConstantPhase.
ComposedSumReport averaged_square_sum_g(const TotalMap& f, Residue gamma, Residue k, const Interval& interval,
                                        std::span<const Residue> alphas);

}  // namespace fpchain
