#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fpchain/chain.hpp"

namespace fpchain {

/// Strongly connected components of the positive-probability digraph. A class
/// is recurrent when no edge leaves it; every other state is transient.
struct RecurrentStructure {
  std::vector<std::vector<std::uint32_t>> classes;  // each sorted ascending
  std::vector<bool> recurrent;                      // parallel to classes
  std::vector<std::uint32_t> class_of;              // per state

  std::vector<std::size_t> recurrent_class_ids() const;
  std::size_t recurrent_count() const;
  bool is_transient(std::size_t state) const { return !recurrent[class_of[state]]; }
};

RecurrentStructure recurrent_classes(const TransitionKernel& kernel);

/// Exact stationary law supported on the unique recurrent class. Solved by
/// multi-modular elimination with rational reconstruction; the result is only
/// returned once pi P = pi has been verified in exact arithmetic.
/// Throws NonUniqueRecurrentClass, or BudgetExceeded if reconstruction does
/// not stabilize within the modulus budget.
Distribution stationary_exact(const TransitionKernel& kernel);

/// Power iteration on the lazy kernel (I + P) / 2 until the L1 change drops
/// below tolerance.
Distribution stationary_float(const TransitionKernel& kernel, double tolerance = 1e-13,
                              std::uint64_t max_iterations = 1'000'000);

/// Exact solve up to exact_limit states, float power iteration above.
Distribution stationary(const TransitionKernel& kernel, std::size_t exact_limit = 2000);

/// pi P == pi, exactly for exact input and to max-entry 1e-9 for float input.
bool is_stationary(const TransitionKernel& kernel, const Distribution& pi);

/// #{beta : beta^2 + gamma = alpha} + #{beta : beta^2 - gamma = alpha}, per alpha.
std::vector<std::uint64_t> square_preimage_counts(const PrimeField& field, Residue gamma);

/// counts / 2p. Refuses p = 1 (mod 4) with WrongResidueClass.
Distribution square_stationary_formula(const PrimeField& field, Residue gamma);

/// Closed forms when available (uniform for bijective maps, the preimage-count
/// law for the square map at p = 3 mod 4), each verified exactly; otherwise the
/// exact or float solve.
Distribution known_stationary(const ChainSpec& spec, const TransitionKernel& kernel,
                              std::size_t exact_limit = 2000);

/// gcd of cycle lengths through the class (BFS level differences).
std::uint64_t period(const TransitionKernel& kernel, std::span<const std::uint32_t> recurrent_class);

struct StartPolicy {
  enum class Kind { Default, All, Sampled, Explicit };
  Kind kind = Kind::Default;
  std::vector<Residue> states;  // Explicit only
  std::uint64_t seed = 0;
  std::uint64_t random_starts = 16;
  std::size_t all_limit = 2000;  // Default switches from All to Sampled above this
};

/// All states, or {0, 1, gamma^-1, p-1} plus seeded random starts.
std::vector<Residue> resolve_starts(const StartPolicy& policy, std::uint64_t p, Residue gamma);

struct MixingReport {
  double epsilon = 0.0;
  std::uint64_t t_mix = 0;
  std::vector<Residue> start_states;
  std::vector<double> tv_trajectory;  // max-over-starts TV at n = 0..t_mix
};

/// Max-over-starts TV to target after n = 0..steps steps (float evolution).
std::vector<double> tv_trajectory(const TransitionKernel& kernel, const Distribution& target,
                                  std::span<const Residue> starts, std::uint64_t steps);

/// Smallest n with max-over-starts TV <= epsilon. BudgetExceeded beyond cap.
MixingReport mixing_time(const TransitionKernel& kernel, const Distribution& target, double epsilon,
                         std::span<const Residue> starts, std::uint64_t cap = 1'000'000);
MixingReport mixing_time(const ChainSpec& spec, const Distribution& target, double epsilon,
                         const StartPolicy& starts, std::uint64_t cap = 1'000'000);

struct SupportFraction {
  std::uint64_t p = 0;
  Residue gamma = 0;
  std::uint64_t support_size = 0;    // states in recurrent classes
  std::size_t recurrent_classes = 0;  // > 1 means the law is not unique
  double fraction = 0.0;
  RecurrentStructure structure;
};

/// |supp pi| / p for the square-and-add chain x -> x^2 +/- gamma. The support of
/// the stationary law is exactly the recurrent class, so no solve is needed.
SupportFraction support_fraction(const PrimeField& field, Residue gamma);

struct ConjectureReport {
  double alpha = 0.0;     // smallest positive root of x^4 + 2x^2 - 4x + 1
  double limit = 0.0;     // 1 - (1 + alpha)^2 / 4
  double residual = 0.0;  // |quartic(alpha)|
  std::vector<std::pair<std::uint64_t, double>> fractions;
};

ConjectureReport conjectured_limit();

}  // namespace fpchain
