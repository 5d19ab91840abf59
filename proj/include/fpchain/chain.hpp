#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpchain/field.hpp"

namespace fpchain {

enum class ChainVariant {
  LazyHold,      // stay w.p. 1/2, else f(x) +/- gamma
  NoiseZero,     // f(x) + e, e uniform on {-gamma, 0, gamma}
  PureAdditive,  // x +/- gamma, f unused
  NonLazy,       // f(x) +/- gamma
};

std::string_view to_string(ChainVariant variant) noexcept;
ChainVariant parse_variant(std::string_view name);

class ChainSpec {
 public:
  ChainSpec(TotalMap map, Residue gamma, ChainVariant variant, std::string map_text = {});

  const PrimeField& field() const noexcept { return map_.field(); }
  std::uint64_t modulus() const noexcept { return map_.field().modulus(); }
  const TotalMap& map() const noexcept { return map_; }
  Residue gamma() const noexcept { return gamma_; }
  ChainVariant variant() const noexcept { return variant_; }
  const std::string& map_text() const noexcept { return map_text_; }

  /// chain:<variant>;map=<map>;gamma=<g>;p=<p>
  std::string descriptor() const;

 private:
  TotalMap map_;
  Residue gamma_;
  ChainVariant variant_;
  std::string map_text_;
};

/// Parses `chain:<variant>;map=<map-descriptor>;gamma=<g>;p=<p>`. The map is
/// optional for the additive variant. Map descriptors may themselves contain
/// ';' separated keys; only `gamma=` and `p=` tokens belong to the chain.
ChainSpec parse_chain(std::string_view text);

struct Transition {
  std::uint32_t target;
  std::uint32_t weight;  // probability = weight / denominator
};

/// Sparse kernel with exact probabilities over a common denominator.
class TransitionKernel {
 public:
  TransitionKernel(std::uint32_t denominator, std::vector<std::vector<Transition>> rows);

  std::size_t size() const noexcept { return offsets_.size() - 1; }
  std::uint32_t denominator() const noexcept { return denominator_; }
  std::span<const Transition> row(std::size_t x) const noexcept {
    return {transitions_.data() + offsets_[x], transitions_.data() + offsets_[x + 1]};
  }
  std::uint32_t weight(std::size_t x, std::size_t y) const noexcept;
  mpq_class probability(std::size_t x, std::size_t y) const;

 private:
  std::uint32_t denominator_;
  std::vector<std::size_t> offsets_;
  std::vector<Transition> transitions_;
};

/// Merged outgoing transitions of one state under the chain's step rule.
std::vector<Transition> transitions_from(const ChainSpec& spec, Residue x);
std::uint32_t step_denominator(ChainVariant variant) noexcept;

TransitionKernel build_kernel(const ChainSpec& spec);

/// Probability vector over the state space, exact (GMP rationals) or double.
class Distribution {
 public:
  enum class Mode { Exact, Float };

  static Distribution point_mass(std::size_t n, std::size_t x, Mode mode);
  static Distribution uniform(std::size_t n, Mode mode);
  static Distribution exact(std::vector<mpq_class> weights);
  static Distribution floating(std::vector<double> weights);

  Mode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return mode_ == Mode::Exact ? exact_.size() : float_.size(); }
  double at(std::size_t i) const;

  /// Throws ModeMismatch on a float distribution.
  const std::vector<mpq_class>& exact_weights() const;
  const std::vector<double>& float_weights() const;
  std::vector<double> to_float() const;
  Distribution as_float() const { return floating(to_float()); }

  /// Indices with positive weight, ascending.
  std::vector<std::uint32_t> support() const;

 private:
  Distribution(Mode mode, std::vector<mpq_class> exact, std::vector<double> floats);

  Mode mode_;
  std::vector<mpq_class> exact_;
  std::vector<double> float_;
};

/// dist * P. Float mode renormalizes and asserts the per-step drift stays below
/// p * 2^-50. With require_exact set, a float input raises ModeMismatch.
Distribution step_distribution(const TransitionKernel& kernel, const Distribution& dist,
                               bool require_exact = false);

double tv_distance(const Distribution& a, const Distribution& b);
mpq_class tv_distance_exact(const Distribution& a, const Distribution& b);

/// Seeded trajectory of length steps + 1 starting at x0.
std::vector<Residue> sample_path(const ChainSpec& spec, Residue x0, std::uint64_t steps,
                                 std::uint64_t seed);

}  // namespace fpchain
