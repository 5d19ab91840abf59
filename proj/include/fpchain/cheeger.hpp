#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fpchain/chain.hpp"
#include "fpchain/progression.hpp"

namespace fpchain {

struct SubsetCertificate {
  std::vector<std::uint32_t> subset;  // sorted ascending
  mpq_class flow;                     // sum_{x in S, y not in S} pi(x) P(x, y)
  mpq_class ratio;                    // flow / min(pi(S), pi(S^c))
  std::uint64_t edge_count = 0;       // positive-probability edges from S to S^c
};

/// Exact flow and ratio of one subset. The stationary law must be exact and
/// 0 < pi(S) < 1, otherwise TrivialSubset.
SubsetCertificate boundary_flow(const TransitionKernel& kernel, const Distribution& pi,
                                std::span<const std::uint32_t> subset);

/// Number of positive-probability transitions x -> y with x in S, y outside S.
std::uint64_t edge_count(const TransitionKernel& kernel, std::span<const std::uint32_t> subset);

/// Exhaustive minimum of the ratio over non-trivial subsets of supp pi. The
/// support must be closed under the kernel. Ties resolve to the
/// lexicographically smallest sorted subset. TooLarge above max_states unless
/// allow_large is set.
SubsetCertificate cheeger_exact(const TransitionKernel& kernel, const Distribution& pi,
                                bool allow_large = false, std::size_t max_states = 22);

struct SearchOptions {
  bool intervals = true;
  bool ap_unions = true;
  bool quadratic_residues = true;
  bool random = true;
  std::uint64_t budget = 100'000;  // candidate subsets evaluated, across all families
  std::uint64_t seed = 0;
  Residue two_gamma = 2;           // difference used by the AP-union family
};

/// Parses a comma separated subset of {intervals, ap_unions, quadratic_residues, random}.
SearchOptions parse_families(std::string_view list, SearchOptions base = {});

/// Best certificate over structured candidate families; always an upper bound
/// on the exact constant. Deterministic for fixed options.
SubsetCertificate cheeger_search(const TransitionKernel& kernel, const Distribution& pi,
                                 const SearchOptions& options);

/// Minimal decomposition into progressions of difference delta. For the
/// symmetric form the blocks are the half-range progressions J_k and the
/// decomposed pieces are supp pi intersected with J_k and -J_k.
struct APDecomposition {
  Residue delta = 0;
  std::vector<APBlock> blocks;
  bool symmetric = false;
  std::vector<bool> support_mask;  // symmetric only

  std::size_t count() const noexcept { return blocks.size(); }
  /// Elements of block k, intersected with the support in symmetric mode.
  std::vector<Residue> block_elements(const PrimeField& field, std::size_t k) const;
};

/// Blocks are the maximal runs of S along the cycle 0, delta, 2 delta, ...,
/// sorted by start. S = F_p gives one block of length p starting at 0.
APDecomposition ap_decompose(const PrimeField& field, const std::vector<bool>& subset, Residue delta);
APDecomposition ap_decompose(const PrimeField& field, std::span<const std::uint32_t> subset, Residue delta);

/// S must be a subset of the support that is a union of pairs {x, -x}
/// intersected with the support, otherwise NotSymmetric. Half-range points
/// whose pair misses the support are free and trimmed from block ends.
APDecomposition symmetric_ap_decompose(const PrimeField& field, std::span<const std::uint32_t> subset,
                                       Residue delta, const std::vector<bool>& support_mask);

/// Sub-progressions of length floor(|S| / 4J) cut from the blocks of length at
/// least |S| / 2J. There are at least J of them. J defaults to the block count.
APFamily equalize_lengths(const PrimeField& field, const APDecomposition& dec,
                          std::optional<std::size_t> target_count = std::nullopt);

/// ceil(4 h^-2 (max_log_inv_pi + 2c)); h > 0, c >= 0.
std::uint64_t cheeger_tv_steps(double h, double max_log_inv_pi, double c);

struct TvBoundCheck {
  double h = 0.0;
  double max_log_inv_pi = 0.0;
  double c = 0.0;
  std::uint64_t steps = 0;
  double max_tv = 0.0;     // worst start over supp pi after `steps` lazy steps
  double threshold = 0.0;  // e^-c
  bool passed = false;
};

/// (I + P) / 2 over the same state space.
TransitionKernel lazy_kernel(const TransitionKernel& kernel);

/// Runs the lazy chain from every support state for cheeger_tv_steps steps.
TvBoundCheck check_cheeger_tv_bound(const TransitionKernel& kernel, const Distribution& pi, double h,
                                    double c);

/// max pi / min pi over the support.
double mass_spread(const Distribution& pi);

}  // namespace fpchain
