#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "fpchain/field.hpp"

namespace fpchain {

/// {start, start + delta, ..., start + (length - 1) * delta} in F_p.
struct APBlock {
  Residue start = 0;
  std::uint64_t length = 0;

  bool operator==(const APBlock&) const = default;
};

/// Pairwise disjoint arithmetic progressions sharing one non-zero difference.
class APFamily {
 public:
  APFamily(const PrimeField& field, Residue delta, std::vector<APBlock> progressions);

  const PrimeField& field() const noexcept { return field_; }
  Residue delta() const noexcept { return delta_; }
  const std::vector<APBlock>& progressions() const noexcept { return blocks_; }
  std::size_t count() const noexcept { return blocks_.size(); }
  std::uint64_t total_size() const noexcept { return total_; }
  bool equal_lengths() const noexcept;
  /// Average length |S| / J (0 for an empty family).
  double average_length() const noexcept;

  Residue element(const APBlock& block, std::uint64_t i) const noexcept {
    return field_.add(block.start, field_.mul(delta_, i % field_.modulus()));
  }
  std::vector<bool> membership() const;
  std::vector<Residue> elements() const;

 private:
  PrimeField field_;
  Residue delta_;
  std::vector<APBlock> blocks_;
  std::uint64_t total_ = 0;
};

/// `delta=<d>;aps=<start:len,...>`
APFamily parse_family(std::string_view text, const PrimeField& field);

}  // namespace fpchain
