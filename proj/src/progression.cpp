#include "fpchain/progression.hpp"

#include "fpchain/error.hpp"
#include "text_util.hpp"

#include <optional>

namespace fpchain {

APFamily::APFamily(const PrimeField& field, Residue delta, std::vector<APBlock> progressions)
    : field_(field), delta_(field.reduce_unsigned(delta)), blocks_(std::move(progressions)) {
  if (delta_ == 0) fail(ErrorCode::InvalidArgument, "progression difference must be non-zero");
  const auto p = field_.modulus();
  std::vector<bool> seen(p, false);
  for (auto& b : blocks_) {
    b.start = field_.reduce_unsigned(b.start);
    if (b.length == 0 || b.length > p) fail(ErrorCode::InvalidArgument, "progression length must lie in [1, p]");
    for (std::uint64_t i = 0; i < b.length; ++i) {
      const Residue x = element(b, i);
      if (seen[x]) fail(ErrorCode::InvalidArgument, "progressions overlap at " + std::to_string(x));
      seen[x] = true;
    }
    total_ += b.length;
  }
}

bool APFamily::equal_lengths() const noexcept {
  for (const auto& b : blocks_) {
    if (b.length != blocks_.front().length) return false;
  }
  return true;
}

double APFamily::average_length() const noexcept {
  return blocks_.empty() ? 0.0 : static_cast<double>(total_) / static_cast<double>(blocks_.size());
}

std::vector<bool> APFamily::membership() const {
  std::vector<bool> mask(field_.modulus(), false);
  for (const auto& b : blocks_) {
    for (std::uint64_t i = 0; i < b.length; ++i) mask[element(b, i)] = true;
  }
  return mask;
}

std::vector<Residue> APFamily::elements() const {
  std::vector<Residue> out;
  out.reserve(total_);
  for (const auto& b : blocks_) {
    for (std::uint64_t i = 0; i < b.length; ++i) out.push_back(element(b, i));
  }
  return out;
}

APFamily parse_family(std::string_view text, const PrimeField& field) {
  std::optional<std::int64_t> delta;
  std::vector<APBlock> blocks;
  for (auto token : detail::split(text, ';')) {
    if (token.empty()) continue;
    const auto [key, value] = detail::split_key_value(token);
    if (key == "delta") {
      delta = detail::parse_int(value, "delta");
    } else if (key == "aps") {
      for (auto item : detail::split(value, ',')) {
        const auto sep = item.find(':');
        if (sep == std::string_view::npos) fail(ErrorCode::Parse, "progression expects start:len");
        blocks.push_back({field.reduce(detail::parse_int(item.substr(0, sep), "start")),
                          detail::parse_uint(item.substr(sep + 1), "length")});
      }
    } else {
      fail(ErrorCode::Parse, "unknown family key '" + std::string(key) + "'");
    }
  }
  if (!delta) fail(ErrorCode::Parse, "family spec missing delta=");
  return APFamily(field, field.reduce(*delta), std::move(blocks));
}

}  // namespace fpchain
