#include "fpchain/cheeger.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "fpchain/error.hpp"
#include "fpchain/rng.hpp"
#include "fpchain/stationary.hpp"
#include "text_util.hpp"

namespace fpchain {

namespace {

// Support of pi with its masses written over one common denominator, so that
// pi(x) = mass[i] / total for the i-th support state.
struct Universe {
  std::vector<std::uint32_t> states;
  std::vector<std::int64_t> index_of;  // -1 off the support
  std::vector<mpz_class> mass;
  mpz_class total;
};

Universe build_universe(const TransitionKernel& kernel, const Distribution& pi) {
  if (pi.size() != kernel.size()) fail(ErrorCode::InvalidArgument, "stationary law length does not match kernel");
  const auto& w = pi.exact_weights();
  Universe u;
  u.index_of.assign(kernel.size(), -1);
  u.total = 1;
  for (std::uint32_t x = 0; x < kernel.size(); ++x) {
    if (sgn(w[x]) < 0) fail(ErrorCode::InvalidArgument, "negative stationary mass");
    if (sgn(w[x]) == 0) continue;
    u.index_of[x] = static_cast<std::int64_t>(u.states.size());
    u.states.push_back(x);
    mpz_lcm(u.total.get_mpz_t(), u.total.get_mpz_t(), w[x].get_den_mpz_t());
  }
  for (auto x : u.states) {
    u.mass.push_back(w[x].get_num() * (u.total / w[x].get_den()));
    for (const auto& t : kernel.row(x)) {
      if (u.index_of[t.target] < 0) {
        fail(ErrorCode::InvalidArgument,
             "support of the stationary law is not closed: " + std::to_string(x) + " -> " + std::to_string(t.target));
      }
    }
  }
  return u;
}

// Flow edges between distinct support states, in universe indices.
struct Edge {
  std::uint32_t other;
  std::uint32_t weight;
};

struct Adjacency {
  std::vector<std::vector<Edge>> out;
  std::vector<std::vector<Edge>> in;
};

Adjacency build_adjacency(const TransitionKernel& kernel, const Universe& u) {
  Adjacency adj;
  adj.out.resize(u.states.size());
  adj.in.resize(u.states.size());
  for (std::uint32_t i = 0; i < u.states.size(); ++i) {
    for (const auto& t : kernel.row(u.states[i])) {
      const auto j = static_cast<std::uint32_t>(u.index_of[t.target]);
      if (j == i || t.weight == 0) continue;
      adj.out[i].push_back({j, t.weight});
      adj.in[j].push_back({i, t.weight});
    }
  }
  return adj;
}

// Sorted-sequence order on subsets encoded as bitmasks over ascending states.
bool mask_lex_less(std::uint64_t a, std::uint64_t b) {
  if (a == b) return false;
  const int d = std::countr_zero(a ^ b);
  const auto above = [d](std::uint64_t m) { return d + 1 < 64 && (m >> (d + 1)) != 0; };
  if ((a >> d) & 1u) return above(b);
  return !above(a);
}

std::int64_t to_i64(const mpz_class& z) { return static_cast<std::int64_t>(z.get_si()); }

struct Best {
  std::uint64_t mask = 0;
  bool found = false;
};

// Gray-code walk over all masks; flow and mass are updated in O(degree) per step.
template <class Int, class Wide, class Convert>
Best enumerate_subsets(const Universe& u, const Adjacency& adj, Convert convert) {
  const std::size_t n = u.states.size();
  std::vector<Int> mass(n);
  std::vector<std::vector<std::pair<std::uint32_t, Int>>> out(n), in(n);
  for (std::size_t i = 0; i < n; ++i) {
    mass[i] = convert(u.mass[i]);
    for (const auto& e : adj.out[i]) out[i].push_back({e.other, mass[i] * Int(e.weight)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [j, c] : out[i]) in[j].push_back({static_cast<std::uint32_t>(i), c});
  }
  const Int total = convert(u.total);
  const std::uint64_t full = n == 64 ? ~0ull : (1ull << n) - 1;

  std::vector<char> member(n, 0);
  Int flow = 0, inside = 0, best_flow = 0, best_min = 1;
  Best best;
  std::uint64_t gray = 0;
  for (std::uint64_t i = 1; i <= full; ++i) {
    const int v = std::countr_zero(i);
    Int delta = 0;
    for (const auto& [j, c] : out[v]) {
      if (!member[j]) delta += c;
    }
    for (const auto& [j, c] : in[v]) {
      if (member[j]) delta -= c;
    }
    if (member[v]) {
      flow -= delta;
      inside -= mass[v];
    } else {
      flow += delta;
      inside += mass[v];
    }
    member[v] ^= 1;
    gray ^= 1ull << v;
    if (gray == full) continue;
    const Int outside = total - inside;
    const Int m = inside < outside ? inside : outside;
    const Wide lhs = Wide(flow) * Wide(best_min);
    const Wide rhs = Wide(best_flow) * Wide(m);
    if (!best.found || lhs < rhs || (lhs == rhs && mask_lex_less(gray, best.mask))) {
      best.found = true;
      best.mask = gray;
      best_flow = flow;
      best_min = m;
    }
  }
  return best;
}

std::vector<bool> membership(std::size_t n, std::span<const std::uint32_t> subset) {
  std::vector<bool> mask(n, false);
  for (auto x : subset) {
    if (x >= n) fail(ErrorCode::InvalidArgument, "subset state " + std::to_string(x) + " out of range");
    if (mask[x]) fail(ErrorCode::InvalidArgument, "subset repeats state " + std::to_string(x));
    mask[x] = true;
  }
  return mask;
}

// Scores candidate subsets of the support in integer arithmetic.
class CandidateScorer {
 public:
  CandidateScorer(const TransitionKernel& kernel, const Universe& u)
      : kernel_(kernel), u_(u), member_(kernel.size(), 0) {}

  // Drops states off the support; ignores trivial candidates.
  void offer(std::vector<std::uint32_t> subset) {
    std::erase_if(subset, [&](std::uint32_t x) { return x >= u_.index_of.size() || u_.index_of[x] < 0; });
    std::sort(subset.begin(), subset.end());
    subset.erase(std::unique(subset.begin(), subset.end()), subset.end());
    ++evaluated_;
    if (subset.empty() || subset.size() == u_.states.size()) return;
    for (auto x : subset) member_[x] = 1;
    mpz_class flow = 0, inside = 0;
    for (auto x : subset) {
      const auto& m = u_.mass[u_.index_of[x]];
      inside += m;
      for (const auto& t : kernel_.row(x)) {
        if (!member_[t.target]) flow += m * t.weight;
      }
    }
    for (auto x : subset) member_[x] = 0;
    const mpz_class outside = u_.total - inside;
    const mpz_class& m = inside < outside ? inside : outside;
    if (!found_) {
      take(std::move(subset), flow, m);
      return;
    }
    const int cmp = ::cmp(flow * best_min_, best_flow_ * m);
    if (cmp < 0 || (cmp == 0 && subset < best_subset_)) take(std::move(subset), flow, m);
  }

  std::uint64_t evaluated() const noexcept { return evaluated_; }
  bool found() const noexcept { return found_; }
  const std::vector<std::uint32_t>& best() const noexcept { return best_subset_; }

 private:
  void take(std::vector<std::uint32_t> subset, const mpz_class& flow, const mpz_class& m) {
    found_ = true;
    best_subset_ = std::move(subset);
    best_flow_ = flow;
    best_min_ = m;
  }

  const TransitionKernel& kernel_;
  const Universe& u_;
  std::vector<char> member_;
  std::uint64_t evaluated_ = 0;
  bool found_ = false;
  std::vector<std::uint32_t> best_subset_;
  mpz_class best_flow_, best_min_;
};

// Lengths ordered outward from n/2, where balanced cuts live.
std::vector<std::uint64_t> centered_lengths(std::uint64_t n) {
  std::vector<std::uint64_t> out;
  if (n < 2) return out;
  const std::uint64_t mid = n / 2;
  out.push_back(mid);
  for (std::uint64_t d = 1; out.size() < n - 1; ++d) {
    if (mid + d <= n - 1) out.push_back(mid + d);
    if (d < mid) out.push_back(mid - d);
  }
  return out;
}

std::vector<std::uint32_t> progression(std::uint64_t p, Residue start, Residue delta, std::uint64_t length) {
  std::vector<std::uint32_t> out;
  out.reserve(length);
  Residue x = start;
  for (std::uint64_t i = 0; i < length; ++i) {
    out.push_back(static_cast<std::uint32_t>(x));
    x = (x + delta) % p;
  }
  return out;
}

}  // namespace

SubsetCertificate boundary_flow(const TransitionKernel& kernel, const Distribution& pi,
                                std::span<const std::uint32_t> subset) {
  if (pi.size() != kernel.size()) fail(ErrorCode::InvalidArgument, "stationary law length does not match kernel");
  const auto& w = pi.exact_weights();
  const auto mask = membership(kernel.size(), subset);
  SubsetCertificate cert;
  cert.subset.assign(subset.begin(), subset.end());
  std::sort(cert.subset.begin(), cert.subset.end());
  mpq_class inside = 0;
  for (auto x : cert.subset) {
    inside += w[x];
    for (const auto& t : kernel.row(x)) {
      if (!mask[t.target]) {
        cert.flow += w[x] * kernel.probability(x, t.target);
        ++cert.edge_count;
      }
    }
  }
  const mpq_class outside = 1 - inside;
  if (sgn(inside) <= 0 || sgn(outside) <= 0) {
    fail(ErrorCode::TrivialSubset, "subset must carry stationary mass strictly between 0 and 1");
  }
  cert.ratio = cert.flow / (inside < outside ? inside : outside);
  return cert;
}

std::uint64_t edge_count(const TransitionKernel& kernel, std::span<const std::uint32_t> subset) {
  const auto mask = membership(kernel.size(), subset);
  std::uint64_t count = 0;
  for (auto x : subset) {
    for (const auto& t : kernel.row(x)) {
      if (t.weight > 0 && !mask[t.target]) ++count;
    }
  }
  return count;
}

SubsetCertificate cheeger_exact(const TransitionKernel& kernel, const Distribution& pi, bool allow_large,
                                std::size_t max_states) {
  const auto u = build_universe(kernel, pi);
  const std::size_t n = u.states.size();
  if (n < 2) fail(ErrorCode::TrivialSubset, "support has fewer than two states");
  if (n > 63 || (n > max_states && !allow_large)) {
    fail(ErrorCode::TooLarge, "exhaustive search over " + std::to_string(n) + " support states refused");
  }
  const auto adj = build_adjacency(kernel, u);
  // Flow is at most total * denominator and cross products at most total^2 * denominator.
  const bool narrow = mpz_sizeinbase(u.total.get_mpz_t(), 2) + 3 <= 60;
  const Best best = narrow ? enumerate_subsets<std::int64_t, __int128>(u, adj, to_i64)
                           : enumerate_subsets<mpz_class, mpz_class>(u, adj, [](const mpz_class& z) { return z; });
  std::vector<std::uint32_t> subset;
  for (std::size_t i = 0; i < n; ++i) {
    if ((best.mask >> i) & 1u) subset.push_back(u.states[i]);
  }
  return boundary_flow(kernel, pi, subset);
}

SearchOptions parse_families(std::string_view list, SearchOptions base) {
  base.intervals = base.ap_unions = base.quadratic_residues = base.random = false;
  for (auto name : detail::split(list, ',')) {
    if (name == "intervals") {
      base.intervals = true;
    } else if (name == "ap_unions") {
      base.ap_unions = true;
    } else if (name == "quadratic_residues") {
      base.quadratic_residues = true;
    } else if (name == "random") {
      base.random = true;
    } else {
      fail(ErrorCode::Parse, "unknown search family '" + std::string(name) + "'");
    }
  }
  return base;
}

SubsetCertificate cheeger_search(const TransitionKernel& kernel, const Distribution& pi,
                                 const SearchOptions& options) {
  const auto u = build_universe(kernel, pi);
  if (u.states.size() < 2) fail(ErrorCode::TrivialSubset, "support has fewer than two states");
  const std::uint64_t p = kernel.size();
  CandidateScorer scorer(kernel, u);
  SplitMix64 rng(options.seed);

  const int families = options.intervals + options.ap_unions + options.quadratic_residues + options.random;
  if (families == 0) fail(ErrorCode::InvalidArgument, "no search family selected");
  int remaining_families = families;
  // Each family gets an equal share of what is left; unused budget rolls over.
  const auto share = [&]() {
    const std::uint64_t left = options.budget > scorer.evaluated() ? options.budget - scorer.evaluated() : 0;
    return scorer.evaluated() + left / static_cast<std::uint64_t>(remaining_families--);
  };

  if (options.intervals) {
    const auto limit = share();
    for (auto len : centered_lengths(p)) {
      for (Residue a = 0; a < p && scorer.evaluated() < limit; ++a) scorer.offer(progression(p, a, 1, len));
    }
  }
  if (options.ap_unions) {
    const auto limit = share();
    const Residue delta = options.two_gamma % p;
    if (delta == 0) fail(ErrorCode::InvalidArgument, "progression difference must be non-zero mod p");
    const auto singles = scorer.evaluated() + (limit - scorer.evaluated()) / 2;
    for (auto len : centered_lengths(p)) {
      for (Residue a = 0; a < p && scorer.evaluated() < singles; ++a) scorer.offer(progression(p, a, delta, len));
    }
    while (scorer.evaluated() < limit) {
      const auto pieces = 2 + rng.below(3);
      std::vector<std::uint32_t> subset;
      for (std::uint64_t k = 0; k < pieces; ++k) {
        const auto part = progression(p, rng.below(p), delta, 1 + rng.below(p / 2));
        subset.insert(subset.end(), part.begin(), part.end());
      }
      scorer.offer(std::move(subset));
    }
  }
  if (options.quadratic_residues) {
    const auto limit = share();
    const PrimeField field(p);
    std::vector<std::uint32_t> residues, non_residues;
    for (Residue x = 1; x < p; ++x) (field.is_square(x) ? residues : non_residues).push_back(static_cast<std::uint32_t>(x));
    std::vector<std::vector<std::uint32_t>> bases{residues, non_residues, residues, non_residues};
    bases[2].push_back(0);
    bases[3].push_back(0);
    for (Residue t = 0; t < p && scorer.evaluated() < limit; ++t) {
      for (const auto& base : bases) {
        if (scorer.evaluated() >= limit) break;
        std::vector<std::uint32_t> shifted;
        shifted.reserve(base.size());
        for (auto x : base) shifted.push_back(static_cast<std::uint32_t>(field.add(x, t)));
        scorer.offer(std::move(shifted));
      }
    }
  }
  if (options.random) {
    const auto limit = share();
    const std::size_t n = u.states.size();
    for (std::uint64_t i = 0; scorer.evaluated() < limit; ++i) {
      std::vector<std::uint32_t> subset;
      if (i % 2 == 0) {
        for (auto x : u.states) {
          if (rng.next() >> 63) subset.push_back(x);
        }
      } else {
        auto pool = u.states;
        const auto size = 1 + rng.below(n - 1);
        for (std::uint64_t k = 0; k < size; ++k) {
          std::swap(pool[k], pool[k + rng.below(n - k)]);
          subset.push_back(pool[k]);
        }
      }
      scorer.offer(std::move(subset));
    }
  }
  if (!scorer.found()) {
    // Budget too small to reach a non-trivial candidate: fall back to one state.
    return boundary_flow(kernel, pi, std::vector<std::uint32_t>{u.states.front()});
  }
  return boundary_flow(kernel, pi, scorer.best());
}

// ---------------------------------------------------------------------------

std::vector<Residue> APDecomposition::block_elements(const PrimeField& field, std::size_t k) const {
  const auto& b = blocks.at(k);
  std::vector<Residue> out;
  Residue x = b.start;
  for (std::uint64_t i = 0; i < b.length; ++i) {
    if (!symmetric) {
      out.push_back(x);
    } else {
      if (support_mask[x]) out.push_back(x);
      const Residue y = field.neg(x);
      if (y != x && support_mask[y]) out.push_back(y);
    }
    x = field.add(x, delta);
  }
  std::sort(out.begin(), out.end());
  return out;
}

APDecomposition ap_decompose(const PrimeField& field, const std::vector<bool>& subset, Residue delta) {
  const std::uint64_t p = field.modulus();
  if (subset.size() != p) fail(ErrorCode::InvalidArgument, "subset mask length must equal p");
  delta = field.reduce_unsigned(delta);
  if (delta == 0) fail(ErrorCode::InvalidArgument, "progression difference must be non-zero mod p");
  APDecomposition dec;
  dec.delta = delta;
  const auto size = static_cast<std::uint64_t>(std::count(subset.begin(), subset.end(), true));
  if (size == 0) return dec;
  if (size == p) {
    dec.blocks.push_back({0, p});
    return dec;
  }
  // Walk the cycle once, starting just after a point outside S.
  Residue x = 0;
  while (subset[x]) x = field.add(x, delta);
  for (std::uint64_t step = 0; step < p; ++step) {
    x = field.add(x, delta);
    if (!subset[x]) continue;
    if (!subset[field.sub(x, delta)]) {
      dec.blocks.push_back({x, 0});
    }
    ++dec.blocks.back().length;
  }
  std::sort(dec.blocks.begin(), dec.blocks.end(), [](const APBlock& a, const APBlock& b) { return a.start < b.start; });
  return dec;
}

APDecomposition ap_decompose(const PrimeField& field, std::span<const std::uint32_t> subset, Residue delta) {
  return ap_decompose(field, membership(field.modulus(), subset), delta);
}

APDecomposition symmetric_ap_decompose(const PrimeField& field, std::span<const std::uint32_t> subset,
                                       Residue delta, const std::vector<bool>& support_mask) {
  const std::uint64_t p = field.modulus();
  if (support_mask.size() != p) fail(ErrorCode::InvalidArgument, "support mask length must equal p");
  delta = field.reduce_unsigned(delta);
  if (delta == 0) fail(ErrorCode::InvalidArgument, "progression difference must be non-zero mod p");
  const auto in_s = membership(p, subset);
  for (auto x : subset) {
    if (!support_mask[x]) fail(ErrorCode::InvalidArgument, "subset leaves the support at " + std::to_string(x));
  }

  enum class Kind : std::uint8_t { Out, In, Free };
  const Residue half = (p - 1) / 2;
  std::vector<Kind> kind(half + 1, Kind::Free);
  for (Residue h = 0; h <= half; ++h) {
    const Residue pair[2] = {h, field.neg(h)};
    bool any_in = false, any_out = false;
    for (auto y : pair) {
      if (!support_mask[y]) continue;
      (in_s[y] ? any_in : any_out) = true;
    }
    if (any_in && any_out) {
      fail(ErrorCode::NotSymmetric, "subset contains " + std::to_string(in_s[h] ? h : field.neg(h)) +
                                        " but not its negative, which is in the support");
    }
    kind[h] = any_in ? Kind::In : any_out ? Kind::Out : Kind::Free;
  }

  APDecomposition dec;
  dec.delta = delta;
  dec.symmetric = true;
  dec.support_mask = support_mask;
  // Segments of consecutive half-range points along the cycle, split at Out
  // points; a segment yields a block when it holds an In point, trimmed to
  // its first and last In points.
  std::optional<Residue> first_in;
  std::uint64_t last_in_offset = 0, first_in_offset = 0, offset = 0;
  const auto close = [&]() {
    if (first_in) dec.blocks.push_back({*first_in, last_in_offset - first_in_offset + 1});
    first_in.reset();
  };
  Residue x = p - 1;  // never in the half range
  for (std::uint64_t step = 0; step < p; ++step) {
    x = field.add(x, delta);
    ++offset;
    if (x > half || kind[x] == Kind::Out) {
      close();
      continue;
    }
    if (kind[x] == Kind::In) {
      if (!first_in) {
        first_in = x;
        first_in_offset = offset;
      }
      last_in_offset = offset;
    }
  }
  close();
  std::sort(dec.blocks.begin(), dec.blocks.end(), [](const APBlock& a, const APBlock& b) { return a.start < b.start; });
  return dec;
}

APFamily equalize_lengths(const PrimeField& field, const APDecomposition& dec, std::optional<std::size_t> target_count) {
  const std::uint64_t count = target_count.value_or(dec.count());
  if (count == 0) fail(ErrorCode::InvalidArgument, "target progression count must be positive");
  std::uint64_t total = 0;
  for (const auto& b : dec.blocks) total += b.length;
  const std::uint64_t piece = total / (4 * count);
  if (piece == 0) fail(ErrorCode::AverageTooSmall, "average block length below 4");
  std::vector<APBlock> pieces;
  for (const auto& b : dec.blocks) {
    if (2 * count * b.length < total) continue;
    for (std::uint64_t t = 0; t + 1 <= b.length / piece; ++t) {
      pieces.push_back({field.add(b.start, field.mul(dec.delta, (t * piece) % field.modulus())), piece});
    }
  }
  return APFamily(field, dec.delta, std::move(pieces));
}

// ---------------------------------------------------------------------------

std::uint64_t cheeger_tv_steps(double h, double max_log_inv_pi, double c) {
  if (!(h > 0.0)) fail(ErrorCode::InvalidArgument, "Cheeger constant must be positive");
  if (!(c >= 0.0)) fail(ErrorCode::InvalidArgument, "c must be non-negative");
  return static_cast<std::uint64_t>(std::ceil(4.0 / (h * h) * (max_log_inv_pi + 2.0 * c)));
}

TransitionKernel lazy_kernel(const TransitionKernel& kernel) {
  std::vector<std::vector<Transition>> rows(kernel.size());
  for (std::uint32_t x = 0; x < kernel.size(); ++x) {
    auto r = kernel.row(x);
    rows[x].assign(r.begin(), r.end());
    rows[x].push_back({x, kernel.denominator()});
  }
  return TransitionKernel(2 * kernel.denominator(), std::move(rows));
}

TvBoundCheck check_cheeger_tv_bound(const TransitionKernel& kernel, const Distribution& pi, double h, double c) {
  if (pi.size() != kernel.size()) fail(ErrorCode::InvalidArgument, "stationary law length does not match kernel");
  if (!is_stationary(kernel, pi)) fail(ErrorCode::InvalidArgument, "distribution is not stationary for the kernel");
  TvBoundCheck check;
  check.h = h;
  check.c = c;
  const auto weights = pi.to_float();
  std::vector<Residue> starts;
  for (auto x : pi.support()) {
    starts.push_back(x);
    check.max_log_inv_pi = std::max(check.max_log_inv_pi, -std::log(weights[x]));
  }
  check.steps = cheeger_tv_steps(h, check.max_log_inv_pi, c);
  check.threshold = std::exp(-c);
  check.max_tv = tv_trajectory(lazy_kernel(kernel), pi, starts, check.steps).back();
  check.passed = check.max_tv <= check.threshold;
  return check;
}

double mass_spread(const Distribution& pi) {
  const auto w = pi.to_float();
  double lo = 0.0, hi = 0.0;
  for (double v : w) {
    if (v <= 0.0) continue;
    lo = lo == 0.0 ? v : std::min(lo, v);
    hi = std::max(hi, v);
  }
  return lo > 0.0 ? hi / lo : 0.0;
}

}  // namespace fpchain
