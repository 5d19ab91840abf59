#include "fpchain/chain.hpp"

#include <algorithm>
#include <cmath>

#include "fpchain/error.hpp"
#include "fpchain/rng.hpp"
#include "text_util.hpp"

namespace fpchain {

std::string_view to_string(ChainVariant variant) noexcept {
  switch (variant) {
    case ChainVariant::LazyHold: return "lazy";
    case ChainVariant::NoiseZero: return "noisezero";
    case ChainVariant::PureAdditive: return "additive";
    case ChainVariant::NonLazy: return "nonlazy";
  }
  return "unknown";
}

ChainVariant parse_variant(std::string_view name) {
  name = detail::trim(name);
  if (name == "lazy") return ChainVariant::LazyHold;
  if (name == "noisezero") return ChainVariant::NoiseZero;
  if (name == "additive") return ChainVariant::PureAdditive;
  if (name == "nonlazy") return ChainVariant::NonLazy;
  fail(ErrorCode::Parse, "unknown chain variant '" + std::string(name) + "'");
}

ChainSpec::ChainSpec(TotalMap map, Residue gamma, ChainVariant variant, std::string map_text)
    : map_(std::move(map)), gamma_(gamma), variant_(variant), map_text_(std::move(map_text)) {
  gamma_ = map_.field().reduce_unsigned(gamma_);
  if (gamma_ == 0) fail(ErrorCode::InvalidArgument, "gamma must be non-zero mod p");
}

std::string ChainSpec::descriptor() const {
  std::string out = "chain:" + std::string(to_string(variant_));
  if (!map_text_.empty()) out += ";map=" + map_text_;
  out += ";gamma=" + std::to_string(gamma_) + ";p=" + std::to_string(modulus());
  return out;
}

ChainSpec parse_chain(std::string_view text) {
  text = detail::trim(text);
  constexpr std::string_view prefix = "chain:";
  if (text.substr(0, prefix.size()) != prefix) fail(ErrorCode::Parse, "chain descriptor must start with 'chain:'");
  const auto tokens = detail::split(text.substr(prefix.size()), ';');
  if (tokens.empty()) fail(ErrorCode::Parse, "chain descriptor missing variant");

  const ChainVariant variant = parse_variant(tokens[0]);
  std::string map_text;
  std::optional<std::int64_t> gamma;
  std::optional<std::uint64_t> p;
  bool in_map = false;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto token = tokens[i];
    if (token.starts_with("gamma=")) {
      gamma = detail::parse_int(token.substr(6), "gamma");
      in_map = false;
    } else if (token.starts_with("p=")) {
      p = detail::parse_uint(token.substr(2), "p");
      in_map = false;
    } else if (token.starts_with("map=")) {
      map_text = std::string(token.substr(4));
      in_map = true;
    } else if (in_map) {
      map_text += ";" + std::string(token);
    } else {
      fail(ErrorCode::Parse, "unexpected chain token '" + std::string(token) + "'");
    }
  }
  if (!gamma) fail(ErrorCode::Parse, "chain descriptor missing gamma=");
  if (!p) fail(ErrorCode::Parse, "chain descriptor missing p=");
  const PrimeField field(*p);
  if (map_text.empty()) {
    if (variant != ChainVariant::PureAdditive) fail(ErrorCode::Parse, "chain descriptor missing map=");
    return ChainSpec(TotalMap::linear(field, 1), field.reduce(*gamma), variant);
  }
  return ChainSpec(build_total_map(map_text, field), field.reduce(*gamma), variant, map_text);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<Transition> merge_row(std::vector<Transition> row) {
  std::sort(row.begin(), row.end(),
            [](const Transition& a, const Transition& b) { return a.target < b.target; });
  std::vector<Transition> merged;
  for (const auto& t : row) {
    if (t.weight == 0) continue;
    if (!merged.empty() && merged.back().target == t.target) {
      merged.back().weight += t.weight;
    } else {
      merged.push_back(t);
    }
  }
  return merged;
}

}  // namespace

TransitionKernel::TransitionKernel(std::uint32_t denominator, std::vector<std::vector<Transition>> rows)
    : denominator_(denominator) {
  if (denominator == 0) fail(ErrorCode::InvalidArgument, "kernel denominator must be positive");
  offsets_.reserve(rows.size() + 1);
  offsets_.push_back(0);
  for (std::size_t x = 0; x < rows.size(); ++x) {
    auto merged = merge_row(std::move(rows[x]));
    std::uint64_t sum = 0;
    for (const auto& t : merged) {
      if (t.target >= rows.size()) fail(ErrorCode::InvalidArgument, "kernel target out of range");
      sum += t.weight;
    }
    if (sum != denominator) {
      fail(ErrorCode::InvalidArgument, "kernel row " + std::to_string(x) + " does not sum to 1");
    }
    transitions_.insert(transitions_.end(), merged.begin(), merged.end());
    offsets_.push_back(transitions_.size());
  }
}

std::uint32_t TransitionKernel::weight(std::size_t x, std::size_t y) const noexcept {
  for (const auto& t : row(x)) {
    if (t.target == y) return t.weight;
  }
  return 0;
}

mpq_class TransitionKernel::probability(std::size_t x, std::size_t y) const {
  mpq_class q(weight(x, y), denominator_);
  q.canonicalize();
  return q;
}

std::uint32_t step_denominator(ChainVariant variant) noexcept {
  switch (variant) {
    case ChainVariant::LazyHold: return 4;
    case ChainVariant::NoiseZero: return 3;
    case ChainVariant::PureAdditive:
    case ChainVariant::NonLazy: return 2;
  }
  return 1;
}

std::vector<Transition> transitions_from(const ChainSpec& spec, Residue x) {
  const auto& f = spec.field();
  const Residue g = spec.gamma();
  const auto s = [](Residue v) { return static_cast<std::uint32_t>(v); };
  const Residue fx = spec.map()(x);
  switch (spec.variant()) {
    case ChainVariant::LazyHold:
      return merge_row({{s(x), 2}, {s(f.add(fx, g)), 1}, {s(f.sub(fx, g)), 1}});
    case ChainVariant::NoiseZero:
      return merge_row({{s(f.sub(fx, g)), 1}, {s(fx), 1}, {s(f.add(fx, g)), 1}});
    case ChainVariant::PureAdditive:
      return merge_row({{s(f.add(x, g)), 1}, {s(f.sub(x, g)), 1}});
    case ChainVariant::NonLazy:
      return merge_row({{s(f.add(fx, g)), 1}, {s(f.sub(fx, g)), 1}});
  }
  return {};
}

TransitionKernel build_kernel(const ChainSpec& spec) {
  const auto p = spec.modulus();
  std::vector<std::vector<Transition>> rows(p);
  for (Residue x = 0; x < p; ++x) rows[x] = transitions_from(spec, x);
  return TransitionKernel(step_denominator(spec.variant()), std::move(rows));
}

// ---------------------------------------------------------------------------

Distribution::Distribution(Mode mode, std::vector<mpq_class> exact, std::vector<double> floats)
    : mode_(mode), exact_(std::move(exact)), float_(std::move(floats)) {}

Distribution Distribution::point_mass(std::size_t n, std::size_t x, Mode mode) {
  if (x >= n) fail(ErrorCode::InvalidArgument, "point mass outside the state space");
  if (mode == Mode::Exact) {
    std::vector<mpq_class> w(n);
    w[x] = 1;
    return exact(std::move(w));
  }
  std::vector<double> w(n, 0.0);
  w[x] = 1.0;
  return floating(std::move(w));
}

Distribution Distribution::uniform(std::size_t n, Mode mode) {
  if (mode == Mode::Exact) {
    mpq_class u(1, n);
    u.canonicalize();
    return exact(std::vector<mpq_class>(n, u));
  }
  return floating(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Distribution Distribution::exact(std::vector<mpq_class> weights) {
  mpq_class total = 0;
  for (const auto& w : weights) {
    if (w < 0) fail(ErrorCode::InvalidArgument, "negative probability");
    total += w;
  }
  if (total != 1) fail(ErrorCode::InvalidArgument, "exact distribution does not sum to 1");
  return Distribution(Mode::Exact, std::move(weights), {});
}

Distribution Distribution::floating(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(ErrorCode::InvalidArgument, "negative probability");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) fail(ErrorCode::InvalidArgument, "float distribution does not sum to 1");
  return Distribution(Mode::Float, {}, std::move(weights));
}

double Distribution::at(std::size_t i) const {
  return mode_ == Mode::Exact ? exact_[i].get_d() : float_[i];
}

const std::vector<mpq_class>& Distribution::exact_weights() const {
  if (mode_ != Mode::Exact) fail(ErrorCode::ModeMismatch, "distribution is not exact");
  return exact_;
}

const std::vector<double>& Distribution::float_weights() const {
  if (mode_ != Mode::Float) fail(ErrorCode::ModeMismatch, "distribution is not float");
  return float_;
}

std::vector<double> Distribution::to_float() const {
  if (mode_ == Mode::Float) return float_;
  std::vector<double> out(exact_.size());
  for (std::size_t i = 0; i < exact_.size(); ++i) out[i] = exact_[i].get_d();
  return out;
}

std::vector<std::uint32_t> Distribution::support() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    const bool positive = mode_ == Mode::Exact ? sgn(exact_[i]) > 0 : float_[i] > 0.0;
    if (positive) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

Distribution step_distribution(const TransitionKernel& kernel, const Distribution& dist, bool require_exact) {
  const std::size_t n = kernel.size();
  if (dist.size() != n) fail(ErrorCode::InvalidArgument, "distribution length does not match kernel");
  if (dist.mode() == Distribution::Mode::Exact) {
    const auto& in = dist.exact_weights();
    std::vector<mpq_class> out(n);
    for (std::size_t x = 0; x < n; ++x) {
      if (sgn(in[x]) == 0) continue;
      for (const auto& t : kernel.row(x)) out[t.target] += in[x] * t.weight;
    }
    for (auto& v : out) v /= kernel.denominator();
    return Distribution::exact(std::move(out));
  }
  if (require_exact) fail(ErrorCode::ModeMismatch, "exact evolution requested for a float distribution");
  const auto& in = dist.float_weights();
  const double scale = 1.0 / kernel.denominator();
  std::vector<double> out(n, 0.0);
  double in_sum = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    const double mass = in[x];
    in_sum += mass;
    if (mass == 0.0) continue;
    for (const auto& t : kernel.row(x)) out[t.target] += mass * (t.weight * scale);
  }
  double out_sum = 0.0;
  for (double v : out) out_sum += v;
  if (std::abs(out_sum - in_sum) > static_cast<double>(n) * 0x1.0p-50) {
    fail(ErrorCode::InvalidArgument, "float evolution drift exceeded p * 2^-50");
  }
  for (auto& v : out) v /= out_sum;
  return Distribution::floating(std::move(out));
}

double tv_distance(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "distributions differ in length");
  if (a.mode() == Distribution::Mode::Exact && b.mode() == Distribution::Mode::Exact) {
    return tv_distance_exact(a, b).get_d();
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a.at(i) - b.at(i));
  return std::min(1.0, 0.5 * total);
}

mpq_class tv_distance_exact(const Distribution& a, const Distribution& b) {
  const auto& x = a.exact_weights();
  const auto& y = b.exact_weights();
  if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "distributions differ in length");
  mpq_class total = 0;
  for (std::size_t i = 0; i < x.size(); ++i) total += abs(x[i] - y[i]);
  return total / 2;
}

std::vector<Residue> sample_path(const ChainSpec& spec, Residue x0, std::uint64_t steps, std::uint64_t seed) {
  if (x0 >= spec.modulus()) fail(ErrorCode::InvalidArgument, "start state outside F_p");
  SplitMix64 rng(seed);
  const std::uint32_t den = step_denominator(spec.variant());
  std::vector<Residue> path;
  path.reserve(steps + 1);
  path.push_back(x0);
  Residue x = x0;
  for (std::uint64_t i = 0; i < steps; ++i) {
    const auto row = transitions_from(spec, x);
    std::uint64_t u = rng.below(den);
    for (const auto& t : row) {
      if (u < t.weight) {
        x = t.target;
        break;
      }
      u -= t.weight;
    }
    path.push_back(x);
  }
  return path;
}

}  // namespace fpchain
