#include "fpchain/stationary.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>

#include "fpchain/error.hpp"
#include "fpchain/rng.hpp"

namespace fpchain {

std::vector<std::size_t> RecurrentStructure::recurrent_class_ids() const {
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    if (recurrent[c]) out.push_back(c);
  }
  return out;
}

std::size_t RecurrentStructure::recurrent_count() const {
  return static_cast<std::size_t>(std::count(recurrent.begin(), recurrent.end(), true));
}

RecurrentStructure recurrent_classes(const TransitionKernel& kernel) {
  const std::size_t n = kernel.size();
  constexpr auto kUnvisited = std::numeric_limits<std::uint32_t>::max();
  std::vector<std::uint32_t> index(n, kUnvisited);
  std::vector<std::uint32_t> low(n, 0);
  std::vector<bool> on_stack(n, false);
  std::vector<std::uint32_t> stack;
  std::vector<std::pair<std::uint32_t, std::size_t>> call;
  std::vector<std::vector<std::uint32_t>> components;
  std::uint32_t counter = 0;

  // Iterative Tarjan; p can be large enough to overflow a recursive version.
  for (std::uint32_t root = 0; root < n; ++root) {
    if (index[root] != kUnvisited) continue;
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    call.emplace_back(root, 0);
    while (!call.empty()) {
      const std::uint32_t v = call.back().first;
      const auto row = kernel.row(v);
      if (call.back().second < row.size()) {
        const std::uint32_t w = row[call.back().second++].target;
        if (index[w] == kUnvisited) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          call.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<std::uint32_t> component;
        std::uint32_t w = 0;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          component.push_back(w);
        } while (w != v);
        std::sort(component.begin(), component.end());
        components.push_back(std::move(component));
      }
      call.pop_back();
      if (!call.empty()) {
        const std::uint32_t parent = call.back().first;
        low[parent] = std::min(low[parent], low[v]);
      }
    }
  }

  std::sort(components.begin(), components.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  RecurrentStructure rs;
  rs.class_of.assign(n, 0);
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (auto v : components[c]) rs.class_of[v] = static_cast<std::uint32_t>(c);
  }
  rs.recurrent.assign(components.size(), true);
  for (std::size_t c = 0; c < components.size(); ++c) {
    for (auto v : components[c]) {
      for (const auto& t : kernel.row(v)) {
        if (rs.class_of[t.target] != c) rs.recurrent[c] = false;
      }
    }
  }
  rs.classes = std::move(components);
  return rs;
}

// ---------------------------------------------------------------------------
// Exact stationary solve.

namespace {

constexpr std::size_t kMaxModuli = 256;

std::uint64_t powmod(std::uint64_t b, std::uint64_t e, std::uint64_t q) {
  std::uint64_t r = 1;
  b %= q;
  while (e > 0) {
    if (e & 1) r = r * b % q;
    b = b * b % q;
    e >>= 1;
  }
  return r;
}

const std::vector<std::uint32_t>& unique_recurrent_class(const RecurrentStructure& rs) {
  const auto ids = rs.recurrent_class_ids();
  if (ids.size() != 1) {
    fail(ErrorCode::NonUniqueRecurrentClass,
         "kernel has " + std::to_string(ids.size()) + " recurrent classes");
  }
  return rs.classes[ids.front()];
}

// Solves pi (P - I) = 0 with sum(pi) = 1 on the class, modulo a prime q < 2^31.
// Returns nullopt when the system is singular mod q.
std::optional<std::vector<std::uint64_t>> solve_mod(const TransitionKernel& kernel,
                                                    std::span<const std::uint32_t> cls,
                                                    const std::vector<std::uint32_t>& local,
                                                    std::uint64_t q) {
  const std::size_t n = cls.size();
  const std::size_t width = n + 1;
  std::vector<std::uint64_t> a(n * width, 0);
  auto at = [&](std::size_t r, std::size_t c) -> std::uint64_t& { return a[r * width + c]; };
  const std::uint64_t d = kernel.denominator() % q;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& t : kernel.row(cls[i])) {
      auto& cell = at(local[t.target], i);
      cell = (cell + t.weight) % q;
    }
    at(i, i) = (at(i, i) + q - d) % q;
  }
  for (std::size_t c = 0; c < n; ++c) at(n - 1, c) = 1;
  at(n - 1, n) = 1;

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && at(pivot, col) == 0) ++pivot;
    if (pivot == n) return std::nullopt;
    if (pivot != col) {
      std::swap_ranges(a.begin() + pivot * width, a.begin() + (pivot + 1) * width, a.begin() + col * width);
    }
    const std::uint64_t inv = powmod(at(col, col), q - 2, q);
    for (std::size_t c = col; c < width; ++c) at(col, c) = at(col, c) * inv % q;
    for (std::size_t r = col + 1; r < n; ++r) {
      const std::uint64_t factor = at(r, col);
      if (factor == 0) continue;
      const std::uint64_t neg = q - factor;
      for (std::size_t c = col; c < width; ++c) {
        const std::uint64_t v = at(col, c);
        if (v != 0) at(r, c) = (at(r, c) + neg * v) % q;
      }
    }
  }
  std::vector<std::uint64_t> x(n, 0);
  for (std::size_t i = n; i-- > 0;) {
    std::uint64_t s = at(i, n);
    for (std::size_t c = i + 1; c < n; ++c) {
      if (at(i, c) != 0) s = (s + (q - at(i, c)) * x[c]) % q;
    }
    x[i] = s;
  }
  return x;
}

// Finds num/den with num = u * den (mod m), |num|, den <= sqrt(m / 2).
bool rational_reconstruct(const mpz_class& u, const mpz_class& m, mpz_class& num, mpz_class& den) {
  const mpz_class bound = sqrt(mpz_class(m / 2));
  mpz_class r0 = m;
  mpz_class r1 = u % m;
  if (r1 < 0) r1 += m;
  mpz_class s0 = 0;
  mpz_class s1 = 1;
  while (r1 > bound) {
    const mpz_class quotient = r0 / r1;
    mpz_class tmp = r0 - quotient * r1;
    r0 = r1;
    r1 = tmp;
    tmp = s0 - quotient * s1;
    s0 = s1;
    s1 = tmp;
  }
  if (s1 == 0 || abs(s1) > bound) return false;
  num = r1;
  den = s1;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  return true;
}

std::optional<std::vector<mpq_class>> reconstruct(const std::vector<mpz_class>& residues, const mpz_class& m) {
  const mpz_class bound = sqrt(mpz_class(m / 2));
  const mpz_class half = m / 2;
  mpz_class common = 1;
  std::vector<mpq_class> out(residues.size());
  for (std::size_t i = 0; i < residues.size(); ++i) {
    mpz_class a = (common * residues[i]) % m;
    if (a > half) a -= m;
    if (abs(a) <= bound) {
      out[i] = mpq_class(a, common);
      out[i].canonicalize();
      continue;
    }
    mpz_class num;
    mpz_class den;
    if (!rational_reconstruct(a, m, num, den)) return std::nullopt;
    out[i] = mpq_class(num, den * common);
    out[i].canonicalize();
    common *= den;
    if (common > bound) return std::nullopt;
  }
  return out;
}

bool verify_on_class(const TransitionKernel& kernel, std::span<const std::uint32_t> cls,
                     const std::vector<mpq_class>& values) {
  const std::size_t p = kernel.size();
  std::vector<mpq_class> full(p);
  mpq_class total = 0;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    if (sgn(values[i]) <= 0) return false;
    full[cls[i]] = values[i];
    total += values[i];
  }
  if (total != 1) return false;
  std::vector<mpq_class> next(p);
  for (auto x : cls) {
    for (const auto& t : kernel.row(x)) next[t.target] += full[x] * t.weight;
  }
  for (std::size_t y = 0; y < p; ++y) {
    if (next[y] / kernel.denominator() != full[y]) return false;
  }
  return true;
}

}  // namespace

Distribution stationary_exact(const TransitionKernel& kernel) {
  const auto rs = recurrent_classes(kernel);
  const auto& cls = unique_recurrent_class(rs);
  const std::size_t n = cls.size();
  std::vector<std::uint32_t> local(kernel.size(), 0);
  for (std::size_t i = 0; i < n; ++i) local[cls[i]] = static_cast<std::uint32_t>(i);

  std::vector<mpz_class> crt(n, 0);
  mpz_class modulus = 1;
  std::uint64_t q = (1ull << 31);
  std::size_t used = 0;
  std::size_t tried = 0;
  while (used < kMaxModuli && tried < 4 * kMaxModuli) {
    do {
      --q;
    } while (!is_prime(q));
    ++tried;
    const auto sol = solve_mod(kernel, cls, local, q);
    if (!sol) continue;
    // CRT: x <- x + M * ((r - x) * M^-1 mod q)
    const std::uint64_t m_mod = mpz_class(modulus % q).get_ui();
    const std::uint64_t m_inv = powmod(m_mod, q - 2, q);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t x_mod = mpz_class(crt[i] % q).get_ui();
      const std::uint64_t t = ((*sol)[i] + q - x_mod) % q * m_inv % q;
      crt[i] += modulus * t;
    }
    modulus *= q;
    ++used;
    if (const auto values = reconstruct(crt, modulus); values && verify_on_class(kernel, cls, *values)) {
      std::vector<mpq_class> pi(kernel.size());
      for (std::size_t i = 0; i < n; ++i) pi[cls[i]] = (*values)[i];
      return Distribution::exact(std::move(pi));
    }
  }
  fail(ErrorCode::BudgetExceeded, "exact stationary solve did not stabilize");
}

Distribution stationary_float(const TransitionKernel& kernel, double tolerance, std::uint64_t max_iterations) {
  const auto rs = recurrent_classes(kernel);
  const auto& cls = unique_recurrent_class(rs);
  const std::size_t n = kernel.size();
  const double scale = 1.0 / kernel.denominator();
  std::vector<double> cur(n, 0.0);
  std::vector<double> next(n, 0.0);
  for (auto x : cls) cur[x] = 1.0 / static_cast<double>(cls.size());
  for (std::uint64_t it = 0; it < max_iterations; ++it) {
    for (std::size_t x = 0; x < n; ++x) next[x] = 0.5 * cur[x];
    for (std::size_t x = 0; x < n; ++x) {
      const double mass = 0.5 * cur[x];
      if (mass == 0.0) continue;
      for (const auto& t : kernel.row(x)) next[t.target] += mass * (t.weight * scale);
    }
    double total = 0.0;
    for (double v : next) total += v;
    double change = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
      next[x] /= total;
      change += std::abs(next[x] - cur[x]);
    }
    cur.swap(next);
    if (change < tolerance) return Distribution::floating(std::move(cur));
  }
  fail(ErrorCode::BudgetExceeded, "power iteration did not converge");
}

Distribution stationary(const TransitionKernel& kernel, std::size_t exact_limit) {
  return kernel.size() <= exact_limit ? stationary_exact(kernel) : stationary_float(kernel);
}

bool is_stationary(const TransitionKernel& kernel, const Distribution& pi) {
  if (pi.size() != kernel.size()) return false;
  if (pi.mode() == Distribution::Mode::Exact) {
    return step_distribution(kernel, pi).exact_weights() == pi.exact_weights();
  }
  const auto next = step_distribution(kernel, pi);
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (std::abs(next.at(i) - pi.at(i)) > 1e-9) return false;
  }
  return true;
}

std::vector<std::uint64_t> square_preimage_counts(const PrimeField& field, Residue gamma) {
  std::vector<std::uint64_t> counts(field.modulus(), 0);
  for (Residue beta = 0; beta < field.modulus(); ++beta) {
    const Residue sq = field.mul(beta, beta);
    ++counts[field.add(sq, gamma)];
    ++counts[field.sub(sq, gamma)];
  }
  return counts;
}

Distribution square_stationary_formula(const PrimeField& field, Residue gamma) {
  const auto p = field.modulus();
  if (p % 4 != 3) {
    fail(ErrorCode::WrongResidueClass, "preimage-count law requires p = 3 (mod 4), got p=" + std::to_string(p));
  }
  gamma = field.reduce_unsigned(gamma);
  if (gamma == 0) fail(ErrorCode::InvalidArgument, "gamma must be non-zero mod p");
  const auto counts = square_preimage_counts(field, gamma);
  std::vector<mpq_class> pi(p);
  for (std::size_t a = 0; a < p; ++a) {
    pi[a] = mpq_class(counts[a], 2 * p);
    pi[a].canonicalize();
  }
  return Distribution::exact(std::move(pi));
}

Distribution known_stationary(const ChainSpec& spec, const TransitionKernel& kernel, std::size_t exact_limit) {
  const auto p = spec.modulus();
  std::optional<Distribution> candidate;
  if (spec.variant() == ChainVariant::PureAdditive || spec.map().is_bijection()) {
    candidate = Distribution::uniform(p, Distribution::Mode::Exact);
  } else if (spec.map().provenance().kind == MapKind::Square && p % 4 == 3 &&
             (spec.variant() == ChainVariant::NonLazy || spec.variant() == ChainVariant::LazyHold)) {
    candidate = square_stationary_formula(spec.field(), spec.gamma());
  }
  if (candidate && is_stationary(kernel, *candidate)) return *candidate;
  return stationary(kernel, exact_limit);
}

std::uint64_t period(const TransitionKernel& kernel, std::span<const std::uint32_t> recurrent_class) {
  if (recurrent_class.empty()) fail(ErrorCode::InvalidArgument, "empty class");
  const std::size_t n = kernel.size();
  std::vector<bool> member(n, false);
  for (auto v : recurrent_class) member[v] = true;
  constexpr auto kUnseen = std::numeric_limits<std::int64_t>::min();
  std::vector<std::int64_t> level(n, kUnseen);
  std::queue<std::uint32_t> queue;
  level[recurrent_class.front()] = 0;
  queue.push(recurrent_class.front());
  std::uint64_t g = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop();
    for (const auto& t : kernel.row(u)) {
      if (!member[t.target]) continue;
      if (level[t.target] == kUnseen) {
        level[t.target] = level[u] + 1;
        queue.push(t.target);
      }
    }
  }
  for (auto u : recurrent_class) {
    for (const auto& t : kernel.row(u)) {
      if (!member[t.target]) continue;
      const auto diff = level[u] + 1 - level[t.target];
      g = std::gcd(g, static_cast<std::uint64_t>(diff < 0 ? -diff : diff));
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Mixing.

std::vector<Residue> resolve_starts(const StartPolicy& policy, std::uint64_t p, Residue gamma) {
  using Kind = StartPolicy::Kind;
  Kind kind = policy.kind;
  if (kind == Kind::Default) kind = p <= policy.all_limit ? Kind::All : Kind::Sampled;
  std::vector<Residue> out;
  switch (kind) {
    case Kind::All:
      out.resize(p);
      std::iota(out.begin(), out.end(), Residue{0});
      return out;
    case Kind::Explicit:
      for (auto s : policy.states) {
        if (s >= p) fail(ErrorCode::InvalidArgument, "start state outside F_p");
        out.push_back(s);
      }
      break;
    case Kind::Sampled: {
      const PrimeField field(p);
      out = {0, 1, field.inv(field.reduce_unsigned(gamma)), p - 1};
      SplitMix64 rng(policy.seed);
      for (std::uint64_t i = 0; i < policy.random_starts; ++i) out.push_back(rng.below(p));
      break;
    }
    case Kind::Default:
      break;
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty start set");
  return out;
}

namespace {

// Float evolution of one point mass per start; stops early once the max TV
// reaches stop_at (when given).
std::vector<double> evolve_tv(const TransitionKernel& kernel, const std::vector<double>& target,
                              std::span<const Residue> starts, std::uint64_t steps,
                              std::optional<double> stop_at) {
  const std::size_t n = kernel.size();
  const std::size_t m = starts.size();
  const double scale = 1.0 / kernel.denominator();
  std::vector<double> cur(m * n, 0.0);
  std::vector<double> next(m * n, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    if (starts[s] >= n) fail(ErrorCode::InvalidArgument, "start state outside the state space");
    cur[s * n + starts[s]] = 1.0;
  }
  auto max_tv = [&](const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t s = 0; s < m; ++s) {
      double total = 0.0;
      for (std::size_t x = 0; x < n; ++x) total += std::abs(v[s * n + x] - target[x]);
      worst = std::max(worst, std::min(1.0, 0.5 * total));
    }
    return worst;
  };
  std::vector<double> trajectory{max_tv(cur)};
  if (stop_at && trajectory.back() <= *stop_at) return trajectory;
  const double drift_bound = static_cast<double>(n) * 0x1.0p-50;
  for (std::uint64_t step = 1; step <= steps; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t s = 0; s < m; ++s) {
      const double* in = cur.data() + s * n;
      double* out = next.data() + s * n;
      for (std::size_t x = 0; x < n; ++x) {
        const double mass = in[x];
        if (mass == 0.0) continue;
        for (const auto& t : kernel.row(x)) out[t.target] += mass * (t.weight * scale);
      }
      double total = 0.0;
      for (std::size_t x = 0; x < n; ++x) total += out[x];
      if (std::abs(total - 1.0) > drift_bound) {
        fail(ErrorCode::InvalidArgument, "float evolution drift exceeded p * 2^-50");
      }
      for (std::size_t x = 0; x < n; ++x) out[x] /= total;
    }
    cur.swap(next);
    trajectory.push_back(max_tv(cur));
    if (stop_at && trajectory.back() <= *stop_at) break;
  }
  return trajectory;
}

}  // namespace

std::vector<double> tv_trajectory(const TransitionKernel& kernel, const Distribution& target,
                                  std::span<const Residue> starts, std::uint64_t steps) {
  if (target.size() != kernel.size()) fail(ErrorCode::InvalidArgument, "target length does not match kernel");
  return evolve_tv(kernel, target.to_float(), starts, steps, std::nullopt);
}

MixingReport mixing_time(const TransitionKernel& kernel, const Distribution& target, double epsilon,
                         std::span<const Residue> starts, std::uint64_t cap) {
  if (!is_stationary(kernel, target)) fail(ErrorCode::InvalidArgument, "target is not stationary for the kernel");
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  MixingReport report;
  report.epsilon = epsilon;
  report.start_states.assign(starts.begin(), starts.end());
  report.tv_trajectory = evolve_tv(kernel, target.to_float(), starts, cap, epsilon);
  if (report.tv_trajectory.back() > epsilon) {
    fail(ErrorCode::BudgetExceeded, "TV still above epsilon after " + std::to_string(cap) + " steps");
  }
  report.t_mix = report.tv_trajectory.size() - 1;
  return report;
}

MixingReport mixing_time(const ChainSpec& spec, const Distribution& target, double epsilon,
                         const StartPolicy& starts, std::uint64_t cap) {
  const auto kernel = build_kernel(spec);
  const auto states = resolve_starts(starts, spec.modulus(), spec.gamma());
  return mixing_time(kernel, target, epsilon, states, cap);
}

// ---------------------------------------------------------------------------

SupportFraction support_fraction(const PrimeField& field, Residue gamma) {
  const ChainSpec spec(TotalMap::square(field), gamma, ChainVariant::NonLazy, "square");
  const auto kernel = build_kernel(spec);
  SupportFraction out;
  out.p = field.modulus();
  out.gamma = spec.gamma();
  out.structure = recurrent_classes(kernel);
  for (auto id : out.structure.recurrent_class_ids()) {
    out.support_size += out.structure.classes[id].size();
    ++out.recurrent_classes;
  }
  out.fraction = static_cast<double>(out.support_size) / static_cast<double>(out.p);
  return out;
}

ConjectureReport conjectured_limit() {
  const auto quartic = [](double x) { return ((x * x + 2.0) * x - 4.0) * x + 1.0; };
  double lo = 0.0;
  double hi = 0.5;
  // quartic(0) = 1 and quartic(0.5) < 0; the cubic factor of (x-1)(x^3+x^2+3x-1)
  // is strictly increasing, so the bracket holds exactly one root.
  if (!(quartic(lo) > 0.0 && quartic(hi) < 0.0)) fail(ErrorCode::InvalidArgument, "bisection bracket invalid");
  while (hi - lo > 1e-15) {
    const double mid = 0.5 * (lo + hi);
    (quartic(mid) > 0.0 ? lo : hi) = mid;
  }
  ConjectureReport report;
  report.alpha = 0.5 * (lo + hi);
  report.residual = std::abs(quartic(report.alpha));
  report.limit = 1.0 - 0.25 * (1.0 + report.alpha) * (1.0 + report.alpha);
  return report;
}

}  // namespace fpchain
