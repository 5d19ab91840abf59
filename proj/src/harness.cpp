#include "fpchain/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "fpchain/cheeger.hpp"
#include "fpchain/error.hpp"
#include "fpchain/expsum.hpp"
#include "fpchain/records.hpp"
#include "fpchain/rng.hpp"
#include "fpchain/stationary.hpp"
#include "text_util.hpp"

namespace fpchain {

namespace {

const std::vector<std::string> kKnownKeys = {
    "id",     "experiment", "primes",     "prime_min", "prime_max", "prime_count", "residue_mod4",
    "gammas", "chains",     "maps",       "epsilon",   "seeds",     "budget",      "twists",
    "k",      "interval",   "c",          "output_dir", "formats",  "workers"};

const std::vector<std::string> kExperiments = {"stationary-sweep", "mixing-sweep", "conjecture-sweep",
                                               "expsum-sweep", "cheeger-sweep"};

std::string decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

template <class T, class Parse>
std::vector<T> parse_list(std::string_view text, char sep, Parse parse) {
  std::vector<T> out;
  for (auto item : detail::split(text, sep)) {
    if (!item.empty()) out.push_back(parse(item));
  }
  return out;
}

ExperimentConfig parse_config_impl(std::string_view text) {
  ExperimentConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(detail::trim(view.substr(0, eq)));
    const std::string value(detail::trim(view.substr(eq + 1)));
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end()) {
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    if (!cfg.raw.emplace(key, value).second) {
      fail(ErrorCode::Config, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }

  const auto get = [&](const std::string& key) -> const std::string* {
    const auto it = cfg.raw.find(key);
    return it == cfg.raw.end() ? nullptr : &it->second;
  };
  const auto as_uint = [](std::string_view s) { return detail::parse_uint(s, "list entry"); };
  const auto as_int = [](std::string_view s) { return detail::parse_int(s, "list entry"); };

  if (auto v = get("experiment")) cfg.experiment = *v;
  if (std::find(kExperiments.begin(), kExperiments.end(), cfg.experiment) == kExperiments.end()) {
    fail(ErrorCode::Config, "experiment must be one of stationary-sweep, mixing-sweep, conjecture-sweep, "
                            "expsum-sweep, cheeger-sweep");
  }
  cfg.id = get("id") ? *get("id") : cfg.experiment;
  if (cfg.id.empty() || cfg.id.find_first_of("/\\") != std::string::npos) fail(ErrorCode::Config, "invalid id");

  if (auto v = get("primes")) {
    if (get("prime_min") || get("prime_max")) fail(ErrorCode::Config, "give either primes or a prime range");
    cfg.primes = parse_list<std::uint64_t>(*v, ',', as_uint);
  } else if (get("prime_min") && get("prime_max")) {
    const auto lo = detail::parse_uint(*get("prime_min"), "prime_min");
    const auto hi = detail::parse_uint(*get("prime_max"), "prime_max");
    cfg.primes = lo <= hi ? primes_in_range(std::max<std::uint64_t>(lo, 3), hi) : std::vector<std::uint64_t>{};
  } else {
    fail(ErrorCode::Config, "missing primes (list) or prime_min/prime_max");
  }
  if (auto v = get("residue_mod4")) {
    const auto r = detail::parse_uint(*v, "residue_mod4");
    if (r != 1 && r != 3) fail(ErrorCode::Config, "residue_mod4 must be 1 or 3");
    std::erase_if(cfg.primes, [r](std::uint64_t p) { return p % 4 != r; });
  }
  if (auto v = get("prime_count")) {
    const auto n = detail::parse_uint(*v, "prime_count");
    if (cfg.primes.size() > n) cfg.primes.resize(n);
  }
  for (auto p : cfg.primes) {
    if (p == 2 || !is_prime(p) || p >= (1ull << 32)) fail(ErrorCode::Config, std::to_string(p) + " is not an odd prime below 2^32");
  }

  if (auto v = get("gammas")) cfg.gammas = parse_list<std::int64_t>(*v, ',', as_int);
  for (auto p : cfg.primes) {
    for (auto g : cfg.gammas) {
      if (PrimeField(p).reduce(g) == 0) {
        fail(ErrorCode::Config, "gamma " + std::to_string(g) + " vanishes mod " + std::to_string(p));
      }
    }
  }
  if (auto v = get("chains")) cfg.chains = parse_list<std::string>(*v, '|', [](std::string_view s) { return std::string(s); });
  if (auto v = get("maps")) cfg.maps = parse_list<std::string>(*v, '|', [](std::string_view s) { return std::string(s); });
  if (auto v = get("epsilon")) cfg.epsilon = detail::parse_double(*v, "epsilon");
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) fail(ErrorCode::Config, "epsilon must lie in (0, 1)");
  if (auto v = get("seeds")) cfg.seeds = parse_list<std::uint64_t>(*v, ',', as_uint);
  if (cfg.seeds.empty()) fail(ErrorCode::Config, "seeds must be given explicitly");
  if (auto v = get("budget")) cfg.budget = detail::parse_uint(*v, "budget");
  if (auto v = get("twists")) cfg.twists = detail::parse_uint(*v, "twists");
  if (auto v = get("k")) cfg.k = detail::parse_int(*v, "k");
  if (auto v = get("interval")) cfg.interval = detail::parse_uint(*v, "interval");
  if (auto v = get("c")) cfg.c = detail::parse_double(*v, "c");
  if (auto v = get("output_dir")) cfg.output_dir = *v;
  if (auto v = get("formats")) {
    cfg.formats = parse_list<std::string>(*v, ',', [](std::string_view s) { return std::string(s); });
    for (const auto& f : cfg.formats) parse_report_format(f);
  }
  if (auto v = get("workers")) cfg.workers = static_cast<unsigned>(detail::parse_uint(*v, "workers"));
  // the worker count never changes the rows, so it stays out of the hash
  auto hashed = cfg.raw;
  hashed.erase("workers");
  cfg.config_hash = config_hash(hashed);
  return cfg;
}

struct Task {
  std::uint64_t p;
  std::int64_t gamma;
  std::string descriptor;  // chain or map, as configured
  std::uint64_t seed;
};

std::string full_chain(const Task& t) {
  return t.descriptor + ";gamma=" + std::to_string(t.gamma) + ";p=" + std::to_string(t.p);
}

struct Emit {
  const ExperimentConfig& cfg;
  const Task& task;
  std::vector<ResultRow>& rows;

  void operator()(std::string metric, std::string value, std::string oracle = {}) const {
    ResultRow row;
    row.experiment = cfg.experiment;
    row.p = task.p;
    row.gamma = task.gamma;
    row.chain = task.descriptor;
    row.metric = std::move(metric);
    row.value = std::move(value);
    row.oracle = std::move(oracle);
    row.seed = task.seed;
    row.config_hash = cfg.config_hash;
    rows.push_back(std::move(row));
  }
};

std::optional<Distribution> closed_form(const ChainSpec& spec) {
  const auto kind = spec.map().provenance().kind;
  const bool square_like = spec.variant() == ChainVariant::NonLazy || spec.variant() == ChainVariant::LazyHold;
  if (kind == MapKind::Square && square_like && spec.modulus() % 4 == 3) {
    return square_stationary_formula(spec.field(), spec.gamma());
  }
  if (spec.variant() == ChainVariant::PureAdditive || spec.map().is_bijection()) {
    return Distribution::uniform(spec.modulus(), Distribution::Mode::Exact);
  }
  return std::nullopt;
}

void run_stationary(const Task& task, const Emit& emit) {
  const auto spec = parse_chain(full_chain(task));
  const auto kernel = build_kernel(spec);
  const auto exact = stationary_exact(kernel);
  if (const auto formula = closed_form(spec)) {
    const bool match = formula->exact_weights() == exact.exact_weights();
    emit("formula_matches_exact", match ? "true" : "false", "true");
  } else {
    emit("stationary_support_size", std::to_string(exact.support().size()));
  }
}

void run_mixing(const ExperimentConfig& cfg, const Task& task, const Emit& emit) {
  const auto spec = parse_chain(full_chain(task));
  const auto kernel = build_kernel(spec);
  const auto pi = known_stationary(spec, kernel);
  StartPolicy starts;
  starts.seed = task.seed;
  const auto report = mixing_time(spec, pi, cfg.epsilon, starts, cfg.budget);
  emit("t_mix", std::to_string(report.t_mix));
}

void run_conjecture(const Task& task, const Emit& emit, double limit) {
  const PrimeField field(task.p);
  const auto support = support_fraction(field, field.reduce(task.gamma));
  emit("support_fraction", rational_string(mpq_class(support.support_size, support.p)), decimal(limit));
}

void run_expsum(const ExperimentConfig& cfg, const Task& task, const Emit& emit) {
  const PrimeField field(task.p);
  const auto f = build_total_map(task.descriptor, field);
  SplitMix64 rng(task.seed);
  double worst = 0.0;
  std::uint64_t checked = 0;
  for (std::uint64_t i = 0; i < cfg.twists; ++i) {
    const Residue alpha = rng.below(task.p);
    const Residue k = 1 + rng.below(task.p - 1);
    try {
      worst = std::max(worst, weil_record(f, alpha, k).empirical_constant);
      ++checked;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::ConstantPhase) throw;
    }
  }
  emit("weil_max_ratio", decimal(worst), "4");
  emit("weil_twists_checked", std::to_string(checked));
  const auto length = cfg.interval.value_or(static_cast<std::uint64_t>(std::sqrt(static_cast<double>(task.p))));
  const auto rec = averaged_square_record(f, field.reduce(cfg.k), Interval{0, std::max<std::uint64_t>(length, 1)});
  emit("avg_square_constant", decimal(rec.empirical_constant),
       f.provenance().kind == MapKind::Square ? "1" : "");
}

void run_cheeger(const ExperimentConfig& cfg, const Task& task, const Emit& emit) {
  const auto spec = parse_chain(full_chain(task));
  const auto kernel = build_kernel(spec);
  const auto pi = known_stationary(spec, kernel, kernel.size());
  emit("mass_spread", decimal(mass_spread(pi)));
  if (pi.support().size() <= 22) {
    const auto cert = cheeger_exact(kernel, pi);
    emit("cheeger_h", rational_string(cert.ratio));
    const auto check = check_cheeger_tv_bound(kernel, pi, cert.ratio.get_d(), cfg.c);
    emit("tv_bound_passed", check.passed ? "true" : "false", "true");
  } else {
    SearchOptions options;
    options.budget = cfg.budget;
    options.seed = task.seed;
    options.two_gamma = spec.field().add(spec.gamma(), spec.gamma());
    emit("cheeger_h_upper", rational_string(cheeger_search(kernel, pi, options).ratio));
  }
}

std::vector<Task> make_tasks(const ExperimentConfig& cfg) {
  std::vector<Task> tasks;
  const auto& e = cfg.experiment;
  if (e == "conjecture-sweep") {
    for (auto p : cfg.primes) {
      for (auto g : cfg.gammas) tasks.push_back({p, g, "square", cfg.seeds.front()});
    }
    return tasks;
  }
  if (e == "expsum-sweep") {
    const auto maps = cfg.maps.empty() ? std::vector<std::string>{"inverse"} : cfg.maps;
    for (auto p : cfg.primes) {
      for (const auto& m : maps) {
        for (auto s : cfg.seeds) tasks.push_back({p, 0, m, s});
      }
    }
    return tasks;
  }
  std::vector<std::string> chains = cfg.chains;
  if (chains.empty()) {
    chains = {e == "stationary-sweep" ? "chain:nonlazy;map=square" : "chain:lazy;map=inverse"};
  }
  const bool seeded = e != "stationary-sweep";
  const std::vector<std::uint64_t> seeds = seeded ? cfg.seeds : std::vector<std::uint64_t>{cfg.seeds.front()};
  for (auto p : cfg.primes) {
    for (auto g : cfg.gammas) {
      for (const auto& c : chains) {
        for (auto s : seeds) tasks.push_back({p, g, c, s});
      }
    }
  }
  return tasks;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string config_hash(const std::map<std::string, std::string>& raw) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [key, value] : raw) {
    for (char c : key + "=" + value + "\n") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

ExperimentConfig parse_config(std::string_view text) {
  try {
    return parse_config_impl(text);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    throw Error(ErrorCode::Config, e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  const auto tasks = make_tasks(cfg);
  const double limit = cfg.experiment == "conjecture-sweep" ? conjectured_limit().limit : 0.0;
  std::vector<std::vector<ResultRow>> slots(tasks.size());
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& task = tasks[i];
      auto& rows = slots[i];
      const Emit emit{cfg, task, rows};
      const auto t0 = std::chrono::steady_clock::now();
      try {
        if (cfg.experiment == "stationary-sweep") {
          run_stationary(task, emit);
        } else if (cfg.experiment == "mixing-sweep") {
          run_mixing(cfg, task, emit);
        } else if (cfg.experiment == "conjecture-sweep") {
          run_conjecture(task, emit, limit);
        } else if (cfg.experiment == "expsum-sweep") {
          run_expsum(cfg, task, emit);
        } else {
          run_cheeger(cfg, task, emit);
        }
      } catch (const Error& e) {
        rows.clear();
        emit("error", std::string(to_string(e.code())) + ": " + e.what());
      } catch (const std::exception& e) {
        rows.clear();
        emit("error", std::string("internal: ") + e.what());
      }
      const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - t0;
      for (auto& r : rows) r.runtime_ms = elapsed.count();
    }
  };

  unsigned threads = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, tasks.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<ResultRow> rows;
  for (auto& slot : slots) std::move(slot.begin(), slot.end(), std::back_inserter(rows));
  return rows;
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::Csv;
  if (name == "jsonl") return ReportFormat::Jsonl;
  fail(ErrorCode::Config, "unknown report format '" + std::string(name) + "'");
}

std::string format_report(const std::vector<ResultRow>& rows, ReportFormat format, bool include_runtime) {
  std::string out;
  if (format == ReportFormat::Csv) {
    out += kCsvHeader;
    out += '\n';
    for (const auto& r : rows) {
      out += csv_field(r.experiment) + ',' + std::to_string(r.p) + ',' + std::to_string(r.gamma) + ',' +
             csv_field(r.chain) + ',' + csv_field(r.metric) + ',' + csv_field(r.value) + ',' + csv_field(r.oracle) +
             ',' + (include_runtime ? decimal(r.runtime_ms) : std::string()) + ',' + std::to_string(r.seed) + ',' +
             r.config_hash + '\n';
    }
    return out;
  }
  for (const auto& r : rows) {
    nlohmann::json j{{"experiment", r.experiment}, {"p", r.p},           {"gamma", r.gamma},
                     {"chain", r.chain},           {"metric", r.metric}, {"value", r.value},
                     {"seed", r.seed},             {"config_hash", r.config_hash}};
    j["oracle"] = r.oracle.empty() ? nlohmann::json(nullptr) : nlohmann::json(r.oracle);
    j["runtime_ms"] = include_runtime ? nlohmann::json(r.runtime_ms) : nlohmann::json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::filesystem::path emit_report(const std::vector<ResultRow>& rows, ReportFormat format,
                                  const std::filesystem::path& dir, const std::string& id, bool allow_empty) {
  if (rows.empty() && !allow_empty) fail(ErrorCode::InvalidArgument, "no rows to report (allow_empty not set)");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create directory " + dir.string() + ": " + ec.message());
  const auto path = dir / (id + (format == ReportFormat::Csv ? ".csv" : ".jsonl"));
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const auto text = format_report(rows, format);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
  return path;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("FPCHAIN_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return config.output_dir;
}

}  // namespace fpchain
