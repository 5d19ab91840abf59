#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fpchain/fpchain.h"

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitErrorRows = 3;

int report_failure(fpc_status status) {
  std::cerr << "error: " << fpc_status_name(status) << ": " << fpc_last_error_message() << '\n';
  return kExitError;
}

// Prints the JSON payload and releases it.
int print_result(fpc_status status, fpc_result** result, bool pretty) {
  if (status != FPC_OK) return report_failure(status);
  const std::string text = fpc_result_text(*result);
  fpc_result_destroy(*result);
  std::cout << (pretty ? nlohmann::json::parse(text).dump(2) : text) << '\n';
  return 0;
}

struct ChainHandle {
  fpc_chain* chain = nullptr;
  ~ChainHandle() { fpc_chain_destroy(chain); }
};

std::vector<std::uint64_t> parse_primes(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const auto end = list.find(',', start);
    const auto item = list.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (!item.empty()) out.push_back(std::stoull(item));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Markov chains of the form x -> f(x) + noise on F_p: exact stationary laws, mixing, "
               "Cheeger constants and exponential sums."};
  app.require_subcommand(1);
  bool pretty = false;
  app.add_flag("--pretty", pretty, "Indent JSON output");

  std::string chain_desc;

  // stationary
  auto* stationary = app.add_subcommand("stationary", "Stationary distribution of a chain");
  std::string mode = "auto";
  stationary->add_option("--chain", chain_desc, "chain:<variant>;map=<map>;gamma=<g>;p=<p>")->required();
  bool force_exact = false;
  stationary->add_option("--mode", mode, "exact | float | auto")->check(CLI::IsMember({"exact", "float", "auto"}));
  stationary->add_flag("--exact", force_exact, "Same as --mode exact");

  // mix
  auto* mix = app.add_subcommand("mix", "Mixing time to total variation epsilon");
  double epsilon = 0.25;
  std::string starts = "default";
  std::uint64_t seed = 0;
  std::uint64_t cap = 1'000'000;
  std::string trajectory;
  mix->add_option("--chain", chain_desc, "Chain descriptor")->required();
  mix->add_option("--eps", epsilon, "Target total variation distance");
  bool all_starts = false;
  mix->add_option("--starts", starts, "default | all | sampled | comma separated states");
  mix->add_flag("--all-starts", all_starts, "Same as --starts all");
  mix->add_option("--seed", seed, "Seed for sampled starts");
  mix->add_option("--cap", cap, "Maximum number of steps");
  mix->add_option("--trajectory", trajectory, "Write the TV trajectory as CSV");

  // conjecture
  auto* conjecture = app.add_subcommand("conjecture", "Support fraction of the square-and-add chain");
  std::string primes;
  std::uint64_t p_min = 0, p_max = 0;
  int residue = 0;
  std::size_t limit_count = 0;
  std::int64_t gamma = 1;
  conjecture->add_option("--primes", primes, "Comma separated primes");
  conjecture->add_option("--pmin,--p-min", p_min, "Range start");
  conjecture->add_option("--pmax,--p-max", p_max, "Range end");
  conjecture->add_option("--residue", residue, "Keep primes = residue (mod 4)")->check(CLI::IsMember({0, 1, 3}));
  conjecture->add_option("--count", limit_count, "Keep at most this many primes of the range");
  conjecture->add_option("--gamma", gamma, "Additive step");

  // expsum
  auto* expsum = app.add_subcommand("expsum", "Exponential sum estimates");
  expsum->require_subcommand(1);
  std::uint64_t p = 0;
  std::string map = "inverse";
  std::int64_t k = 1, alpha = 0;
  std::uint64_t start = 0, length = 0;
  bool exact = false;
  std::string family, family2;
  double count_eps = 0.1;
  const auto common = [&](CLI::App* sub) {
    sub->add_option("--p", p, "Prime modulus")->required();
    sub->add_option("--map", map, "Map descriptor");
    sub->add_option("--k", k, "Frequency");
  };
  auto* weil = expsum->add_subcommand("weil", "|sum e_p(alpha x + k f(x))| against sqrt(p)");
  common(weil);
  weil->add_option("--alpha", alpha, "Linear twist");
  auto* avg = expsum->add_subcommand("avg", "Averaged square sum over shifts of an interval");
  common(avg);
  avg->add_option("--start", start, "Interval start");
  avg->add_option("--length", length, "Interval length")->required();
  avg->add_flag("--exact", exact, "Also evaluate by exact residue counts");
  auto* fam = expsum->add_subcommand("family", "Square sum over a family of progressions");
  common(fam);
  fam->add_option("--family", family, "delta=<d>;aps=<start:len,...>")->required();
  auto* linear = expsum->add_subcommand("linear", "Linear phase sum over a family");
  linear->add_option("--p", p, "Prime modulus")->required();
  linear->add_option("--family", family, "delta=<d>;aps=<start:len,...>")->required();
  auto* count = expsum->add_subcommand("count", "Solutions of f(x) in S' for x in S");
  common(count);
  count->add_option("--family", family, "Source family S")->required();
  count->add_option("--target", family2, "Target family S'")->required();
  count->add_option("--eps", count_eps, "Regime exponent slack");

  // cheeger
  auto* cheeger = app.add_subcommand("cheeger", "Cheeger constant of a chain");
  cheeger->require_subcommand(1);
  bool allow_large = false;
  std::string families = "intervals,ap_unions,quadratic_residues,random";
  std::uint64_t budget = 100'000;
  double c = 1.0;
  auto* c_exact = cheeger->add_subcommand("exact", "Exhaustive minimum over subsets of the support");
  c_exact->add_option("--chain", chain_desc, "Chain descriptor")->required();
  c_exact->add_flag("--allow-large", allow_large, "Permit more than 22 support states");
  auto* c_search = cheeger->add_subcommand("search", "Upper bound from structured candidate subsets");
  c_search->add_option("--chain", chain_desc, "Chain descriptor")->required();
  c_search->add_option("--families", families, "Comma separated candidate families");
  c_search->add_option("--budget", budget, "Candidate subsets to evaluate");
  c_search->add_option("--seed", seed, "Seed");
  auto* c_tv = cheeger->add_subcommand("tvbound", "Step count from the Cheeger bound, checked by evolution");
  c_tv->add_option("--chain", chain_desc, "Chain descriptor")->required();
  c_tv->add_option("--c", c, "Target TV is e^-c");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Run an experiment configuration");
  std::string config;
  bool allow_empty = false;
  sweep->add_option("--config", config, "Config file")->required();
  sweep->add_flag("--allow-empty", allow_empty, "Write reports even with zero rows");

  // sample
  auto* sample = app.add_subcommand("sample", "Seeded trajectory as CSV");
  std::uint64_t x0 = 0, steps = 100;
  std::string out_path;
  sample->add_option("--chain", chain_desc, "Chain descriptor")->required();
  sample->add_option("--x0", x0, "Start state");
  sample->add_option("--steps", steps, "Number of steps");
  sample->add_option("--seed", seed, "Seed");
  sample->add_option("--out", out_path, "Output file (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  const auto open_chain = [&](ChainHandle& h) { return fpc_chain_create(chain_desc.c_str(), &h.chain); };
  fpc_result* result = nullptr;

  if (*stationary) {
    ChainHandle h;
    if (auto s = open_chain(h); s != FPC_OK) return report_failure(s);
    if (force_exact) mode = "exact";
    return print_result(fpc_chain_stationary(h.chain, mode.c_str(), &result), &result, pretty);
  }
  if (*mix) {
    ChainHandle h;
    if (auto s = open_chain(h); s != FPC_OK) return report_failure(s);
    if (all_starts) starts = "all";
    return print_result(fpc_chain_mixing(h.chain, epsilon, starts.c_str(), seed, cap,
                                         trajectory.empty() ? nullptr : trajectory.c_str(), &result),
                        &result, pretty);
  }
  if (*conjecture) {
    std::vector<std::uint64_t> list;
    if (!primes.empty()) {
      list = parse_primes(primes);
    } else if (p_max > 0) {
      std::size_t n = 0;
      if (auto s = fpc_primes_in_range(p_min, p_max, residue, nullptr, 0, &n); s != FPC_OK) return report_failure(s);
      list.resize(n);
      if (auto s = fpc_primes_in_range(p_min, p_max, residue, list.data(), n, &n); s != FPC_OK) {
        return report_failure(s);
      }
      if (limit_count > 0 && list.size() > limit_count) list.resize(limit_count);
    }
    return print_result(fpc_conjecture(list.data(), list.size(), gamma, &result), &result, pretty);
  }
  if (*expsum) {
    fpc_expsum_request req{};
    req.p = p;
    req.map = map.c_str();
    req.k = k;
    req.alpha = alpha;
    req.interval_start = start;
    req.interval_length = length;
    req.exact = exact ? 1 : 0;
    req.family = family.c_str();
    req.family2 = family2.c_str();
    req.epsilon = count_eps;
    for (auto* sub : expsum->get_subcommands()) req.kind = sub->get_name().c_str();
    const std::string kind = req.kind;
    req.kind = kind.c_str();
    return print_result(fpc_expsum(&req, &result), &result, pretty);
  }
  if (*cheeger) {
    ChainHandle h;
    if (auto s = open_chain(h); s != FPC_OK) return report_failure(s);
    if (*c_exact) return print_result(fpc_cheeger_exact(h.chain, allow_large ? 1 : 0, &result), &result, pretty);
    if (*c_search) {
      return print_result(fpc_cheeger_search(h.chain, families.c_str(), budget, seed, &result), &result, pretty);
    }
    return print_result(fpc_cheeger_tvbound(h.chain, c, &result), &result, pretty);
  }
  if (*sweep) {
    const auto s = fpc_sweep(config.c_str(), allow_empty ? 1 : 0, &result);
    if (s == FPC_ERR_CONFIG) {
      std::cerr << "config error: " << fpc_last_error_message() << '\n';
      return kExitConfig;
    }
    if (s != FPC_OK) return report_failure(s);
    const auto summary = nlohmann::json::parse(fpc_result_text(result));
    fpc_result_destroy(result);
    std::cout << (pretty ? summary.dump(2) : summary.dump()) << '\n';
    return summary.at("error_rows").get<std::size_t>() > 0 ? kExitErrorRows : 0;
  }
  if (*sample) {
    ChainHandle h;
    if (auto s = open_chain(h); s != FPC_OK) return report_failure(s);
    std::vector<std::uint64_t> path(steps + 1);
    if (auto s = fpc_chain_sample_path(h.chain, x0, steps, seed, path.data(), path.size()); s != FPC_OK) {
      return report_failure(s);
    }
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path, std::ios::trunc);
      if (!file) {
        std::cerr << "error: io: cannot open " << out_path << '\n';
        return kExitError;
      }
    }
    std::ostream& os = out_path.empty() ? std::cout : file;
    os << "step,state\n";
    for (std::size_t i = 0; i < path.size(); ++i) os << i << ',' << path[i] << '\n';
    return 0;
  }
  return 0;
}
