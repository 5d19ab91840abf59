#include "fpchain/fpchain.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <new>
#include <string>

#include "json.hpp"

#include "fpchain/cheeger.hpp"
#include "fpchain/error.hpp"
#include "fpchain/expsum.hpp"
#include "fpchain/harness.hpp"
#include "fpchain/records.hpp"
#include "fpchain/stationary.hpp"
#include "text_util.hpp"

struct fpc_map {
  fpchain::TotalMap map;
};

struct fpc_chain {
  fpchain::ChainSpec spec;
  fpchain::TransitionKernel kernel;
};

struct fpc_result {
  std::string text;
};

namespace {

using fpchain::ErrorCode;
using nlohmann::json;

thread_local std::string last_error;

fpc_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return FPC_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse: return FPC_ERR_PARSE;
    case ErrorCode::NotPrime: return FPC_ERR_NOT_PRIME;
    case ErrorCode::MissingPoleAssignment: return FPC_ERR_MISSING_POLE_ASSIGNMENT;
    case ErrorCode::NotABijection: return FPC_ERR_NOT_A_BIJECTION;
    case ErrorCode::ModeMismatch: return FPC_ERR_MODE_MISMATCH;
    case ErrorCode::NonUniqueRecurrentClass: return FPC_ERR_NON_UNIQUE_RECURRENT_CLASS;
    case ErrorCode::WrongResidueClass: return FPC_ERR_WRONG_RESIDUE_CLASS;
    case ErrorCode::BudgetExceeded: return FPC_ERR_BUDGET_EXCEEDED;
    case ErrorCode::ConstantPhase: return FPC_ERR_CONSTANT_PHASE;
    case ErrorCode::TrivialSubset: return FPC_ERR_TRIVIAL_SUBSET;
    case ErrorCode::TooLarge: return FPC_ERR_TOO_LARGE;
    case ErrorCode::NotSymmetric: return FPC_ERR_NOT_SYMMETRIC;
    case ErrorCode::AverageTooSmall: return FPC_ERR_AVERAGE_TOO_SMALL;
    case ErrorCode::Io: return FPC_ERR_IO;
    case ErrorCode::Config: return FPC_ERR_CONFIG;
  }
  return FPC_ERR_INTERNAL;
}

// Runs body, translating exceptions into a status and the thread's message.
template <class Body>
fpc_status guard(Body&& body) {
  try {
    body();
    return FPC_OK;
  } catch (const fpchain::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  }
  return FPC_ERR_INTERNAL;
}

void require(const void* ptr, const char* what) {
  if (ptr == nullptr) fpchain::fail(ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

void set_result(fpc_result** out, const json& j) { *out = new fpc_result{j.dump()}; }

fpchain::Distribution chain_stationary(const fpc_chain* chain) {
  return fpchain::known_stationary(chain->spec, chain->kernel, chain->kernel.size());
}

fpchain::StartPolicy parse_starts(const char* text, std::uint64_t seed) {
  fpchain::StartPolicy policy;
  policy.seed = seed;
  const std::string_view s = text == nullptr ? "default" : text;
  if (s == "default") return policy;
  if (s == "all") {
    policy.kind = fpchain::StartPolicy::Kind::All;
  } else if (s == "sampled") {
    policy.kind = fpchain::StartPolicy::Kind::Sampled;
  } else {
    policy.kind = fpchain::StartPolicy::Kind::Explicit;
    for (auto item : fpchain::detail::split(s, ',')) policy.states.push_back(fpchain::detail::parse_uint(item, "start"));
  }
  return policy;
}

}  // namespace

extern "C" {

const char* fpc_last_error_message(void) { return last_error.c_str(); }

const char* fpc_status_name(fpc_status status) {
  switch (status) {
    case FPC_OK: return "ok";
    case FPC_ERR_INTERNAL: return "internal";
    default: break;
  }
  for (int c = 0; c <= static_cast<int>(ErrorCode::Config); ++c) {
    if (status_of(static_cast<ErrorCode>(c)) == status) return fpchain::to_string(static_cast<ErrorCode>(c));
  }
  return "unknown";
}

const char* fpc_result_text(const fpc_result* result) { return result == nullptr ? "" : result->text.c_str(); }

void fpc_result_destroy(fpc_result* result) { delete result; }

fpc_status fpc_map_create(uint64_t p, const char* descriptor, fpc_map** out) {
  return guard([&] {
    require(descriptor, "descriptor");
    require(out, "out");
    *out = new fpc_map{fpchain::build_total_map(descriptor, fpchain::PrimeField(p))};
  });
}

void fpc_map_destroy(fpc_map* map) { delete map; }

uint64_t fpc_map_modulus(const fpc_map* map) { return map == nullptr ? 0 : map->map.field().modulus(); }

fpc_status fpc_map_table(const fpc_map* map, uint32_t* out, size_t length) {
  return guard([&] {
    require(map, "map");
    require(out, "out");
    const auto table = map->map.table();
    if (length != table.size()) fpchain::fail(ErrorCode::InvalidArgument, "output length must equal p");
    std::copy(table.begin(), table.end(), out);
  });
}

fpc_status fpc_map_classify(const fpc_map* map, int* is_bijection, int* is_linear_or_constant, int* in_class) {
  return guard([&] {
    require(map, "map");
    const auto& prov = map->map.provenance();
    fpchain::ClassReport report;
    report.is_bijection = map->map.is_bijection();
    if (prov.rational) {
      report = fpchain::classify_map(*prov.rational, prov.poles);
    } else {
      report.is_linear_or_constant = prov.kind == fpchain::MapKind::Linear;
      report.in_class = false;
    }
    if (is_bijection) *is_bijection = report.is_bijection;
    if (is_linear_or_constant) *is_linear_or_constant = report.is_linear_or_constant;
    if (in_class) *in_class = report.in_class;
  });
}

fpc_status fpc_chain_create(const char* descriptor, fpc_chain** out) {
  return guard([&] {
    require(descriptor, "descriptor");
    require(out, "out");
    auto spec = fpchain::parse_chain(descriptor);
    auto kernel = fpchain::build_kernel(spec);
    *out = new fpc_chain{std::move(spec), std::move(kernel)};
  });
}

void fpc_chain_destroy(fpc_chain* chain) { delete chain; }

uint64_t fpc_chain_modulus(const fpc_chain* chain) { return chain == nullptr ? 0 : chain->spec.modulus(); }

fpc_status fpc_chain_sample_path(const fpc_chain* chain, uint64_t x0, uint64_t steps, uint64_t seed, uint64_t* out,
                                 size_t length) {
  return guard([&] {
    require(chain, "chain");
    require(out, "out");
    if (steps == std::numeric_limits<uint64_t>::max() || length != steps + 1) {
      fpchain::fail(ErrorCode::InvalidArgument, "output length must equal steps + 1");
    }
    const auto path = fpchain::sample_path(chain->spec, x0, steps, seed);
    std::copy(path.begin(), path.end(), out);
  });
}

fpc_status fpc_chain_stationary(const fpc_chain* chain, const char* mode, fpc_result** out) {
  return guard([&] {
    require(chain, "chain");
    require(out, "out");
    const std::string_view m = mode == nullptr ? "auto" : mode;
    std::optional<fpchain::Distribution> pi;
    if (m == "exact") {
      pi = fpchain::stationary_exact(chain->kernel);
    } else if (m == "float") {
      pi = fpchain::stationary_float(chain->kernel);
    } else if (m == "auto") {
      pi = fpchain::known_stationary(chain->spec, chain->kernel);
    } else {
      fpchain::fail(ErrorCode::InvalidArgument, "mode must be exact, float or auto");
    }
    const auto structure = fpchain::recurrent_classes(chain->kernel);
    json j = fpchain::to_json(*pi);
    j["chain"] = chain->spec.descriptor();
    j["recurrent_classes"] = structure.recurrent_count();
    if (structure.recurrent_count() == 1) {
      const auto& cls = structure.classes[structure.recurrent_class_ids().front()];
      j["period"] = fpchain::period(chain->kernel, cls);
    }
    set_result(out, j);
  });
}

fpc_status fpc_chain_mixing(const fpc_chain* chain, double epsilon, const char* starts, uint64_t seed, uint64_t cap,
                            const char* trajectory_csv, fpc_result** out) {
  return guard([&] {
    require(chain, "chain");
    require(out, "out");
    const auto pi = chain_stationary(chain);
    const auto states = fpchain::resolve_starts(parse_starts(starts, seed), chain->spec.modulus(), chain->spec.gamma());
    const auto report = fpchain::mixing_time(chain->kernel, pi, epsilon, states, cap);
    if (trajectory_csv != nullptr) {
      std::ofstream csv(trajectory_csv, std::ios::trunc);
      if (!csv) fpchain::fail(ErrorCode::Io, std::string("cannot open ") + trajectory_csv);
      csv << "step,tv\n";
      char buf[64];
      for (std::size_t n = 0; n < report.tv_trajectory.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", n, report.tv_trajectory[n]);
        csv << buf;
      }
      if (!csv) fpchain::fail(ErrorCode::Io, std::string("write failed for ") + trajectory_csv);
    }
    json j = fpchain::to_json(report);
    j["chain"] = chain->spec.descriptor();
    j["p"] = chain->spec.modulus();
    j["gamma"] = chain->spec.gamma();
    j["trajectory_path"] = trajectory_csv == nullptr ? json(nullptr) : json(trajectory_csv);
    set_result(out, j);
  });
}

fpc_status fpc_cheeger_exact(const fpc_chain* chain, int allow_large, fpc_result** out) {
  return guard([&] {
    require(chain, "chain");
    require(out, "out");
    const auto pi = chain_stationary(chain);
    json j = fpchain::to_json(fpchain::cheeger_exact(chain->kernel, pi, allow_large != 0));
    j["chain"] = chain->spec.descriptor();
    set_result(out, j);
  });
}

fpc_status fpc_cheeger_search(const fpc_chain* chain, const char* families, uint64_t budget, uint64_t seed,
                              fpc_result** out) {
  return guard([&] {
    require(chain, "chain");
    require(out, "out");
    fpchain::SearchOptions options;
    if (families != nullptr) options = fpchain::parse_families(families);
    options.budget = budget;
    options.seed = seed;
    options.two_gamma = chain->spec.field().add(chain->spec.gamma(), chain->spec.gamma());
    const auto pi = chain_stationary(chain);
    json j = fpchain::to_json(fpchain::cheeger_search(chain->kernel, pi, options));
    j["chain"] = chain->spec.descriptor();
    set_result(out, j);
  });
}

fpc_status fpc_cheeger_tvbound(const fpc_chain* chain, double c, fpc_result** out) {
  return guard([&] {
    require(chain, "chain");
    require(out, "out");
    const auto pi = chain_stationary(chain);
    const auto cert = fpchain::cheeger_exact(chain->kernel, pi);
    const auto check = fpchain::check_cheeger_tv_bound(chain->kernel, pi, cert.ratio.get_d(), c);
    json j = fpchain::to_json(check);
    j["certificate"] = fpchain::to_json(cert);
    j["chain"] = chain->spec.descriptor();
    set_result(out, j);
  });
}

fpc_status fpc_primes_in_range(uint64_t lo, uint64_t hi, int residue_mod4, uint64_t* out, size_t capacity,
                               size_t* count) {
  return guard([&] {
    require(count, "count");
    if (capacity > 0) require(out, "out");
    if (residue_mod4 != 0 && residue_mod4 != 1 && residue_mod4 != 3) {
      fpchain::fail(ErrorCode::InvalidArgument, "residue_mod4 must be 0, 1 or 3");
    }
    size_t n = 0;
    for (auto p : fpchain::primes_in_range(lo, hi)) {
      if (residue_mod4 != 0 && p % 4 != static_cast<uint64_t>(residue_mod4)) continue;
      if (n < capacity) out[n] = p;
      ++n;
    }
    *count = n;
  });
}

fpc_status fpc_conjecture(const uint64_t* primes, size_t count, int64_t gamma, fpc_result** out) {
  return guard([&] {
    require(out, "out");
    if (count > 0) require(primes, "primes");
    auto report = fpchain::conjectured_limit();
    json rows = json::array();
    double sum = 0.0;
    for (size_t i = 0; i < count; ++i) {
      const fpchain::PrimeField field(primes[i]);
      const auto g = field.reduce(gamma);
      if (g == 0) fpchain::fail(ErrorCode::InvalidArgument, "gamma vanishes mod " + std::to_string(primes[i]));
      const auto support = fpchain::support_fraction(field, g);
      report.fractions.emplace_back(primes[i], support.fraction);
      rows.push_back(fpchain::to_json(support));
      sum += support.fraction;
    }
    json j = fpchain::to_json(report);
    j["support"] = std::move(rows);
    if (count > 0) j["mean_fraction"] = sum / static_cast<double>(count);
    set_result(out, j);
  });
}

fpc_status fpc_expsum(const fpc_expsum_request* request, fpc_result** out) {
  return guard([&] {
    require(request, "request");
    require(out, "out");
    require(request->kind, "kind");
    const fpchain::PrimeField field(request->p);
    const std::string_view kind = request->kind;
    const auto need_map = [&] {
      require(request->map, "map");
      return fpchain::build_total_map(request->map, field);
    };
    const auto need_family = [&](const char* text, const char* what) {
      require(text, what);
      return fpchain::parse_family(text, field);
    };
    const auto k = field.reduce(request->k);
    json j;
    if (kind == "weil") {
      j = fpchain::to_json(fpchain::weil_record(need_map(), field.reduce(request->alpha), k));
    } else if (kind == "avg") {
      const auto f = need_map();
      const fpchain::Interval interval{field.reduce_unsigned(request->interval_start), request->interval_length};
      j = fpchain::to_json(fpchain::averaged_square_record(f, k, interval));
      if (request->exact != 0) {
        const auto exact = fpchain::averaged_square_sum_exact(f, k, interval);
        j["exact_is_integer"] = exact.is_integer;
        if (exact.is_integer) j["exact_value"] = exact.value;
      }
    } else if (kind == "family") {
      j = fpchain::to_json(fpchain::family_square_sum(need_map(), k, need_family(request->family, "family")));
    } else if (kind == "linear") {
      j = fpchain::to_json(fpchain::linear_family_sum(need_family(request->family, "family")));
    } else if (kind == "count") {
      const double eps = request->epsilon > 0.0 ? request->epsilon : 0.1;
      j = fpchain::to_json(fpchain::count_solutions(need_map(), need_family(request->family, "family"),
                                                    need_family(request->family2, "family2"), eps));
    } else {
      fpchain::fail(ErrorCode::InvalidArgument, "kind must be weil, avg, family, linear or count");
    }
    set_result(out, j);
  });
}

fpc_status fpc_sweep(const char* config_path, int allow_empty, fpc_result** out) {
  return guard([&] {
    require(config_path, "config_path");
    require(out, "out");
    const auto config = fpchain::load_config(config_path);
    const auto rows = fpchain::run_experiment(config);
    std::size_t errors = 0;
    for (const auto& r : rows) errors += r.is_error();
    json paths = json::array();
    if (!rows.empty() || allow_empty != 0) {
      const auto dir = fpchain::resolve_output_dir(config);
      for (const auto& f : config.formats) {
        paths.push_back(fpchain::emit_report(rows, fpchain::parse_report_format(f), dir, config.id, true).string());
      }
    }
    set_result(out, json{{"rows", rows.size()},
                         {"error_rows", errors},
                         {"paths", std::move(paths)},
                         {"config_hash", config.config_hash}});
  });
}

}  // extern "C"
