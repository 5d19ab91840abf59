#pragma once

#include <gmpxx.h>

#include <string>

#include "json.hpp"

#include "fpchain/cheeger.hpp"
#include "fpchain/expsum.hpp"
#include "fpchain/stationary.hpp"

namespace fpchain {

/// "num/den" in lowest terms, or "num" for integers.
std::string rational_string(const mpq_class& q);

/// Exact weights as "num/den" strings, float weights as numbers.
nlohmann::json to_json(const Distribution& dist);
nlohmann::json to_json(const ExpSumRecord& record);
nlohmann::json to_json(const SolutionCount& count);
nlohmann::json to_json(const ComposedSumReport& report);
nlohmann::json to_json(const SubsetCertificate& cert);
nlohmann::json to_json(const APDecomposition& dec);
nlohmann::json to_json(const MixingReport& report);
nlohmann::json to_json(const SupportFraction& support);
nlohmann::json to_json(const ConjectureReport& report);
nlohmann::json to_json(const TvBoundCheck& check);

}  // namespace fpchain
