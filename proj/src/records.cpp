#include "fpchain/records.hpp"

namespace fpchain {

using nlohmann::json;

std::string rational_string(const mpq_class& q) {
  mpq_class c(q);
  c.canonicalize();
  if (c.get_den() == 1) return c.get_num().get_str();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

json to_json(const Distribution& dist) {
  json out;
  if (dist.mode() == Distribution::Mode::Exact) {
    out["mode"] = "exact";
    json weights = json::array();
    for (const auto& w : dist.exact_weights()) weights.push_back(rational_string(w));
    out["weights"] = std::move(weights);
  } else {
    out["mode"] = "float";
    out["weights"] = dist.float_weights();
  }
  out["support"] = dist.support();
  return out;
}

json to_json(const ExpSumRecord& record) {
  return json{{"kind", record.kind},
              {"p", record.p},
              {"k", record.k},
              {"lhs_value", record.lhs_value},
              {"bound_form", record.bound_form},
              {"bound_without_constant", record.bound_without_constant},
              {"empirical_constant", record.empirical_constant}};
}

json to_json(const SolutionCount& count) {
  return json{{"count", count.count},
              {"size_s", count.size_s},
              {"size_s2", count.size_s2},
              {"expected", count.expected},
              {"ratio", count.ratio},
              {"epsilon", count.epsilon},
              {"regime_lhs", count.regime_lhs},
              {"regime_rhs", count.regime_rhs},
              {"in_regime", count.in_regime}};
}

json to_json(const ComposedSumReport& report) {
  return json{{"record", to_json(report.record)},
              {"twists_checked", report.twists_checked},
              {"max_twisted_ratio", report.max_twisted_ratio}};
}

json to_json(const SubsetCertificate& cert) {
  return json{{"subset", cert.subset},
              {"flow", rational_string(cert.flow)},
              {"ratio", rational_string(cert.ratio)},
              {"ratio_decimal", cert.ratio.get_d()},
              {"edge_count", cert.edge_count}};
}

json to_json(const APDecomposition& dec) {
  json blocks = json::array();
  for (const auto& b : dec.blocks) blocks.push_back(json{{"start", b.start}, {"length", b.length}});
  return json{{"delta", dec.delta}, {"blocks", std::move(blocks)}, {"symmetric", dec.symmetric}};
}

json to_json(const MixingReport& report) {
  return json{{"epsilon", report.epsilon},
              {"t_mix", report.t_mix},
              {"start_states", report.start_states},
              {"final_tv", report.tv_trajectory.empty() ? 0.0 : report.tv_trajectory.back()}};
}

json to_json(const SupportFraction& support) {
  return json{{"p", support.p},
              {"gamma", support.gamma},
              {"support_size", support.support_size},
              {"classes", support.recurrent_classes},
              {"fraction", rational_string(mpq_class(support.support_size, support.p))},
              {"fraction_decimal", support.fraction}};
}

json to_json(const ConjectureReport& report) {
  json fractions = json::array();
  for (const auto& [p, f] : report.fractions) fractions.push_back(json{{"p", p}, {"fraction", f}});
  return json{{"alpha", report.alpha},
              {"limit", report.limit},
              {"residual", report.residual},
              {"fractions", std::move(fractions)}};
}

json to_json(const TvBoundCheck& check) {
  return json{{"h", check.h},
              {"max_log_inv_pi", check.max_log_inv_pi},
              {"c", check.c},
              {"steps", check.steps},
              {"max_tv", check.max_tv},
              {"threshold", check.threshold},
              {"passed", check.passed}};
}

}  // namespace fpchain
