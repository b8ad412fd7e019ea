#include "iongate/io.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace iongate {

namespace {

using nlohmann::json;

template <class Vector>
json array(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

FidelityConvention parse_convention(const std::string& text) {
  if (text == "half_displacement") return FidelityConvention::half_displacement;
  if (text == "full_displacement") return FidelityConvention::full_displacement;
  throw std::invalid_argument("unknown fidelity convention '" + text + "'");
}

}  // namespace

json to_json(const Crystal& crystal) {
  json vectors = json::array();
  json local = json::array();
  for (int k = 0; k < crystal.size(); ++k) {
    vectors.push_back(array(crystal.modes.vectors.col(k)));
    local.push_back(local_frequency(crystal, k));
  }
  return {{"n", crystal.size()},
          {"positions", array(crystal.positions)},
          {"mode_eigenvalues", array(crystal.modes.eigenvalues)},
          {"mode_vectors", vectors},
          {"local_frequencies", local}};
}

json to_json(const GateOutcome& outcome) {
  return {{"alpha_i_re", array(outcome.alpha_i.real())},
          {"alpha_i_im", array(outcome.alpha_i.imag())},
          {"alpha_j_re", array(outcome.alpha_j.real())},
          {"alpha_j_im", array(outcome.alpha_j.imag())},
          {"phi_per_mode", array(outcome.phi_per_mode)},
          {"phi_total", outcome.phi_total},
          {"fidelity", outcome.fidelity},
          {"amp_scale", outcome.amp_scale},
          {"required_amp", outcome.required_amp}};
}

json to_json(const OptimizeResult& result) {
  return {{"amps", array(result.amps)},
          {"fidelity", result.fidelity},
          {"mu", result.mu},
          {"tau_over_tau0", result.tau / kTau0},
          {"segments", result.segments},
          {"scope", result.scope}};
}

json to_json(const OracleReport& report) {
  json trace = json::array();
  for (const auto& step : report.trace) {
    trace.push_back({{"cutoff", step.cutoff}, {"fidelity", step.fidelity}});
  }
  return {{"fidelity_numeric", report.fidelity_numeric},
          {"fidelity_analytic", report.fidelity_analytic},
          {"fidelity_half_displacement", report.fidelity_half},
          {"abs_difference", report.abs_difference},
          {"phase_numeric", report.phase_numeric},
          {"phase_analytic", report.phase_analytic},
          {"converged", report.converged},
          {"trace", trace}};
}

json to_json(const SweepSpec& spec) {
  return {{"ions", spec.ions},
          {"pair", std::to_string(spec.pair.i + 1) + "," + std::to_string(spec.pair.j + 1)},
          {"taus", spec.taus},
          {"mu_min", spec.mu_min},
          {"mu_max", spec.mu_max},
          {"points", spec.points},
          {"segments", spec.segments},
          {"nbar", spec.nbar},
          {"scope", spec.neighbors ? "n=" + std::to_string(*spec.neighbors) : "full"},
          {"refine", spec.refine},
          {"convention", to_string(spec.convention)},
          {"threads", spec.threads},
          {"output", spec.output}};
}

SweepSpec sweep_spec_from_json(const json& config, SweepSpec base) {
  if (!config.is_object()) throw std::invalid_argument("sweep config must be a JSON object");
  std::string pair;
  for (const auto& [key, value] : config.items()) {
    if (key == "ions") base.ions = value.get<int>();
    else if (key == "pair") pair = value.get<std::string>();
    else if (key == "taus") base.taus = value.get<std::vector<double>>();
    else if (key == "mu_min") base.mu_min = value.get<double>();
    else if (key == "mu_max") base.mu_max = value.get<double>();
    else if (key == "points") base.points = value.get<int>();
    else if (key == "segments") base.segments = value.get<int>();
    else if (key == "nbar") base.nbar = value.get<double>();
    else if (key == "scope") base.neighbors = parse_scope(value.get<std::string>());
    else if (key == "refine") base.refine = value.get<bool>();
    else if (key == "convention") base.convention = parse_convention(value.get<std::string>());
    else if (key == "threads") base.threads = value.get<int>();
    else if (key == "output") base.output = value.get<std::string>();
    else throw std::invalid_argument("unknown sweep config key '" + key + "'");
  }
  // The pair is checked against the final ion count.
  if (!pair.empty()) base.pair = parse_pair(pair, base.ions);
  return base;
}

}  // namespace iongate
