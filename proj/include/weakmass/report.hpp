#pragma once

#include <json.hpp>

#include "weakmass/pipeline.hpp"

namespace weakmass {

inline nlohmann::ordered_json to_json(const G0Estimate& e) {
  nlohmann::ordered_json j;
  j["g0_hat"] = e.g0_hat;
  j["stderr"] = e.std_error;
  j["z_score"] = std::isfinite(e.z_score) ? nlohmann::ordered_json(e.z_score) : nlohmann::ordered_json(nullptr);
  j["detectability"] = e.detectable;
  j["reference_class"] = e.reference_class;
  return j;
}

inline nlohmann::ordered_json to_json(const PipelineResult& r) {
  nlohmann::ordered_json j;
  j["g0"] = r.groups.g0;
  j["omega_k_t"] = r.groups.omega_k_t;
  j["g0_omega_k_t"] = r.groups.g0_omega_k_t;
  if (r.groups.physical) {
    const auto& d = *r.groups.physical;
    j["physical"] = {{"omega_k_hz", d.omega_k}, {"g0_t_s", d.g0_t}, {"t_sim", d.t_sim},
                     {"gbar_sim", d.gbar_sim}, {"delta_sim", d.delta_sim}};
  }
  const auto& w = r.internal.weak_value;
  j["weak_value"] = {{"re", std::isfinite(w.re) ? nlohmann::ordered_json(w.re) : nlohmann::ordered_json(nullptr)},
                     {"im", std::isfinite(w.im) ? nlohmann::ordered_json(w.im) : nlohmann::ordered_json(nullptr)},
                     {"p_s0", w.p_s0},
                     {"near_singular", w.near_singular}};
  j["internal"] = {{"alpha_re", r.internal.initial.amp_g().real()}, {"alpha_im", r.internal.initial.amp_g().imag()},
                   {"beta_re", r.internal.initial.amp_e().real()},  {"beta_im", r.internal.initial.amp_e().imag()},
                   {"theta", r.internal.selection.theta},           {"omega_t", r.internal.omega_t}};
  j["n_max"] = r.spectrum.n_max();
  j["P_s_first_order"] = r.first_order.p_s;
  j["P_s_exact"] = r.exact.p_s;
  j["flags"] = {{"breakdown", r.first_order.breakdown}, {"outside_validity", r.first_order.outside_validity}};
  if (r.estimate) j["estimate"] = to_json(*r.estimate);
  j["warnings"] = r.warnings;
  j["exit_code"] = r.exit_code;
  return j;
}

}  // namespace weakmass
