#include "gsflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "gsflow/error.hpp"

namespace gsflow {
namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write '" + path.string() + "'");
  return os;
}

// Shortest round-trip formatting keeps CSVs byte-identical across runs.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Json finite_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const HypothesisReport& r) {
  return Json{{"kpp", r.kpp},
              {"kpp_min_margin", r.kpp_min_margin},
              {"concave_near_zero", r.concave_near_zero},
              {"concavity_analytic", r.concavity_analytic},
              {"concavity_radius", finite_or_null(r.concavity_radius)},
              {"max_second_difference", r.max_second_difference},
              {"negative_F", r.negative_F},
              {"F_min", r.F_min},
              {"F_argmin", r.F_argmin},
              {"subcritical", r.subcritical},
              {"critical_exponent", finite_or_null(r.critical_exponent)}};
}

Json to_json(const DecayReport& r) {
  return Json{{"r_lo", r.r_lo},         {"r_hi", r.r_hi},           {"nodes", r.nodes},
              {"band_min", r.band_min}, {"band_max", r.band_max},   {"band_width", r.band_width()},
              {"ratio_min", r.ratio_min}, {"ratio_max", r.ratio_max}};
}

Json to_json(const Sample& s) {
  return Json{{"t", s.t},   {"J", s.J},     {"rate", s.rate}, {"dissipation", s.dissipation},
              {"sup", s.sup}, {"l2", s.l2}};
}

Json to_json(const LinearFit& f) {
  return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}, {"points", f.points}};
}

Json to_json(const FitResult& f) {
  return Json{{"M", f.bubble.M},
              {"centers", f.bubble.centers},
              {"weights", f.bubble.weights},
              {"gamma", f.gamma},
              {"u_norm", f.u_norm},
              {"relative_gamma", f.u_norm > 0.0 ? f.gamma / f.u_norm : 0.0},
              {"nu", f.nu},
              {"nu_from_g", f.nu_from_g},
              {"rho_l2", f.rho_l2},
              {"rho_h1", f.rho_h1},
              {"ortho_translation", f.ortho_translation},
              {"ortho_xi", f.ortho_xi},
              {"alpha_decoupled", f.alpha_decoupled},
              {"weight_condition", f.weight_condition},
              {"u_energy", f.u_energy},
              {"reference_energy", f.reference_energy},
              {"deficit", f.deficit},
              {"iterations", f.iterations},
              {"starts", f.starts},
              {"warnings", f.warnings}};
}

Json to_json(const DeficitReport& r) {
  return Json{{"deficit", r.deficit},         {"dudt_norm", r.dudt_norm},
              {"ratio_a", finite_or_null(r.ratio_a)}, {"lhs_b", r.lhs_b},
              {"alpha_term", r.alpha_term},   {"nu_term", r.nu_term},
              {"rho_l2", r.rho_l2},           {"rho_h1", r.rho_h1},
              {"ratio_b_rho", finite_or_null(r.ratio_b_rho)},
              {"ratio_b_dudt", finite_or_null(r.ratio_b_dudt)},
              {"quad_form", r.quad_form},     {"ratio_c", finite_or_null(r.ratio_c)},
              {"degenerate_a", r.degenerate_a}, {"degenerate_b", r.degenerate_b},
              {"degenerate_c", r.degenerate_c}};
}

Json to_json(const SpectralReport& r) {
  Json lines = Json::array();
  for (const auto& l : r.lines) {
    lines.push_back(Json{{"lambda", l.lambda}, {"ell", l.ell}, {"multiplicity", l.multiplicity}});
  }
  Json j{{"eigenvalues", r.eigenvalues},
         {"lines", lines},
         {"n_negative", r.n_negative},
         {"kernel_dim", r.kernel_dim},
         {"kernel_tol", r.kernel_tol},
         {"kernel_residual", r.kernel_residual},
         {"q_xi_prime_xi_prime", r.q_xi_prime_xi_prime},
         {"q_xi_prime_xi", r.q_xi_prime_xi},
         {"identity_max_rel_err", r.identity_max_rel_err},
         {"iterations", r.iterations}};
  if (r.coercivity_computed) j["coercivity_constant"] = r.coercivity_constant;
  return j;
}

Json to_json(const CoercivityReport& r) {
  return Json{{"constant", r.constant},
              {"sector_min", r.sector_min},
              {"trial_min", r.trial_min},
              {"trials_used", r.trials_used},
              {"trials_dropped", r.trials_dropped}};
}

Json to_json(const Probe& p) {
  return Json{{"alpha", p.alpha},
              {"event", to_string(p.event)},
              {"event_time", p.event_time},
              {"horizon", p.horizon},
              {"final_midpoint", p.final_midpoint}};
}

Json to_json(const ProfileCheck& c) {
  return Json{{"plateau_time", c.plateau_time},
              {"plateau_rate", c.plateau_rate},
              {"gamma", c.gamma},
              {"u_norm", c.u_norm},
              {"relative_gamma", c.relative_gamma},
              {"center", c.center},
              {"center_drift", c.center_drift},
              {"success", c.success}};
}

Json to_json(const SeparationCert& c) {
  return Json{{"points", c.points},
              {"y_index", c.y_index},
              {"y", c.y},
              {"e", c.e},
              {"D", c.D},
              {"D_proof", c.D_proof},
              {"D_apriori", c.D_apriori},
              {"D2", c.D2},
              {"L", c.L},
              {"Lprime", c.Lprime},
              {"ratios", c.ratios},
              {"verified", verify_cert(c)}};
}

Json to_json(const Measurement& m) {
  Json j{{"name", m.name}, {"value", finite_or_null(m.value)}, {"relation", m.relation}};
  if (m.relation == "in") {
    j["bound"] = Json::array({m.bound, m.bound_hi});
  } else {
    j["bound"] = m.bound;
  }
  j["pass"] = m.pass;
  return j;
}

Json to_json(const CriterionResult& r) {
  Json ms = Json::array();
  for (const auto& m : r.measurements) ms.push_back(to_json(m));
  Json j{{"id", r.id},
         {"name", r.name},
         {"pass", r.pass},
         {"seconds", r.seconds},
         {"budget_seconds", r.budget_seconds},
         {"measurements", ms}};
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

void write_json(const std::filesystem::path& path, Json doc, const std::string& config_hash) {
  doc["config_hash"] = config_hash;
  auto os = open_out(path);
  os << doc.dump(2) << '\n';
}

void write_history_csv(const std::filesystem::path& path, const std::vector<Sample>& history,
                       const std::string& config_hash) {
  auto os = open_out(path);
  os << "# config_hash=" << config_hash << '\n' << "t,J,rate,dissipation,sup,l2\n";
  for (const auto& s : history) {
    os << num(s.t) << ',' << num(s.J) << ',' << num(s.rate) << ',' << num(s.dissipation) << ','
       << num(s.sup) << ',' << num(s.l2) << '\n';
  }
}

void write_profile_csv(const std::filesystem::path& path, const RadialProfile& p,
                       const std::string& config_hash) {
  auto os = open_out(path);
  os << "# config_hash=" << config_hash << '\n'
     << "# n=" << p.n << " h=" << num(p.h) << " xi0=" << num(p.shoot_parameter) << '\n'
     << "r,xi,dxi\n";
  for (std::size_t i = 0; i < p.size(); ++i) {
    os << num(p.r[i]) << ',' << num(p.xi[i]) << ',' << num(p.dxi[i]) << '\n';
  }
}

void write_field_csv(const std::filesystem::path& path, const RadialField& u,
                     const std::string& config_hash) {
  auto os = open_out(path);
  write_csv(u, os, "config_hash=" + config_hash);
}

void write_field_csv(const std::filesystem::path& path, const Field& u,
                     const std::string& config_hash) {
  auto os = open_out(path);
  write_slice_csv(u, os, "config_hash=" + config_hash);
}

}  // namespace gsflow
