#pragma once

// Machine-readable output: JSON documents and CSV tables, each stamped with
// the hash of the configuration that produced it.

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "gsflow/bubbles.hpp"
#include "gsflow/flow.hpp"
#include "gsflow/geometry.hpp"
#include "gsflow/ground_state.hpp"
#include "gsflow/reaction.hpp"
#include "gsflow/spectral.hpp"
#include "gsflow/threshold.hpp"
#include "gsflow/verify.hpp"

namespace gsflow {

using Json = nlohmann::ordered_json;

Json to_json(const HypothesisReport& r);
Json to_json(const DecayReport& r);
Json to_json(const Sample& s);
Json to_json(const LinearFit& f);
Json to_json(const FitResult& f);
Json to_json(const DeficitReport& r);
Json to_json(const SpectralReport& r);
Json to_json(const CoercivityReport& r);
Json to_json(const Probe& p);
Json to_json(const ProfileCheck& c);
Json to_json(const SeparationCert& c);
Json to_json(const Measurement& m);
Json to_json(const CriterionResult& r);

template <class F>
Json threshold_json(const ThresholdResult<F>& r, const std::string& run_log) {
  Json probes = Json::array();
  for (const auto& p : r.probes) probes.push_back(to_json(p));
  return Json{{"alpha_lo", r.alpha_lo},
              {"alpha_hi", r.alpha_hi},
              {"width", r.width()},
              {"expansions", r.expansions},
              {"ordering_consistent", ordering_consistent(r.probes)},
              {"probes", probes},
              {"run_log", run_log}};
}

// Adds "config_hash" and writes with two-space indentation.
void write_json(const std::filesystem::path& path, Json doc, const std::string& config_hash);

// Run log: t, J, rate, dissipation, sup, l2.
void write_history_csv(const std::filesystem::path& path, const std::vector<Sample>& history,
                       const std::string& config_hash);
// Profile: r, xi, xi'.
void write_profile_csv(const std::filesystem::path& path, const RadialProfile& p,
                       const std::string& config_hash);
void write_field_csv(const std::filesystem::path& path, const RadialField& u,
                     const std::string& config_hash);
void write_field_csv(const std::filesystem::path& path, const Field& u,
                     const std::string& config_hash);

}  // namespace gsflow
