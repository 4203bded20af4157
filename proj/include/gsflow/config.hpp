#pragma once

// Experiment configuration: flat INI text with sections. Every key is
// optional with a documented default; unknown sections or keys are rejected
// so typos surface as usage errors.
//
//   [task]         name
//   [nonlinearity] a0, terms ("coeff:exponent, ..."), holder_beta
//   [problem]      dimension, geometry (radial | cartesian)
//   [grid]         R, h
//   [shoot]        r_max, h, tol
//   [flow]         dt, T, scheme, sample_stride, blowup_cap, vanish_sup,
//                  vanish_energy, conv_tol, fit_times, rate_window
//   [initial]      kind (ground_state | gaussian | bubbles), scale, width,
//                  centers ("x y z; x y z"), weights
//   [fit]          M, max_iter, opt_tol
//   [spectrum]     k, max_ell, trials
//   [threshold]    lo, hi, tol, relative, T
//   [separate]     instances, max_points, max_dim, directions, neighborhood
//   [verify]       criteria ("1,2,...,11" or "all"), flow_h
//   [run]          seed, threads

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gsflow/flow.hpp"
#include "gsflow/reaction.hpp"

namespace gsflow {

class Config {
 public:
  static Config load(const std::string& path);
  static Config parse(const std::string& text, const std::string& origin = "<string>");

  std::string get(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  int get(const std::string& key, int fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get(const std::string& key, bool fallback) const;
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value);

  // Canonical "section.key=value" lines in sorted order, and its SHA-256.
  std::string canonical() const;
  std::string hash() const;

  const std::string& origin() const { return origin_; }

 private:
  std::map<std::string, std::string> values_;  // "section.key" -> raw value
  std::string origin_;
};

// Parsed views used by the subcommands. All throw ConfigError on bad values.
Nonlinearity nonlinearity_from(const Config& c);
FlowOptions flow_options_from(const Config& c);
std::vector<double> parse_list(const std::string& text);
std::vector<std::vector<double>> parse_points(const std::string& text);
std::vector<int> parse_criteria(const std::string& text);

}  // namespace gsflow
