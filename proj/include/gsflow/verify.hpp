#pragma once

// The acceptance suite: eleven numbered checks, each returning a measured
// value next to its pinned tolerance.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace gsflow {

struct Measurement {
  std::string name;
  double value = 0.0;
  std::string relation;  // "<=", ">=", "<", ">", "==", "in"
  double bound = 0.0;
  double bound_hi = 0.0;  // for "in"
  bool pass = false;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<Measurement> measurements;
  std::string error;  // set when the check threw
};

struct VerifyOptions {
  std::vector<int> criteria;  // ids in 1..11; empty is a usage error
  int threads = 1;
  std::uint64_t seed = 1;
  double flow_h = 1e-2;       // grid step of the flow criteria (3, 4)
  bool enforce_budget = true;
};

std::string criterion_name(int id);
CriterionResult run_criterion(int id, const VerifyOptions& opt);

// Runs the selected criteria on up to opt.threads workers; results come back
// in id order regardless of completion order. `done` (if set) is called once
// per finished criterion, serialized.
std::vector<CriterionResult> run_criteria(const VerifyOptions& opt,
                                          const std::function<void(const CriterionResult&)>& done = {});

// "PASS  3 dissipation identity  (1.2 s)  residual=1.9e-06 <= 1e-03 ..."
std::string summary_line(const CriterionResult& r);

}  // namespace gsflow
