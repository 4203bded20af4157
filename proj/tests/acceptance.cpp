// Runs every acceptance criterion and prints one line per criterion.
// Exit status 1 when any criterion fails.

#include <cstdio>
#include <cstdlib>

#include "gsflow/verify.hpp"

int main(int argc, char** argv) {
  gsflow::VerifyOptions opt;
  for (int id = 1; id <= 11; ++id) opt.criteria.push_back(id);
  if (argc > 1) {
    opt.criteria.clear();
    for (int k = 1; k < argc; ++k) opt.criteria.push_back(std::atoi(argv[k]));
  }
  bool ok = true;
  gsflow::run_criteria(opt, [&ok](const gsflow::CriterionResult& r) {
    std::printf("%s\n", gsflow::summary_line(r).c_str());
    std::fflush(stdout);
    ok = ok && r.pass;
  });
  return ok ? 0 : 1;
}
