#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace pqc {

/// Runs one `pqc` invocation. `args` excludes the program name. Returns the
/// exit code: 0 success, 1 the analysis found a qualification failure or a
/// non-converged run, 2 usage or input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pqc
