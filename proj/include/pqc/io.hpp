#pragma once

#include <string>

#include "pqc/error.hpp"
#include "pqc/model.hpp"
#include "pqc/qualification.hpp"
#include "pqc/scanner.hpp"

namespace pqc {

/// Problem document:
///   {"name": str, "num_vars": int, "objective": poly?, "inequalities": [poly],
///    "equalities": [poly]?, "perturbable": [int]?, "sample_box": [[lo, hi]]?,
///    "description": str?, "provenance": str?}
/// with poly = {"terms": [{"coef": float, "exps": [int]}]} and 1-based
/// perturbable indices. Errors carry the JSON pointer of the offending field.
ProblemInstance parse_problem(const std::string& text);
ProblemInstance parse_problem_file(const std::string& path);

std::string problem_to_json(const ProblemInstance& prob, const std::string& description = "",
                            const std::string& provenance = "");

std::string scan_report_to_json(const ScanReport& report);
ScanReport scan_report_from_json(const std::string& text);

std::string certificate_to_json(const MfcqCertificate& cert);
std::string sweep_to_json(const SweepReport& report);

}  // namespace pqc
