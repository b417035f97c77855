/*
 * verify.hpp -- the acceptance suite as library code.
 *
 * Each check reduces to a list of metrics, every one carrying its tolerance and
 * the oracle it is compared against:
 *
 *     le    value <= tolerance                 (errors, z-scores)
 *     near  |value - reference| <= tolerance   (fitted exponents, exact values)
 *     ge    value >= reference - tolerance      (positivity, determinant bounds)
 *
 * A check passes when all its metrics pass. Monte Carlo checks that fail are run
 * once more with twice the samples before the failure is reported.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cg {

struct Metric {
    std::string name;
    double value = 0.0;
    double reference = 0.0;
    double tolerance = 0.0;
    std::string relation = "le";  // le | near | ge
    std::string oracle;
    bool pass() const;
};

struct CheckResult {
    std::string id, title;
    bool monte_carlo = false;
    int attempts = 1;
    std::vector<Metric> metrics;
    std::string error;  // numerical failure, if any
    bool pass() const;
};

struct VerifyOptions {
    std::uint64_t seed = 20240917;
    double sample_scale = 1.0;  // multiplies every Monte Carlo sample count
    std::vector<std::string> only;  // ids to run; empty = all
};

CheckResult check_selberg_quadrature(const VerifyOptions& o);   // A1
CheckResult check_expansion(const VerifyOptions& o);            // A2
CheckResult check_operator_roundtrips(const VerifyOptions& o);  // A3
CheckResult check_pullback(const VerifyOptions& o);             // A4
CheckResult check_clt(const VerifyOptions& o);                  // A5
CheckResult check_fredholm_identity(const VerifyOptions& o);    // A6
CheckResult check_phase_expectation(const VerifyOptions& o);    // A7
CheckResult check_loop_equation(const VerifyOptions& o);        // A8
CheckResult check_concentration(const VerifyOptions& o);        // A9

std::vector<std::string> verify_ids();
// one check by id, with the Monte Carlo retry policy applied
CheckResult run_check(const std::string& id, const VerifyOptions& o);
std::vector<CheckResult> verify_suite(const VerifyOptions& o);

}  // namespace cg
