#pragma once

// Reduced-scale invariant suites over every module, for `diqkd verify`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diqkd/linalg.hpp"

namespace diqkd::verify {

enum class Fault { none, eigen_tolerance };

struct VerifyOptions {
    bool quick = false;
    Fault fault = Fault::none;
    std::uint64_t seed = 20240601;
};

struct SuiteResult {
    std::string name;
    bool passed = true;
    std::uint64_t checks = 0;
    std::string counterexample;  // first failure, empty when passed
    double seconds = 0.0;
};

struct VerifyReport {
    std::vector<SuiteResult> suites;

    [[nodiscard]] bool passed() const noexcept;
    [[nodiscard]] const SuiteResult* first_failure() const noexcept;
};

/// Suite names in run order; `quick` selects the subset.
std::vector<std::string> suite_names(bool quick);

/// Jacobi options the suites use under a given fault.
linalg::JacobiOptions jacobi_options(Fault fault) noexcept;

/// Runs the suites, printing one pass/fail line per suite to `log`.
VerifyReport run_verify(const VerifyOptions& options, std::ostream& log);

Fault parse_fault(const std::string& name);

}  // namespace diqkd::verify
