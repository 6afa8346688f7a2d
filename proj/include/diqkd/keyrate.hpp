#pragma once

// QBER and device-independent key-rate bounds under collective attacks (CA,
// depends on Q and S) and optimal symmetric collective attacks (OSCA,
// depends on Q only).

#include <optional>
#include <string_view>

#include "diqkd/resources.hpp"

namespace diqkd::keyrate {

enum class Attack { ca, osca };
std::string_view attack_name(Attack a) noexcept;

/// require_chsh: a key-positive state must also violate CHSH.
/// raw_rate_only: the sign of the raw rate decides alone.
enum class CountingRule { require_chsh, raw_rate_only };
std::string_view counting_rule_name(CountingRule r) noexcept;

inline constexpr double kEntropyClampTolerance = 1e-12;
inline constexpr double kQberAgreementTolerance = 1e-8;

struct KeyRateReport {
    double qber = 0.0;
    double s_value = 0.0;
    std::optional<double> r_cmin_raw;  // empty when S < 2
    double r_smin_raw = 0.0;
    double r_cmin = 0.0;
    double r_smin = 0.0;
    bool ca_defined = false;
    bool positive_ca = false;
    bool positive_osca = false;

    [[nodiscard]] std::optional<double> raw(Attack a) const {
        return a == Attack::ca ? r_cmin_raw : std::optional<double>(r_smin_raw);
    }
    [[nodiscard]] bool positive(Attack a) const noexcept { return a == Attack::ca ? positive_ca : positive_osca; }
};

/// -q log2 q - (1-q) log2 (1-q) with 0 log 0 = 0. Inputs within 1e-12 of
/// [0, 1] are clamped; anything further out is a ContractViolation.
double binary_entropy(double q);

/// (2 - |s1| - |s2|) / 4 from the two largest singular values of T.
double qber_from_singular(double s1, double s2) noexcept;
double qber(const linalg::ComplexMatrix& rho);

/// (1 - sqrt(S^2/16 + |s1||s2|/2)) / 2, checked against qber_from_singular;
/// a mismatch beyond 1e-8 raises NumericIntegrityError.
double qber_consistency(double s1, double s2);
double qber_consistency(const linalg::ComplexMatrix& rho);

/// 1 - h(q) - h((1 + sqrt((s/2)^2 - 1)) / 2); empty for s < 2.
std::optional<double> r_cmin(double q, double s);
/// 1 + 2(1 - q) log2(1 - q) + 2 q log2 q.
double r_smin(double q);

KeyRateReport evaluate(const resources::ResourceReport& res, CountingRule rule = CountingRule::require_chsh);
KeyRateReport evaluate(const linalg::ComplexMatrix& rho, CountingRule rule = CountingRule::require_chsh);
inline KeyRateReport evaluate(const stategen::TwoQubitState& s, CountingRule rule = CountingRule::require_chsh) {
    return evaluate(s.rho, rule);
}

}  // namespace diqkd::keyrate
