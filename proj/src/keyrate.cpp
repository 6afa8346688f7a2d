#include "diqkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diqkd/errors.hpp"

namespace diqkd::keyrate {

namespace {

double xlog2x(double x) noexcept { return x > 0.0 ? x * std::log2(x) : 0.0; }

void require_qber(double q) {
    require(q >= -kEntropyClampTolerance && q <= 0.5 + kEntropyClampTolerance, "QBER must lie in [0, 1/2]");
}

}  // namespace

std::string_view attack_name(Attack a) noexcept { return a == Attack::ca ? "ca" : "osca"; }

std::string_view counting_rule_name(CountingRule r) noexcept {
    return r == CountingRule::require_chsh ? "require-chsh" : "raw";
}

double binary_entropy(double q) {
    if (!(q >= -kEntropyClampTolerance && q <= 1.0 + kEntropyClampTolerance)) {
        std::ostringstream msg;
        msg << "binary_entropy: argument " << q << " outside [0, 1]";
        throw ContractViolation(msg.str());
    }
    q = std::clamp(q, 0.0, 1.0);
    return -xlog2x(q) - xlog2x(1.0 - q);
}

double qber_from_singular(double s1, double s2) noexcept {
    return std::clamp(0.25 * (2.0 - std::abs(s1) - std::abs(s2)), 0.0, 0.5);
}

double qber(const linalg::ComplexMatrix& rho) {
    const auto sv = linalg::singular_values_3x3(resources::correlation_matrix(rho));
    return qber_from_singular(sv[0], sv[1]);
}

double qber_consistency(double s1, double s2) {
    const double s = resources::chsh_from_singular(s1, s2);
    const double via_chsh = 0.5 * (1.0 - std::sqrt(s * s / 16.0 + std::abs(s1) * std::abs(s2) / 2.0));
    const double direct = qber_from_singular(s1, s2);
    if (!(std::abs(via_chsh - direct) <= kQberAgreementTolerance)) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "QBER mismatch: singular-value form " << direct << " vs CHSH form " << via_chsh;
        throw NumericIntegrityError(msg.str());
    }
    return via_chsh;
}

double qber_consistency(const linalg::ComplexMatrix& rho) {
    const auto sv = linalg::singular_values_3x3(resources::correlation_matrix(rho));
    return qber_consistency(sv[0], sv[1]);
}

std::optional<double> r_cmin(double q, double s) {
    require_qber(q);
    if (!(s >= 2.0)) return std::nullopt;
    const double half = std::min(s, resources::kTsirelson) / 2.0;
    const double root = std::sqrt(std::max(0.0, half * half - 1.0));
    return 1.0 - binary_entropy(q) - binary_entropy(std::min(1.0, (1.0 + root) / 2.0));
}

double r_smin(double q) {
    require_qber(q);
    q = std::clamp(q, 0.0, 0.5);
    return 1.0 + 2.0 * xlog2x(1.0 - q) + 2.0 * xlog2x(q);
}

KeyRateReport evaluate(const resources::ResourceReport& res, CountingRule rule) {
    KeyRateReport k;
    k.qber = qber_from_singular(res.sv_top2[0], res.sv_top2[1]);
    qber_consistency(res.sv_top2[0], res.sv_top2[1]);
    k.s_value = res.chsh_value;
    k.r_smin_raw = r_smin(k.qber);
    k.r_cmin_raw = r_cmin(k.qber, k.s_value);
    k.ca_defined = k.r_cmin_raw.has_value();
    k.r_smin = std::max(0.0, k.r_smin_raw);
    k.r_cmin = k.ca_defined ? std::max(0.0, *k.r_cmin_raw) : 0.0;
    const bool chsh_ok = rule == CountingRule::raw_rate_only || res.is_bell_nonlocal;
    k.positive_osca = chsh_ok && k.r_smin_raw > 0.0;
    k.positive_ca = chsh_ok && k.ca_defined && *k.r_cmin_raw > 0.0;
    return k;
}

KeyRateReport evaluate(const linalg::ComplexMatrix& rho, CountingRule rule) {
    return evaluate(resources::analyze(rho), rule);
}

}  // namespace diqkd::keyrate
