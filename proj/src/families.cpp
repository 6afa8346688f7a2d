#include "diqkd/families.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diqkd/errors.hpp"

namespace diqkd::families {

namespace {

using linalg::Complex;

constexpr double kRangeTolerance = 1e-12;

// x log(y), with the x -> 0 limit taken as 0.
double xlog(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }
double xlogx(double x) { return xlog(x, x); }

double completion(double x) { return std::sqrt(std::max(0.0, 1.0 - x * x)); }

void require_in(double v, double lo, double hi, const char* what) {
    if (!(v >= lo - kRangeTolerance && v <= hi + kRangeTolerance)) {
        std::ostringstream msg;
        msg << what << " = " << v << " outside [" << lo << ", " << hi << "]";
        throw ContractViolation(msg.str());
    }
}

void require_param(const Rank2FamilyParam& p) {
    require_in(p.p1, 0.0, 1.0, "p1");
    require_in(p.alpha, 0.0, 1.0, "alpha");
    require_in(p.a, -1.0, 1.0, "a");
    require_in(p.a_prime, -1.0, 1.0, "a'");
}

double clamp_negativity(double n) {
    require_in(n, 0.0, 0.5, "negativity");
    return std::clamp(n, 0.0, 0.5);
}

// alpha^2 beta^2 (a'b - ab')^2
double rank2_k(double alpha, double a, double a_prime) {
    const Rank2FamilyParam p{0.5, alpha, a, a_prime};
    const double r = p.constraint_residual();
    return alpha * alpha * p.beta() * p.beta() * r * r;
}

// (1 - 2 p1)(alpha^2 (b^2 - a^2) + beta^2 (a'^2 - b'^2) - y'), whose modulus the
// printed rank-2 QBER uses in place of |s1| + |s2|.
double rank2_printed_x(const Rank2FamilyParam& p) {
    const double al = p.alpha, be = p.beta(), a = p.a, b = p.b(), ap = p.a_prime, bp = p.b_prime();
    const double y_prime = 2.0 * al * be * (ap * b + a * bp);
    return (1.0 - 2.0 * p.p1) * (al * al * (b * b - a * a) + be * be * (ap * ap - bp * bp) - y_prime);
}

void require_constraint(double alpha, double a, double a_prime) {
    const Rank2FamilyParam p{0.5, alpha, a, a_prime};
    const double r = p.constraint_residual();
    if (!(std::abs(r) <= kConstraintTolerance)) {
        std::ostringstream msg;
        msg << "rank-2 closed form requires ab' = a'b; residual " << r;
        throw DomainError(msg.str());
    }
}

std::optional<double> raw_rate(const keyrate::KeyRateReport& k, Attack attack) { return k.raw(attack); }

}  // namespace

double Rank2FamilyParam::beta() const { return completion(alpha); }
double Rank2FamilyParam::b() const { return completion(a); }
double Rank2FamilyParam::b_prime() const { return completion(a_prime); }
double Rank2FamilyParam::constraint_residual() const { return a * b_prime() - a_prime * b(); }

TwoQubitState pure_state_matrix(PureFamilyParam param) {
    require_in(param.theta, 0.0, std::acos(0.0), "theta");
    const double c = std::cos(param.theta / 2.0);
    const double s = std::sin(param.theta / 2.0);
    const Complex psi[4] = {c, 0.0, 0.0, s};
    return TwoQubitState{ComplexMatrix::projector(psi), 1};
}

TwoQubitState werner_state_matrix(WernerFamilyParam param) {
    require_in(param.p, 0.0, 1.0, "p");
    const double p = param.p;
    const double d = (1.0 + p) / 4.0, o = (1.0 - p) / 4.0, c = p / 2.0;
    ComplexMatrix rho(4, {d, 0, 0, c, 0, o, 0, 0, 0, 0, o, 0, c, 0, 0, d});
    return TwoQubitState{rho, 4};
}

TwoQubitState rank2_state_matrix(const Rank2FamilyParam& p) {
    require_param(p);
    const double al = p.alpha, be = p.beta();
    const double eta1[2] = {p.a, p.b()};
    const double eta2[2] = {p.a_prime, p.b_prime()};
    const double eta1p[2] = {-eta1[1], eta1[0]};
    const double eta2p[2] = {-eta2[1], eta2[0]};
    const Complex psi1[4] = {al * eta1[0], al * eta1[1], be * eta2[0], be * eta2[1]};
    const Complex psi2[4] = {al * eta1p[0], al * eta1p[1], be * eta2p[0], be * eta2p[1]};
    ComplexMatrix rho = ComplexMatrix::projector(psi1) * Complex(p.p1);
    rho += ComplexMatrix::projector(psi2) * Complex(1.0 - p.p1);
    return TwoQubitState{rho, 2};
}

double pure_negativity(PureFamilyParam param) { return std::sin(param.theta) / 2.0; }

double werner_negativity(WernerFamilyParam param) { return std::max(0.0, (3.0 * param.p - 1.0) / 4.0); }

double rank2_negativity(const Rank2FamilyParam& p) {
    require_param(p);
    const double r = p.constraint_residual();
    const double x = 4.0 * p.alpha * p.alpha * p.beta() * p.beta() * r * r * (2.0 * p.p1 - 1.0);
    if (p.p1 < 0.5) return 0.5 * (std::sqrt(p.p1 * p.p1 - x) - p.p1);
    if (p.p1 > 0.5) return 0.5 * (std::sqrt((1.0 - p.p1) * (1.0 - p.p1) + x) - (1.0 - p.p1));
    return 0.0;
}

double rank2_p_from_negativity(double n, double alpha, double a, double a_prime, Branch branch) {
    require_param(Rank2FamilyParam{0.5, alpha, a, a_prime});
    const double k = rank2_k(alpha, a, a_prime);
    if (!(k > 0.0)) throw DomainError("rank-2 negativity does not depend on p1 when alpha beta (a'b - ab') = 0");
    const double n_max = std::sqrt(k);
    if (!(n >= -kRangeTolerance && n <= n_max + kRangeTolerance)) {
        std::ostringstream msg;
        msg << "negativity " << n << " outside the achievable range [0, " << n_max << "]";
        throw DomainError(msg.str());
    }
    n = std::clamp(n, 0.0, n_max);
    if (branch == Branch::low) return (k - n * n) / (n + 2.0 * k);
    return (n * (n + 1.0) + k) / (2.0 * k + n);
}

double printed::rank2_p_low_branch(double n, double alpha, double a, double a_prime) {
    const double k = rank2_k(alpha, a, a_prime);
    return (n * n - k) / (n - 2.0 * k);
}

double pure_keyrate(double n, Attack attack) {
    n = clamp_negativity(n);
    if (attack == Attack::osca)
        return (-std::log(64.0) + xlogx(1.0 - 2.0 * n) + xlogx(3.0 + 2.0 * n)) / std::log(4.0);
    return (-8.0 * std::log(2.0) + xlogx(3.0 + 2.0 * n) + xlog(3.0 - 6.0 * n, 1.0 - 2.0 * n) +
            xlog(2.0 + 4.0 * n, 1.0 + 2.0 * n)) /
           std::log(16.0);
}

std::optional<double> werner_keyrate(double n, Attack attack) {
    n = clamp_negativity(n);
    if (attack == Attack::osca)
        return (std::log(8.0) + xlog(2.0 - 4.0 * n, (1.0 - 2.0 * n) / 3.0) +
                xlog(4.0 * (1.0 + n), 2.0 * (1.0 + n) / 3.0)) /
               std::log(8.0);
    const double delta2 = -7.0 + 16.0 * n + 32.0 * n * n;
    if (delta2 < 0.0) return std::nullopt;
    const double delta = std::sqrt(delta2);
    return (-12.0 * std::log(3.0) + 2.0 * xlogx(1.0 - 2.0 * n) + xlog(4.0 + 4.0 * n, 2.0 + 2.0 * n) +
            xlogx(3.0 - delta) + xlogx(3.0 + delta)) /
           (6.0 * std::log(2.0));
}

std::optional<double> rank2_keyrate(const Rank2FamilyParam& param, Attack attack) {
    require_param(param);
    require_constraint(param.alpha, param.a, param.a_prime);
    if (attack == Attack::ca) return rank2_keyrate(param.p1, param.alpha, param.a, param.a_prime, Attack::ca);
    const double x = rank2_printed_x(param);
    return (xlog(x + 2.0, (x + 2.0) / 4.0) + xlog(2.0 - x, (2.0 - x) / 4.0) + std::log(4.0)) / (2.0 * std::log(2.0));
}

std::optional<double> rank2_keyrate(double n, double alpha, double a, double a_prime, Attack attack) {
    require_param(Rank2FamilyParam{0.5, alpha, a, a_prime});
    require_in(n, 0.0, 1.0, "negativity");
    require_constraint(alpha, a, a_prime);
    const Rank2FamilyParam p{0.5, alpha, a, a_prime};
    const double al = alpha, be = p.beta(), b = p.b(), ap = a_prime, bp = p.b_prime();
    const double m = 1.0 - 2.0 * n;
    const double omega = m * ((b * b - a * a) * al * al - 4.0 * b * al * be * ap + be * be * (ap * ap - bp * bp));
    if (attack == Attack::osca)
        return (std::log(4.0) + xlog(2.0 - omega, (2.0 - omega) / 4.0) + xlog(2.0 + omega, (2.0 + omega) / 4.0)) /
               (2.0 * std::log(2.0));

    const double f1 = 2.0 * a * b * al * al + be * be + 2.0 * al * be * b * bp - 2.0 * ap * (a * al * be + be * be * bp);
    const double f2 = -2.0 * a * b * al * al + be * be - 2.0 * b * bp * al * be + 2.0 * ap * (a * al * be + bp * be * be);
    const double g = (b * b - a * a) * al * al + (ap * ap - bp * bp) * (ap * ap - bp * bp) * be * be;
    const double delta = 2.0 * m * m * (f1 * f2 + g);
    if (delta < 1.0 || delta > 2.0) return std::nullopt;
    const double r = std::sqrt(delta - 1.0);
    return (-2.0 * std::log(16.0) + xlogx(2.0 - omega) + xlogx(2.0 + omega) + 2.0 * xlogx(1.0 + r) +
            2.0 * xlogx(1.0 - r)) /
           std::log(16.0);
}

EnvelopeVerdict envelope_verdict(double negativity, double r_state, Attack attack) {
    EnvelopeVerdict v;
    v.attack = attack;
    v.negativity = negativity;
    v.r_state = r_state;
    const double n = std::clamp(negativity, 0.0, 0.5);
    v.r_pure_at_n = pure_keyrate(n, attack);
    v.r_werner_at_n = werner_keyrate(n, attack).value_or(0.0);
    v.inside = v.r_werner_at_n - kEnvelopeEpsilon <= r_state && r_state <= v.r_pure_at_n + kEnvelopeEpsilon;
    return v;
}

EnvelopeVerdict envelope_check(const ComplexMatrix& rho, Attack attack) {
    const auto res = resources::analyze(rho);
    const auto k = keyrate::evaluate(res, keyrate::CountingRule::raw_rate_only);
    const auto r = raw_rate(k, attack);
    require(res.chsh_value > 2.0 && r.has_value() && *r > 0.0,
            "envelope_check: state must violate CHSH and have a positive raw key rate");
    return envelope_verdict(res.negativity, *r, attack);
}

std::string_view family_name(Family f) noexcept {
    switch (f) {
        case Family::pure: return "pure";
        case Family::werner: return "werner";
        case Family::rank2: return "rank2";
    }
    return "unknown";
}

std::vector<double> grid(double lo, double hi, double step) {
    require(step > 0.0 && std::isfinite(step), "grid step must be positive");
    require(hi >= lo, "grid bounds must be ordered");
    const auto intervals = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    std::vector<double> g;
    g.reserve(static_cast<std::size_t>(intervals + 2));
    for (long i = 0; i <= intervals; ++i) g.push_back(std::min(hi, lo + static_cast<double>(i) * step));
    if (hi - g.back() > 1e-12) g.push_back(hi);
    return g;
}

namespace {

void fill_pipeline(SweepRow& row, const ComplexMatrix& rho, Attack attack) {
    const auto res = resources::analyze(rho);
    const auto k = keyrate::evaluate(res, keyrate::CountingRule::raw_rate_only);
    row.negativity = res.negativity;
    row.pipeline = raw_rate(k, attack);
    if (row.closed_form && row.pipeline) row.abs_diff = std::abs(*row.closed_form - *row.pipeline);
}

void fill_premise(SweepRow& row, const Rank2FamilyParam& p, const ComplexMatrix& rho) {
    const auto sv = linalg::singular_values_3x3(resources::correlation_matrix(rho));
    row.premise_holds = std::abs(sv[0] + sv[1] - std::abs(rank2_printed_x(p))) <= kPremiseTolerance;
}

}  // namespace

std::vector<SweepRow> sweep(Family family, Attack attack, double step) {
    std::vector<SweepRow> rows;
    if (family == Family::rank2) {
        const auto ps = grid(0.0, 1.0, step);
        const auto as = grid(-1.0, 1.0, step);
        rows.reserve(ps.size() * ps.size() * as.size());
        for (double p1 : ps)
            for (double alpha : ps)
                for (double a : as) {
                    const Rank2FamilyParam param{p1, alpha, a, a};
                    SweepRow row;
                    row.family = family;
                    row.attack = attack;
                    row.param = p1;
                    row.alpha = alpha;
                    row.a = a;
                    row.a_prime = a;
                    row.constraint_residual = param.constraint_residual();
                    row.closed_form = rank2_keyrate(param, attack);
                    const ComplexMatrix rho = rank2_state_matrix(param).rho;
                    fill_pipeline(row, rho, attack);
                    fill_premise(row, param, rho);
                    rows.push_back(row);
                }
        return rows;
    }
    for (double n : grid(0.0, 0.5, step)) {
        SweepRow row;
        row.family = family;
        row.attack = attack;
        ComplexMatrix rho;
        if (family == Family::pure) {
            row.param = std::asin(std::min(1.0, 2.0 * n));
            row.closed_form = pure_keyrate(n, attack);
            rho = pure_state_matrix({row.param}).rho;
        } else {
            row.param = std::min(1.0, (4.0 * n + 1.0) / 3.0);
            row.closed_form = werner_keyrate(n, attack);
            rho = werner_state_matrix({row.param}).rho;
        }
        fill_pipeline(row, rho, attack);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace diqkd::families
