#pragma once

// Closed-form state families (pure Schmidt states, Werner states, real
// rank-2 mixtures) with their negativity parameterizations and key-rate
// displays, plus the pure/Werner envelope test for arbitrary states.
//
// Bare logarithms in the key-rate displays are natural logs with the
// normalizing denominators written out, evaluated term by term as printed.

#include <optional>
#include <string_view>
#include <vector>

#include "diqkd/keyrate.hpp"

namespace diqkd::families {

using keyrate::Attack;
using linalg::ComplexMatrix;
using stategen::TwoQubitState;

inline constexpr double kEnvelopeEpsilon = 1e-9;
inline constexpr double kConstraintTolerance = 1e-10;
inline constexpr double kPremiseTolerance = 1e-9;

struct PureFamilyParam {
    double theta = 0.0;  // [0, pi/2]
};

struct WernerFamilyParam {
    double p = 0.0;  // [0, 1]
};

/// p1 |psi1><psi1| + (1 - p1) |psi2><psi2| with
/// psi1 = alpha|0 eta1> + beta|1 eta2>, psi2 = alpha|0 eta1'> + beta|1 eta2'>,
/// eta1 = (a, b), eta2 = (a', b'), eta' = (-b, a) the orthogonal partner.
/// beta, b, b' are the non-negative completions to unit norm.
struct Rank2FamilyParam {
    double p1 = 0.0;       // [0, 1]
    double alpha = 0.0;    // [0, 1]
    double a = 0.0;        // [-1, 1]
    double a_prime = 0.0;  // [-1, 1]

    [[nodiscard]] double beta() const;
    [[nodiscard]] double b() const;
    [[nodiscard]] double b_prime() const;
    /// a b' - a' b; the closed key-rate forms need this to vanish.
    [[nodiscard]] double constraint_residual() const;
};

enum class Branch { low, high };  // p1 < 1/2, p1 > 1/2

TwoQubitState pure_state_matrix(PureFamilyParam param);
TwoQubitState werner_state_matrix(WernerFamilyParam param);
TwoQubitState rank2_state_matrix(const Rank2FamilyParam& param);

double pure_negativity(PureFamilyParam param);
double werner_negativity(WernerFamilyParam param);
/// Branch formulas in x = 4 alpha^2 beta^2 (a'b - ab')^2 (2 p1 - 1);
/// N = 0 at p1 = 1/2 by continuity.
double rank2_negativity(const Rank2FamilyParam& param);

/// Inverts rank2_negativity on one branch. The achievable range on either
/// branch is [0, sqrt(k)] with k = alpha^2 beta^2 (a'b - ab')^2; outside it,
/// or for k = 0 where N does not depend on p1, throws DomainError.
double rank2_p_from_negativity(double n, double alpha, double a, double a_prime, Branch branch);

namespace printed {
/// Low-branch inversion exactly as displayed, (N^2 - k) / (N - 2k). It does
/// not invert the low-branch negativity; kept for comparison.
double rank2_p_low_branch(double n, double alpha, double a, double a_prime);
}  // namespace printed

/// Pure-state key rate as a function of negativity, n in [0, 1/2].
double pure_keyrate(double n, Attack attack);
/// Werner-state key rate; CA is empty where -7 + 16N + 32N^2 < 0.
std::optional<double> werner_keyrate(double n, Attack attack);

/// Rank-2 key rate under ab' = a'b (DomainError if the residual exceeds
/// 1e-10). OSCA uses the p1 display; the CA display exists only in terms of
/// N, which the constraint maps to p1 one-to-one, so it is evaluated at
/// N = p1. Empty when a square root or log argument leaves the real domain.
std::optional<double> rank2_keyrate(const Rank2FamilyParam& param, Attack attack);
std::optional<double> rank2_keyrate(double n, double alpha, double a, double a_prime, Attack attack);

struct EnvelopeVerdict {
    double negativity = 0.0;
    double r_state = 0.0;
    double r_pure_at_n = 0.0;
    double r_werner_at_n = 0.0;  // 0 where the Werner CA form is undefined
    bool inside = false;
    Attack attack = Attack::osca;
};

/// Requires S > 2 and a positive raw rate for the attack (ContractViolation).
EnvelopeVerdict envelope_check(const ComplexMatrix& rho, Attack attack);
inline EnvelopeVerdict envelope_check(const TwoQubitState& s, Attack attack) { return envelope_check(s.rho, attack); }
/// Same verdict from an already computed negativity and raw state rate.
EnvelopeVerdict envelope_verdict(double negativity, double r_state, Attack attack);

enum class Family { pure, werner, rank2 };
std::string_view family_name(Family f) noexcept;

struct SweepRow {
    Family family = Family::pure;
    Attack attack = Attack::osca;
    double negativity = 0.0;  // pipeline negativity of the swept state
    std::optional<double> closed_form;
    std::optional<double> pipeline;
    std::optional<double> abs_diff;  // when both rates are defined
    double param = 0.0;              // theta (pure), p (Werner), p1 (rank-2)
    std::optional<double> alpha, a, a_prime, constraint_residual;
    /// Rank-2 only: whether the printed QBER expression equals the
    /// singular-value QBER at this point (|s1 + s2 - |X|| <= 1e-9).
    std::optional<bool> premise_holds;
};

/// Grid k * step over [lo, hi], endpoints inclusive.
std::vector<double> grid(double lo, double hi, double step);

/// Pure and Werner sweeps run over the negativity grid on [0, 1/2]. The
/// rank-2 sweep runs over (p1, alpha, a) with a' = a, so ab' = a'b.
std::vector<SweepRow> sweep(Family family, Attack attack, double step);

}  // namespace diqkd::families
