#pragma once

// Entanglement (negativity, logarithmic negativity) and Bell-CHSH
// nonlocality of two-qubit states.

#include <array>

#include "diqkd/linalg.hpp"
#include "diqkd/stategen.hpp"

namespace diqkd::resources {

using linalg::ComplexMatrix;
using linalg::RealMatrix3;
using stategen::TwoQubitState;

inline constexpr double kEntangledThreshold = 1e-9;
inline constexpr double kBellThreshold = 1e-12;  // nonlocal iff S > 2 + this
inline constexpr double kImaginaryResidueTolerance = 1e-10;
inline constexpr double kTsirelson = 2.8284271247461900976;

struct ResourceReport {
    double negativity = 0.0;
    double log_negativity = 0.0;
    double chsh_value = 0.0;
    std::array<double, 2> sv_top2{};
    bool is_entangled = false;
    bool is_bell_nonlocal = false;
    RealMatrix3 correlation;
};

/// |sum of negative eigenvalues| of the partial transpose over B.
double negativity(const ComplexMatrix& rho);
double negativity(const ComplexMatrix& rho, const linalg::JacobiOptions& options);
double log_negativity_from(double negativity) noexcept;
double log_negativity(const ComplexMatrix& rho);

/// t_ij = Tr[(s_i (x) s_j) rho], Pauli order (x, y, z). Throws
/// NumericIntegrityError if any trace has imaginary part above 1e-10.
RealMatrix3 correlation_matrix(const ComplexMatrix& rho);

/// Horodecki value 2 sqrt(s1^2 + s2^2) from the two largest singular values.
double chsh_from_singular(double s1, double s2) noexcept;
double chsh_value(const ComplexMatrix& rho);

ResourceReport analyze(const ComplexMatrix& rho);
ResourceReport analyze(const ComplexMatrix& rho, const linalg::JacobiOptions& options);

inline double negativity(const TwoQubitState& s) { return negativity(s.rho); }
inline double log_negativity(const TwoQubitState& s) { return log_negativity(s.rho); }
inline RealMatrix3 correlation_matrix(const TwoQubitState& s) { return correlation_matrix(s.rho); }
inline double chsh_value(const TwoQubitState& s) { return chsh_value(s.rho); }
inline ResourceReport analyze(const TwoQubitState& s) { return analyze(s.rho); }

}  // namespace diqkd::resources
