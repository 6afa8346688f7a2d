#include "diqkd/resources.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "diqkd/errors.hpp"

namespace diqkd::resources {

namespace {

using linalg::Complex;

// Each Pauli matrix has one nonzero per row: row r -> (column, value).
struct SparsePauli {
    std::array<int, 2> col;
    std::array<Complex, 2> val;
};

const std::array<SparsePauli, 3>& sparse_paulis() {
    static const std::array<SparsePauli, 3> table{{
        {{1, 0}, {Complex(1, 0), Complex(1, 0)}},
        {{1, 0}, {Complex(0, -1), Complex(0, 1)}},
        {{0, 1}, {Complex(1, 0), Complex(-1, 0)}},
    }};
    return table;
}

void require_two_qubit(const ComplexMatrix& rho) {
    require(rho.dim() == 4, "expected a two-qubit density matrix (dim 4)");
}

}  // namespace

double negativity(const ComplexMatrix& rho, const linalg::JacobiOptions& options) {
    require_two_qubit(rho);
    const auto spectrum = linalg::hermitian_eigenvalues(linalg::partial_transpose(rho, linalg::Subsystem::B), options);
    double sum = 0.0;
    for (double v : spectrum.values)
        if (v < 0.0) sum += v;
    return std::abs(sum);
}

double negativity(const ComplexMatrix& rho) { return negativity(rho, linalg::JacobiOptions{}); }

double log_negativity_from(double n) noexcept { return std::log2(2.0 * n + 1.0); }

double log_negativity(const ComplexMatrix& rho) { return log_negativity_from(negativity(rho)); }

RealMatrix3 correlation_matrix(const ComplexMatrix& rho) {
    require_two_qubit(rho);
    const auto& ps = sparse_paulis();
    RealMatrix3 t;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const SparsePauli& a = ps[static_cast<std::size_t>(i)];
            const SparsePauli& b = ps[static_cast<std::size_t>(j)];
            Complex tr{0.0, 0.0};
            // Tr(M rho) = sum_r M[r, c(r)] rho[c(r), r]
            for (int ra = 0; ra < 2; ++ra)
                for (int rb = 0; rb < 2; ++rb) {
                    const int row = 2 * ra + rb;
                    const int col = 2 * a.col[static_cast<std::size_t>(ra)] + b.col[static_cast<std::size_t>(rb)];
                    tr += a.val[static_cast<std::size_t>(ra)] * b.val[static_cast<std::size_t>(rb)] * rho(col, row);
                }
            if (std::abs(tr.imag()) > kImaginaryResidueTolerance) {
                std::ostringstream msg;
                msg << "correlation_matrix: t_" << i << j << " has imaginary residue " << tr.imag();
                throw NumericIntegrityError(msg.str());
            }
            t(i, j) = tr.real();
        }
    }
    return t;
}

double chsh_from_singular(double s1, double s2) noexcept {
    return std::min(kTsirelson, 2.0 * std::sqrt(s1 * s1 + s2 * s2));
}

double chsh_value(const ComplexMatrix& rho) {
    const auto sv = linalg::singular_values_3x3(correlation_matrix(rho));
    return chsh_from_singular(sv[0], sv[1]);
}

ResourceReport analyze(const ComplexMatrix& rho, const linalg::JacobiOptions& options) {
    ResourceReport r;
    r.negativity = negativity(rho, options);
    r.log_negativity = log_negativity_from(r.negativity);
    r.correlation = correlation_matrix(rho);
    const auto sv = linalg::singular_values_3x3(r.correlation);
    r.sv_top2 = {sv[0], sv[1]};
    r.chsh_value = chsh_from_singular(sv[0], sv[1]);
    r.is_entangled = r.negativity > kEntangledThreshold;
    r.is_bell_nonlocal = r.chsh_value > 2.0 + kBellThreshold;
    return r;
}

ResourceReport analyze(const ComplexMatrix& rho) { return analyze(rho, linalg::JacobiOptions{}); }

}  // namespace diqkd::resources
