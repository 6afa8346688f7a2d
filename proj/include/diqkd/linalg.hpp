#pragma once

// Dense complex/real linear algebra sized for two-qubit problems and the
// ancilla spaces used to induce mixed states (total dimension <= 16).

#include <array>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace diqkd::linalg {

using Complex = std::complex<double>;

inline constexpr int kMaxDim = 16;
inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kJacobiTolerance = 1e-13;
inline constexpr int kJacobiMaxSweeps = 64;

/// Convergence once the off-diagonal Frobenius norm drops below
/// tolerance * max(1, ||A||_F).
struct JacobiOptions {
    double tolerance = kJacobiTolerance;
    int max_sweeps = kJacobiMaxSweeps;
};

/// Square complex matrix, row-major, 1 <= dim <= 16.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    explicit ComplexMatrix(int dim);
    ComplexMatrix(int dim, std::vector<Complex> entries);

    static ComplexMatrix identity(int dim);
    /// |v><v| for an arbitrary (not necessarily normalized) vector.
    static ComplexMatrix projector(std::span<const Complex> v);
    static ComplexMatrix diagonal(std::span<const double> d);

    [[nodiscard]] int dim() const noexcept { return dim_; }
    Complex& operator()(int row, int col) noexcept { return entries_[static_cast<std::size_t>(row * dim_ + col)]; }
    const Complex& operator()(int row, int col) const noexcept {
        return entries_[static_cast<std::size_t>(row * dim_ + col)];
    }
    [[nodiscard]] std::span<const Complex> entries() const noexcept { return entries_; }

    [[nodiscard]] Complex trace() const noexcept;
    [[nodiscard]] ComplexMatrix adjoint() const;
    [[nodiscard]] bool is_hermitian(double tol = kHermitianTolerance) const noexcept;
    [[nodiscard]] double max_abs_diff(const ComplexMatrix& other) const;

    ComplexMatrix& operator+=(const ComplexMatrix& rhs);
    ComplexMatrix& operator-=(const ComplexMatrix& rhs);
    ComplexMatrix& operator*=(Complex scale) noexcept;

    friend ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs += rhs; }
    friend ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs -= rhs; }
    friend ComplexMatrix operator*(ComplexMatrix lhs, Complex scale) { return lhs *= scale; }
    friend ComplexMatrix operator*(Complex scale, ComplexMatrix rhs) { return rhs *= scale; }
    friend ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs);

private:
    int dim_ = 0;
    std::vector<Complex> entries_;
};

/// 3x3 real matrix (correlation matrices).
class RealMatrix3 {
public:
    RealMatrix3() = default;
    explicit RealMatrix3(const std::array<double, 9>& row_major) : entries_(row_major) {}

    static RealMatrix3 diagonal(double d0, double d1, double d2);

    double& operator()(int row, int col) noexcept { return entries_[static_cast<std::size_t>(row * 3 + col)]; }
    double operator()(int row, int col) const noexcept { return entries_[static_cast<std::size_t>(row * 3 + col)]; }
    [[nodiscard]] const std::array<double, 9>& entries() const noexcept { return entries_; }
    [[nodiscard]] RealMatrix3 transpose() const noexcept;
    [[nodiscard]] double trace() const noexcept { return entries_[0] + entries_[4] + entries_[8]; }

    friend RealMatrix3 operator*(const RealMatrix3& lhs, const RealMatrix3& rhs) noexcept;
    friend bool operator==(const RealMatrix3&, const RealMatrix3&) = default;

private:
    std::array<double, 9> entries_{};
};

enum class SpectrumKind { eigenvalues, singular_values };

/// Real spectrum in descending order.
struct Spectrum {
    std::vector<double> values;
    SpectrumKind kind = SpectrumKind::eigenvalues;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    double operator[](std::size_t i) const noexcept { return values[i]; }
    [[nodiscard]] double sum() const noexcept;
};

struct Eigensystem {
    Spectrum spectrum;
    ComplexMatrix vectors;  // column k pairs with spectrum[k]
};

/// Cyclic complex Jacobi. Throws ContractViolation for non-Hermitian input
/// (beyond kHermitianTolerance entrywise) and NumericIntegrityError if the
/// sweep budget is exhausted.
Spectrum hermitian_eigenvalues(const ComplexMatrix& m);
Spectrum hermitian_eigenvalues(const ComplexMatrix& m, const JacobiOptions& options);
Eigensystem hermitian_eigensystem(const ComplexMatrix& m);

/// Real symmetric 3x3 eigenvalues by the same Jacobi iteration.
Spectrum symmetric_eigenvalues(const RealMatrix3& m);

enum class Subsystem { A, B };

/// Partial transpose of a 2x2 composite (dim 4).
ComplexMatrix partial_transpose(const ComplexMatrix& rho, Subsystem which);

/// Reduced matrix over the subsystems listed in `keep` (ascending order is
/// preserved in the output ordering). prod(dims) must equal rho.dim().
ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> dims, std::span<const int> keep);

/// Singular values via eigenvalues of T^T T, negative rounding clamped to 0.
Spectrum singular_values_3x3(const RealMatrix3& t);

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b);

/// Pauli basis: 0 = identity, 1 = x, 2 = y, 3 = z.
const ComplexMatrix& pauli(int index);

}  // namespace diqkd::linalg
