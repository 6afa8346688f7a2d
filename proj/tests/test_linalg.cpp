#include <cmath>
#include <random>

#include "diqkd/errors.hpp"
#include "diqkd/linalg.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace diqkd;
using namespace diqkd::linalg;

namespace {

double max_abs(const ComplexMatrix& m) {
    double v = 0;
    for (auto x : m.entries()) v = std::max(v, std::abs(x));
    return v;
}

}  // namespace

TEST_CASE("eigenvalues of simple matrices") {
    const double d[] = {1, 0, 0, 0};
    const auto s = hermitian_eigenvalues(ComplexMatrix::diagonal(d));
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(s[i] - d[i]) < 1e-15);

    const auto mixed = hermitian_eigenvalues(oracle::maximally_mixed());
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(mixed[i] - 0.25) < 1e-15);

    // PT of |phi+><phi+| is the swap operator / 2: block diag(1/2, [[0,1/2],[1/2,0]], 1/2).
    const auto pt = hermitian_eigenvalues(partial_transpose(oracle::bell_phi_plus(), Subsystem::B));
    const double expected[] = {0.5, 0.5, 0.5, -0.5};
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(pt[i] - expected[i]) < 1e-14);
    CHECK(pt.kind == SpectrumKind::eigenvalues);
}

TEST_CASE("eigenpairs reconstruct the matrix") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 15;
        const ComplexMatrix m = oracle::random_hermitian(rng, n);
        const Eigensystem es = hermitian_eigensystem(m);
        for (int k = 0; k < n; ++k) {
            double resid2 = 0;
            for (int r = 0; r < n; ++r) {
                Complex mv = 0;
                for (int c = 0; c < n; ++c) mv += m(r, c) * es.vectors(c, k);
                resid2 += std::norm(mv - es.spectrum[static_cast<std::size_t>(k)] * es.vectors(r, k));
            }
            CHECK(std::sqrt(resid2) <= 1e-10);
        }
        for (std::size_t k = 1; k < es.spectrum.size(); ++k) CHECK(es.spectrum[k - 1] >= es.spectrum[k]);
    }
}

TEST_CASE("eigenvalue sum and product match trace and determinant") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + trial % 15;
        const ComplexMatrix m = oracle::random_hermitian(rng, n);
        const Spectrum s = hermitian_eigenvalues(m);
        CHECK(std::abs(s.sum() - m.trace().real()) <= 1e-9);
        double prod = 1.0;
        for (double v : s.values) prod *= v;
        const double det = oracle::determinant(m).real();
        CHECK(std::abs(prod - det) <= 1e-6 * std::max(1.0, std::abs(det)));
    }
}

TEST_CASE("eigensolver rejects non-Hermitian input") {
    ComplexMatrix m(3);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(hermitian_eigenvalues(m), ContractViolation);
    m(1, 0) = 1.0 + 1e-9;
    CHECK_THROWS_AS(hermitian_eigenvalues(m), ContractViolation);
    m(1, 0) = 1.0 + 1e-13;
    CHECK_NOTHROW(hermitian_eigenvalues(m));
    CHECK_THROWS_AS(hermitian_eigenvalues(ComplexMatrix(17)), ContractViolation);
}

TEST_CASE("exhausted sweep budget is a numeric integrity failure") {
    std::mt19937_64 rng(13);
    const ComplexMatrix m = oracle::random_hermitian(rng, 4);
    CHECK_THROWS_AS(hermitian_eigenvalues(m, JacobiOptions{kJacobiTolerance, 0}), NumericIntegrityError);
}

TEST_CASE("partial transpose") {
    const ComplexMatrix p00 = oracle::basis_projector(0);
    CHECK(partial_transpose(p00, Subsystem::A).max_abs_diff(p00) == 0.0);
    CHECK(partial_transpose(p00, Subsystem::B).max_abs_diff(p00) == 0.0);
    CHECK_THROWS_AS(partial_transpose(ComplexMatrix(8), Subsystem::A), ContractViolation);

    const auto bell = hermitian_eigenvalues(partial_transpose(oracle::bell_phi_plus(), Subsystem::A));
    CHECK(std::abs(bell[3] + 0.5) < 1e-14);

    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const auto v = oracle::gaussian_vector(rng, 4);
        ComplexMatrix rho = ComplexMatrix::projector(v);
        rho *= 1.0 / rho.trace().real();
        for (Subsystem s : {Subsystem::A, Subsystem::B}) {
            const ComplexMatrix pt = partial_transpose(rho, s);
            CHECK(partial_transpose(pt, s).max_abs_diff(rho) == 0.0);
            CHECK(pt.is_hermitian(1e-12));
            CHECK(std::abs(pt.trace() - rho.trace()) <= 1e-12);
        }
        const auto sa = hermitian_eigenvalues(partial_transpose(rho, Subsystem::A));
        const auto sb = hermitian_eigenvalues(partial_transpose(rho, Subsystem::B));
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(sa[i] - sb[i]) < 1e-12);
    }
}

TEST_CASE("partial trace") {
    const int dims2[] = {2, 2};
    const int keep_a[] = {0};
    const ComplexMatrix half = partial_trace(oracle::bell_phi_plus(), dims2, keep_a);
    CHECK(half.max_abs_diff(ComplexMatrix::identity(2) * Complex(0.5)) < 1e-15);

    const int dims3[] = {2, 2, 2};
    const int keep_ab[] = {0, 1};
    const ComplexMatrix reduced = partial_trace(oracle::basis_projector(0, 8), dims3, keep_ab);
    CHECK(reduced.max_abs_diff(oracle::basis_projector(0)) == 0.0);

    const int bad_dims[] = {2, 3};
    CHECK_THROWS_AS(partial_trace(ComplexMatrix(4), bad_dims, keep_a), ContractViolation);
    const int bad_keep[] = {2};
    CHECK_THROWS_AS(partial_trace(ComplexMatrix(4), dims2, bad_keep), ContractViolation);

    std::mt19937_64 rng(15);
    const int keep_bc[] = {1, 2};
    const int dims_q[] = {3, 2, 2};
    const int dims_4[] = {2, 2, 2, 2};
    const int keep_cd[] = {2, 3};
    for (int trial = 0; trial < 100; ++trial) {
        const auto v8 = oracle::gaussian_vector(rng, 8);
        ComplexMatrix rho8 = ComplexMatrix::projector(v8);
        rho8 *= 1.0 / rho8.trace().real();
        const ComplexMatrix r = partial_trace(rho8, dims3, keep_bc);
        CHECK(std::abs(r.trace() - 1.0) <= 1e-12);
        CHECK(r.is_hermitian(1e-12));
        CHECK(hermitian_eigenvalues(r)[3] >= -1e-10);

        const auto v12 = oracle::gaussian_vector(rng, 12);
        ComplexMatrix rho12 = ComplexMatrix::projector(v12);
        rho12 *= 1.0 / rho12.trace().real();
        CHECK(std::abs(partial_trace(rho12, dims_q, keep_bc).trace() - 1.0) <= 1e-12);

        const auto v16 = oracle::gaussian_vector(rng, 16);
        ComplexMatrix rho16 = ComplexMatrix::projector(v16);
        rho16 *= 1.0 / rho16.trace().real();
        const ComplexMatrix r16 = partial_trace(rho16, dims_4, keep_cd);
        CHECK(std::abs(r16.trace() - 1.0) <= 1e-12);
        CHECK(hermitian_eigenvalues(r16)[3] >= -1e-10);

        // Single-qubit marginal of the reduced state.
        const ComplexMatrix q = partial_trace(r16, dims2, keep_a);
        CHECK(std::abs(q.trace() - 1.0) <= 1e-12);
        CHECK(hermitian_eigenvalues(q)[1] >= -1e-10);
    }
}

TEST_CASE("singular values of 3x3 matrices") {
    auto sv = singular_values_3x3(RealMatrix3::diagonal(1, -1, 1));
    CHECK(sv.kind == SpectrumKind::singular_values);
    for (double v : sv.values) CHECK(std::abs(v - 1.0) < 1e-15);
    sv = singular_values_3x3(RealMatrix3::diagonal(0.6, -0.6, 0.6));
    for (double v : sv.values) CHECK(std::abs(v - 0.6) < 1e-15);
    sv = singular_values_3x3(RealMatrix3{});
    for (double v : sv.values) CHECK(v == 0.0);

    // Outer products keep the vanishing singular values at rounding level.
    std::mt19937_64 orng(17);
    std::uniform_real_distribution<double> ou(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        double x[3], y[3];
        for (int i = 0; i < 3; ++i) {
            x[i] = ou(orng);
            y[i] = ou(orng);
        }
        RealMatrix3 t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t(i, j) = x[i] * y[j];
        const Spectrum s = singular_values_3x3(t);
        const double expect = std::hypot(x[0], x[1], x[2]) * std::hypot(y[0], y[1], y[2]);
        CHECK(std::abs(s[0] - expect) <= 1e-14);
        CHECK(s[1] <= 1e-14);
        CHECK(s[2] <= 1e-14);
    }

    std::mt19937_64 rng(16);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        RealMatrix3 t;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) t(i, j) = u(rng);
        const Spectrum s = singular_values_3x3(t);
        const auto ev = oracle::symmetric3_eigenvalues(t.transpose() * t);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(s[i] >= 0.0);
            CHECK(std::abs(s[i] * s[i] - ev[i]) <= 1e-10);
        }
        // The Hermitian dilation [[0, T], [T^T, 0]] has eigenvalues +-s_i.
        ComplexMatrix dil(6);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                dil(i, 3 + j) = t(i, j);
                dil(3 + j, i) = t(i, j);
            }
        const Spectrum d = hermitian_eigenvalues(dil);
        for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(d[i] - s[i]) <= 1e-10);
    }
}

TEST_CASE("tensor products") {
    CHECK(tensor_product(pauli(0), pauli(0)).max_abs_diff(ComplexMatrix::identity(4)) == 0.0);
    const double zz[] = {1, -1, -1, 1};
    CHECK(tensor_product(pauli(3), pauli(3)).max_abs_diff(ComplexMatrix::diagonal(zz)) == 0.0);
    CHECK_THROWS_AS(tensor_product(ComplexMatrix(4), ComplexMatrix(8)), ContractViolation);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const int da = 1 + trial % 4, db = 1 + (trial / 4) % 4;
        const ComplexMatrix a = oracle::random_hermitian(rng, da) * Complex(0.3, 0.7);
        const ComplexMatrix b = oracle::random_hermitian(rng, db) * Complex(-0.2, 0.1);
        const ComplexMatrix ab = tensor_product(a, b);
        CHECK(std::abs(ab.trace() - a.trace() * b.trace()) <= 1e-12 * std::max(1.0, max_abs(ab) * da * db));
        for (int i = 0; i < da; ++i)
            for (int j = 0; j < da; ++j)
                for (int k = 0; k < db; ++k)
                    for (int l = 0; l < db; ++l) CHECK(ab(i * db + k, j * db + l) == a(i, j) * b(k, l));
    }
}

TEST_CASE("Pauli matrices") {
    for (int i = 0; i < 4; ++i) {
        CHECK(pauli(i).is_hermitian(0.0));
        CHECK((pauli(i) * pauli(i)).max_abs_diff(ComplexMatrix::identity(2)) == 0.0);
    }
    CHECK_THROWS_AS(pauli(4), ContractViolation);
}
