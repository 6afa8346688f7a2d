#include <cmath>
#include <random>

#include "diqkd/errors.hpp"
#include "diqkd/resources.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace diqkd;
using namespace diqkd::resources;

TEST_CASE("negativity examples") {
    CHECK(std::abs(negativity(oracle::bell_phi_plus()) - 0.5) < 1e-14);
    CHECK(std::abs(negativity(oracle::werner(0.5)) - 0.125) < 1e-14);
    CHECK(std::abs(negativity(oracle::pure_schmidt(oracle::kPi / 6)) - 0.25) < 1e-14);
    CHECK(negativity(oracle::maximally_mixed()) == 0.0);
    CHECK_THROWS_AS(negativity(ComplexMatrix(8)), ContractViolation);
}

TEST_CASE("log negativity examples") {
    CHECK(std::abs(log_negativity(oracle::bell_phi_plus()) - 1.0) < 1e-14);
    CHECK(std::abs(log_negativity(oracle::basis_projector(1))) < 1e-15);
    CHECK(std::abs(log_negativity(oracle::werner(0.5)) - std::log2(1.25)) < 1e-14);
    CHECK(std::abs(log_negativity(oracle::werner(0.5)) - 0.3219280949) < 1e-10);
}

TEST_CASE("correlation matrix examples") {
    const RealMatrix3 bell = correlation_matrix(oracle::bell_phi_plus());
    const RealMatrix3 expected = RealMatrix3::diagonal(1, -1, 1);
    for (int i = 0; i < 9; ++i) CHECK(std::abs(bell.entries()[i] - expected.entries()[i]) < 1e-15);
    for (double p : {0.0, 0.3, 0.6, 1.0}) {
        const RealMatrix3 w = correlation_matrix(oracle::werner(p));
        const RealMatrix3 e = RealMatrix3::diagonal(p, -p, p);
        for (int i = 0; i < 9; ++i) CHECK(std::abs(w.entries()[i] - e.entries()[i]) < 1e-15);
    }
    for (double v : correlation_matrix(oracle::maximally_mixed()).entries()) CHECK(v == 0.0);

    // Brute force with explicit tensor products.
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        ComplexMatrix rho = oracle::random_hermitian(rng, 4);
        const RealMatrix3 t = correlation_matrix(rho);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const ComplexMatrix m = linalg::tensor_product(linalg::pauli(i + 1), linalg::pauli(j + 1)) * rho;
                CHECK(std::abs(t(i, j) - m.trace().real()) < 1e-12);
            }
    }
}

TEST_CASE("imaginary trace residue is a numeric integrity failure") {
    ComplexMatrix bad = oracle::bell_phi_plus();
    bad(0, 3) = linalg::Complex(0.5, 1e-6);  // non-Hermitian corruption
    CHECK_THROWS_AS(correlation_matrix(bad), NumericIntegrityError);
}

TEST_CASE("CHSH value examples") {
    CHECK(std::abs(chsh_value(oracle::bell_phi_plus()) - 2 * std::sqrt(2.0)) < 1e-14);
    for (double p : {0.2, 0.7, 0.95}) CHECK(std::abs(chsh_value(oracle::werner(p)) - 2 * std::sqrt(2.0) * p) < 1e-14);
    for (double th : {0.1, 0.7, 1.2}) {
        const double s = std::sin(th);
        CHECK(std::abs(chsh_value(oracle::pure_schmidt(th)) - 2 * std::sqrt(1 + s * s)) < 1e-14);
    }
}

TEST_CASE("report invariants, hierarchy and Gisin's theorem on sampled states") {
    int counterexamples = 0;
    for (int rank = 1; rank <= 4; ++rank) {
        const int n = rank == 1 ? 10000 : 30000;
        for (int i = 0; i < n; ++i) {
            const ResourceReport r = analyze(stategen::generate({rank, 8, static_cast<std::uint64_t>(i)}));
            CHECK(std::abs(r.log_negativity - std::log2(2 * r.negativity + 1)) <= 1e-12);
            CHECK(std::abs(r.chsh_value - 2 * std::sqrt(r.sv_top2[0] * r.sv_top2[0] + r.sv_top2[1] * r.sv_top2[1])) <=
                  1e-12);
            CHECK(r.negativity >= 0.0);
            CHECK(r.negativity <= 0.5 + 1e-12);
            CHECK(r.chsh_value <= kTsirelson);
            for (double v : r.correlation.entries()) CHECK(std::abs(v) <= 1 + 1e-9);
            if (r.is_bell_nonlocal && !r.is_entangled) ++counterexamples;
            if (r.is_bell_nonlocal) CHECK(r.chsh_value > 2.0);
            if (rank == 1 && r.negativity > 1e-9) CHECK(r.chsh_value >= 2.0);
            if (rank == 1) CHECK(r.is_bell_nonlocal);
        }
    }
    CHECK(counterexamples == 0);
}

TEST_CASE("PPT criterion cross-check") {
    for (int rank = 2; rank <= 4; ++rank)
        for (int i = 0; i < 3500; ++i) {
            const auto s = stategen::generate({rank, 21, static_cast<std::uint64_t>(i)});
            const auto pt = linalg::hermitian_eigenvalues(linalg::partial_transpose(s.rho, linalg::Subsystem::B));
            const bool has_negative = pt[3] < -1e-9;
            CHECK((negativity(s) > 1e-9) == has_negative);
        }
}

TEST_CASE("local unitary invariance of N, LN and S") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const ComplexMatrix u =
            linalg::tensor_product(oracle::random_unitary(rng, 2), oracle::random_unitary(rng, 2));
        const auto s = stategen::generate({1 + trial % 4, 5, static_cast<std::uint64_t>(trial)});
        const ResourceReport a = analyze(s.rho);
        const ResourceReport b = analyze(oracle::conjugate(u, s.rho));
        CHECK(std::abs(a.negativity - b.negativity) < 1e-9);
        CHECK(std::abs(a.log_negativity - b.log_negativity) < 1e-9);
        CHECK(std::abs(a.chsh_value - b.chsh_value) < 1e-9);
    }
}
