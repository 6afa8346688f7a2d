#pragma once

// Test-only oracles. Everything here is deliberately independent of the
// library's sampler: std::mt19937_64 + std::normal_distribution for random
// inputs, Gaussian elimination for determinants, and closed forms written
// out by hand.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "diqkd/linalg.hpp"

namespace oracle {

using Complex = std::complex<double>;
using diqkd::linalg::ComplexMatrix;
using diqkd::linalg::RealMatrix3;

inline constexpr double kPi = 3.141592653589793238462643;

inline ComplexMatrix bell_phi_plus() {
    const double h = 0.5;
    return ComplexMatrix(4, {h, 0, 0, h, 0, 0, 0, 0, 0, 0, 0, 0, h, 0, 0, h});
}

inline ComplexMatrix basis_projector(int index, int dim = 4) {
    ComplexMatrix m(dim);
    m(index, index) = 1.0;
    return m;
}

inline ComplexMatrix maximally_mixed() { return ComplexMatrix::identity(4) * Complex(0.25); }

inline ComplexMatrix werner(double p) {
    ComplexMatrix m = bell_phi_plus() * Complex(p);
    m += maximally_mixed() * Complex(1.0 - p);
    return m;
}

inline ComplexMatrix pure_schmidt(double theta) {
    const double c = std::cos(theta / 2), s = std::sin(theta / 2);
    const Complex v[4] = {c, 0, 0, s};
    return ComplexMatrix::projector(v);
}

inline std::vector<Complex> gaussian_vector(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Complex> v(static_cast<std::size_t>(n));
    for (auto& x : v) {
        const double re = g(rng);
        x = Complex(re, g(rng));
    }
    return v;
}

inline ComplexMatrix random_hermitian(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g(0.0, 1.0);
    ComplexMatrix m(n);
    for (int i = 0; i < n; ++i) {
        m(i, i) = g(rng);
        for (int j = i + 1; j < n; ++j) {
            const double re = g(rng);
            const Complex z(re, g(rng));
            m(i, j) = z;
            m(j, i) = std::conj(z);
        }
    }
    return m;
}

// Haar unitary from QR (Gram-Schmidt) of a Ginibre matrix, columns phase-fixed.
inline ComplexMatrix random_unitary(std::mt19937_64& rng, int n) {
    std::vector<std::vector<Complex>> cols;
    for (int c = 0; c < n; ++c) {
        auto v = gaussian_vector(rng, n);
        for (const auto& u : cols) {
            Complex dot = 0;
            for (int i = 0; i < n; ++i) dot += std::conj(u[static_cast<std::size_t>(i)]) * v[static_cast<std::size_t>(i)];
            for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] -= dot * u[static_cast<std::size_t>(i)];
        }
        double norm = 0;
        for (auto& x : v) norm += std::norm(x);
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        cols.push_back(v);
    }
    ComplexMatrix u(n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) u(r, c) = cols[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)];
    return u;
}

inline ComplexMatrix conjugate(const ComplexMatrix& u, const ComplexMatrix& m) { return u * m * u.adjoint(); }

// Determinant by Gaussian elimination with partial pivoting.
inline Complex determinant(const ComplexMatrix& m) {
    const int n = m.dim();
    std::vector<Complex> a(m.entries().begin(), m.entries().end());
    Complex det = 1.0;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(a[static_cast<std::size_t>(r * n + k)]) > std::abs(a[static_cast<std::size_t>(piv * n + k)]))
                piv = r;
        if (piv != k) {
            for (int c = 0; c < n; ++c)
                std::swap(a[static_cast<std::size_t>(k * n + c)], a[static_cast<std::size_t>(piv * n + c)]);
            det = -det;
        }
        const Complex d = a[static_cast<std::size_t>(k * n + k)];
        det *= d;
        if (std::abs(d) == 0.0) return 0.0;
        for (int r = k + 1; r < n; ++r) {
            const Complex f = a[static_cast<std::size_t>(r * n + k)] / d;
            for (int c = k; c < n; ++c) a[static_cast<std::size_t>(r * n + c)] -= f * a[static_cast<std::size_t>(k * n + c)];
        }
    }
    return det;
}

// Eigenvalues of a real symmetric 3x3 matrix by the trigonometric formula.
inline std::vector<double> symmetric3_eigenvalues(const RealMatrix3& a) {
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    std::vector<double> ev(3);
    if (p1 == 0.0) {
        ev = {a(0, 0), a(1, 1), a(2, 2)};
    } else {
        const double q = a.trace() / 3.0;
        const double p2 = (a(0, 0) - q) * (a(0, 0) - q) + (a(1, 1) - q) * (a(1, 1) - q) +
                          (a(2, 2) - q) * (a(2, 2) - q) + 2.0 * p1;
        const double p = std::sqrt(p2 / 6.0);
        RealMatrix3 b;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b(i, j) = (a(i, j) - (i == j ? q : 0.0)) / p;
        const double detb = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1)) -
                            b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0)) +
                            b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
        const double r = std::clamp(detb / 2.0, -1.0, 1.0);
        const double phi = std::acos(r) / 3.0;
        ev[0] = q + 2.0 * p * std::cos(phi);
        ev[2] = q + 2.0 * p * std::cos(phi + 2.0 * kPi / 3.0);
        ev[1] = 3.0 * q - ev[0] - ev[2];
    }
    std::sort(ev.begin(), ev.end(), std::greater<>());
    return ev;
}

// Natural log from the atanh series; used to cross-check entropy values.
inline double series_log(double x) {
    int e = 0;
    const double m = std::frexp(x, &e);  // x = m 2^e, m in [0.5, 1)
    const double y = (m - 1.0) / (m + 1.0);
    double term = y, sum = 0.0;
    for (int k = 0; k < 200; ++k) {
        sum += term / (2 * k + 1);
        term *= y * y;
    }
    const double ln2 = 0.693147180559945309417232;
    return 2.0 * sum + e * ln2;
}

inline double series_entropy(double q) {
    const double ln2 = 0.693147180559945309417232;
    double h = 0.0;
    if (q > 0) h -= q * series_log(q);
    if (q < 1) h -= (1 - q) * series_log(1 - q);
    return h / ln2;
}

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

// Two-sample KS critical value at significance 0.01.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
    return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * m));
}

}  // namespace oracle
