#include "diqkd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "diqkd/errors.hpp"

namespace diqkd::linalg {

namespace {

inline double conj_value(double x) noexcept { return x; }
inline Complex conj_value(Complex x) noexcept { return std::conj(x); }
inline double real_part(double x) noexcept { return x; }
inline double real_part(Complex x) noexcept { return x.real(); }

// Cyclic Jacobi over a dense n x n Hermitian (or real symmetric) matrix held
// in `a`. On return the diagonal holds the eigenvalues. When `v` is non-null
// it accumulates the eigenvectors as columns.
template <class T>
void jacobi_diagonalize(T* a, int n, T* v, const JacobiOptions& opt) {
    auto at = [n](T* m, int r, int c) -> T& { return m[r * n + c]; };
    if (v != nullptr) {
        for (int i = 0; i < n * n; ++i) v[i] = T{0};
        for (int i = 0; i < n; ++i) at(v, i, i) = T{1};
    }
    double frob2 = 0.0;
    for (int i = 0; i < n * n; ++i) frob2 += std::norm(a[i]);
    const double threshold = opt.tolerance * std::max(1.0, std::sqrt(frob2));

    for (int sweep = 0; sweep <= opt.max_sweeps; ++sweep) {
        double off2 = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q)
                if (p != q) off2 += std::norm(at(a, p, q));
        if (std::sqrt(off2) < threshold) return;
        if (sweep == opt.max_sweeps) break;

        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const T apq = at(a, p, q);
                const double g = std::abs(apq);
                if (g < 1e-300) continue;
                const T phase = apq / g;
                const T phase_c = conj_value(phase);
                const double app = real_part(at(a, p, p));
                const double aqq = real_part(at(a, q, q));
                const double tau = (aqq - app) / (2.0 * g);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;

                // U = diag(.., 1, .., e^{-i phi}, ..) * R(c, s), A <- U^H A U
                const T u_pp = T{c};
                const T u_pq = T{s};
                const T u_qp = -s * phase_c;
                const T u_qq = c * phase_c;

                for (int k = 0; k < n; ++k) {
                    const T akp = at(a, k, p);
                    const T akq = at(a, k, q);
                    at(a, k, p) = akp * u_pp + akq * u_qp;
                    at(a, k, q) = akp * u_pq + akq * u_qq;
                }
                for (int k = 0; k < n; ++k) {
                    const T apk = at(a, p, k);
                    const T aqk = at(a, q, k);
                    at(a, p, k) = conj_value(u_pp) * apk + conj_value(u_qp) * aqk;
                    at(a, q, k) = conj_value(u_pq) * apk + conj_value(u_qq) * aqk;
                }
                at(a, p, q) = T{0};
                at(a, q, p) = T{0};
                at(a, p, p) = T{app - t * g};
                at(a, q, q) = T{aqq + t * g};

                if (v != nullptr) {
                    for (int k = 0; k < n; ++k) {
                        const T vkp = at(v, k, p);
                        const T vkq = at(v, k, q);
                        at(v, k, p) = vkp * u_pp + vkq * u_qp;
                        at(v, k, q) = vkp * u_pq + vkq * u_qq;
                    }
                }
            }
        }
    }
    throw NumericIntegrityError("Jacobi eigensolver did not converge within " + std::to_string(opt.max_sweeps) +
                                " sweeps (dim " + std::to_string(n) + ")");
}

void require_hermitian(const ComplexMatrix& m) {
    require(m.dim() >= 1 && m.dim() <= kMaxDim, "eigensolver: dimension must be in [1, 16]");
    require(m.is_hermitian(), "eigensolver: matrix is not Hermitian within tolerance");
}

std::vector<int> descending_order(std::span<const double> values) {
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int l, int r) { return values[l] > values[r]; });
    return order;
}

}  // namespace

ComplexMatrix::ComplexMatrix(int dim) : dim_(dim) {
    require(dim >= 1 && dim <= kMaxDim, "ComplexMatrix: dimension must be in [1, 16]");
    entries_.assign(static_cast<std::size_t>(dim * dim), Complex{});
}

ComplexMatrix::ComplexMatrix(int dim, std::vector<Complex> entries) : dim_(dim), entries_(std::move(entries)) {
    require(dim >= 1 && dim <= kMaxDim, "ComplexMatrix: dimension must be in [1, 16]");
    require(entries_.size() == static_cast<std::size_t>(dim * dim), "ComplexMatrix: entry count must be dim^2");
}

ComplexMatrix ComplexMatrix::identity(int dim) {
    ComplexMatrix m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::projector(std::span<const Complex> v) {
    ComplexMatrix m(static_cast<int>(v.size()));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) m(i, j) = v[i] * std::conj(v[j]);
    return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> d) {
    ComplexMatrix m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m(i, i) = d[i];
    return m;
}

Complex ComplexMatrix::trace() const noexcept {
    Complex t{};
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

ComplexMatrix ComplexMatrix::adjoint() const {
    ComplexMatrix m(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) m(i, j) = std::conj((*this)(j, i));
    return m;
}

bool ComplexMatrix::is_hermitian(double tol) const noexcept {
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j)
            if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
    return true;
}

double ComplexMatrix::max_abs_diff(const ComplexMatrix& other) const {
    require(dim_ == other.dim_, "max_abs_diff: dimension mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) d = std::max(d, std::abs(entries_[i] - other.entries_[i]));
    return d;
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& rhs) {
    require(dim_ == rhs.dim_, "matrix sum: dimension mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += rhs.entries_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& rhs) {
    require(dim_ == rhs.dim_, "matrix difference: dimension mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= rhs.entries_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(Complex scale) noexcept {
    for (auto& e : entries_) e *= scale;
    return *this;
}

ComplexMatrix operator*(const ComplexMatrix& lhs, const ComplexMatrix& rhs) {
    require(lhs.dim() == rhs.dim(), "matrix product: dimension mismatch");
    const int n = lhs.dim();
    ComplexMatrix out(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const Complex l = lhs(i, k);
            for (int j = 0; j < n; ++j) out(i, j) += l * rhs(k, j);
        }
    return out;
}

RealMatrix3 RealMatrix3::diagonal(double d0, double d1, double d2) {
    return RealMatrix3({d0, 0, 0, 0, d1, 0, 0, 0, d2});
}

RealMatrix3 RealMatrix3::transpose() const noexcept {
    RealMatrix3 t;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t(i, j) = (*this)(j, i);
    return t;
}

RealMatrix3 operator*(const RealMatrix3& lhs, const RealMatrix3& rhs) noexcept {
    RealMatrix3 out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += lhs(i, k) * rhs(k, j);
            out(i, j) = s;
        }
    return out;
}

double Spectrum::sum() const noexcept { return std::accumulate(values.begin(), values.end(), 0.0); }

Spectrum hermitian_eigenvalues(const ComplexMatrix& m) { return hermitian_eigenvalues(m, JacobiOptions{}); }

Spectrum hermitian_eigenvalues(const ComplexMatrix& m, const JacobiOptions& options) {
    require_hermitian(m);
    const int n = m.dim();
    std::array<Complex, kMaxDim * kMaxDim> work{};
    std::copy(m.entries().begin(), m.entries().end(), work.begin());
    jacobi_diagonalize<Complex>(work.data(), n, nullptr, options);
    Spectrum s;
    s.values.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s.values[static_cast<std::size_t>(i)] = work[static_cast<std::size_t>(i * n + i)].real();
    std::sort(s.values.begin(), s.values.end(), std::greater<>());
    return s;
}

Eigensystem hermitian_eigensystem(const ComplexMatrix& m) {
    require_hermitian(m);
    const int n = m.dim();
    std::array<Complex, kMaxDim * kMaxDim> work{};
    std::array<Complex, kMaxDim * kMaxDim> vec{};
    std::copy(m.entries().begin(), m.entries().end(), work.begin());
    jacobi_diagonalize<Complex>(work.data(), n, vec.data(), JacobiOptions{});

    std::vector<double> diag(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) diag[static_cast<std::size_t>(i)] = work[static_cast<std::size_t>(i * n + i)].real();
    const auto order = descending_order(diag);

    Eigensystem es{Spectrum{{}, SpectrumKind::eigenvalues}, ComplexMatrix(n)};
    for (int k = 0; k < n; ++k) {
        const int src = order[static_cast<std::size_t>(k)];
        es.spectrum.values.push_back(diag[static_cast<std::size_t>(src)]);
        for (int r = 0; r < n; ++r) es.vectors(r, k) = vec[static_cast<std::size_t>(r * n + src)];
    }
    return es;
}

Spectrum symmetric_eigenvalues(const RealMatrix3& m) {
    std::array<double, 9> work = m.entries();
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j)
            require(std::abs(work[i * 3 + j] - work[j * 3 + i]) <= kHermitianTolerance,
                    "symmetric_eigenvalues: matrix is not symmetric");
    jacobi_diagonalize<double>(work.data(), 3, nullptr, JacobiOptions{});
    Spectrum s{{work[0], work[4], work[8]}, SpectrumKind::eigenvalues};
    std::sort(s.values.begin(), s.values.end(), std::greater<>());
    return s;
}

ComplexMatrix partial_transpose(const ComplexMatrix& rho, Subsystem which) {
    require(rho.dim() == 4, "partial_transpose: expected a two-qubit (dim 4) matrix");
    ComplexMatrix out(4);
    for (int i = 0; i < 2; ++i)
        for (int k = 0; k < 2; ++k)
            for (int j = 0; j < 2; ++j)
                for (int l = 0; l < 2; ++l) {
                    // out[(i,k),(j,l)]
                    const Complex v = which == Subsystem::B ? rho(2 * i + l, 2 * j + k) : rho(2 * j + k, 2 * i + l);
                    out(2 * i + k, 2 * j + l) = v;
                }
    return out;
}

ComplexMatrix partial_trace(const ComplexMatrix& rho, std::span<const int> dims, std::span<const int> keep) {
    require(!dims.empty(), "partial_trace: empty subsystem list");
    int total = 1;
    for (int d : dims) {
        require(d >= 1, "partial_trace: subsystem dimensions must be positive");
        total *= d;
    }
    require(total == rho.dim(), "partial_trace: product of subsystem dimensions must equal matrix dimension");
    const int m = static_cast<int>(dims.size());
    std::vector<bool> kept(static_cast<std::size_t>(m), false);
    int kept_dim = 1;
    for (int k : keep) {
        require(k >= 0 && k < m, "partial_trace: kept subsystem index out of range");
        require(!kept[static_cast<std::size_t>(k)], "partial_trace: duplicate kept subsystem");
        kept[static_cast<std::size_t>(k)] = true;
        kept_dim *= dims[static_cast<std::size_t>(k)];
    }
    require(!keep.empty(), "partial_trace: at least one subsystem must be kept");

    // Split a full index into (kept index, traced index), most significant subsystem first.
    const auto split = [&](int full, int& kept_index, int& traced_index) {
        kept_index = 0;
        traced_index = 0;
        int stride = total;
        for (int s = 0; s < m; ++s) {
            const int d = dims[static_cast<std::size_t>(s)];
            stride /= d;
            const int digit = (full / stride) % d;
            if (kept[static_cast<std::size_t>(s)])
                kept_index = kept_index * d + digit;
            else
                traced_index = traced_index * d + digit;
        }
    };

    ComplexMatrix out(kept_dim);
    for (int r = 0; r < total; ++r) {
        int kr = 0, tr = 0;
        split(r, kr, tr);
        for (int c = 0; c < total; ++c) {
            int kc = 0, tc = 0;
            split(c, kc, tc);
            if (tr == tc) out(kr, kc) += rho(r, c);
        }
    }
    return out;
}

Spectrum singular_values_3x3(const RealMatrix3& t) {
    // One-sided Jacobi on the columns; small singular values keep full
    // precision, unlike the square roots of the Gram eigenvalues.
    double c[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c[j][i] = t(i, j);
    for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < 2; ++p)
            for (int q = p + 1; q < 3; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int i = 0; i < 3; ++i) {
                    alpha += c[p][i] * c[p][i];
                    beta += c[q][i] * c[q][i];
                    gamma += c[p][i] * c[q][i];
                }
                if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double tau = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double cs = 1.0 / std::sqrt(1.0 + tau * tau);
                const double sn = cs * tau;
                for (int i = 0; i < 3; ++i) {
                    const double x = c[p][i], y = c[q][i];
                    c[p][i] = cs * x - sn * y;
                    c[q][i] = sn * x + cs * y;
                }
            }
        if (!rotated) break;
    }
    Spectrum sv{{}, SpectrumKind::singular_values};
    for (const auto& col : c) sv.values.push_back(std::hypot(col[0], col[1], col[2]));
    std::sort(sv.values.begin(), sv.values.end(), std::greater<>());
    return sv;
}

ComplexMatrix tensor_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    const int da = a.dim();
    const int db = b.dim();
    require(da * db <= kMaxDim, "tensor_product: result dimension exceeds 16");
    ComplexMatrix out(da * db);
    for (int i = 0; i < da; ++i)
        for (int j = 0; j < da; ++j)
            for (int k = 0; k < db; ++k)
                for (int l = 0; l < db; ++l) out(i * db + k, j * db + l) = a(i, j) * b(k, l);
    return out;
}

const ComplexMatrix& pauli(int index) {
    static const std::array<ComplexMatrix, 4> basis = [] {
        const Complex i{0.0, 1.0};
        return std::array<ComplexMatrix, 4>{
            ComplexMatrix(2, {1.0, 0.0, 0.0, 1.0}),
            ComplexMatrix(2, {0.0, 1.0, 1.0, 0.0}),
            ComplexMatrix(2, {0.0, -i, i, 0.0}),
            ComplexMatrix(2, {1.0, 0.0, 0.0, -1.0}),
        };
    }();
    require(index >= 0 && index < 4, "pauli: index must be in [0, 3]");
    return basis[static_cast<std::size_t>(index)];
}

}  // namespace diqkd::linalg
