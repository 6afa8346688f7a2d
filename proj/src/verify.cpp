#include "diqkd/verify.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "diqkd/campaign.hpp"
#include "diqkd/errors.hpp"
#include "diqkd/families.hpp"
#include "diqkd/output.hpp"
#include "diqkd/simd/philox.hpp"

namespace diqkd::verify {

namespace {

using linalg::Complex;
using linalg::ComplexMatrix;

// Collects checks; keeps the first failure message.
class Checker {
public:
    bool check(bool ok, const std::function<std::string()>& describe) {
        ++checks_;
        if (!ok && failure_.empty()) failure_ = describe();
        return ok;
    }
    [[nodiscard]] bool failed() const noexcept { return !failure_.empty(); }
    [[nodiscard]] std::uint64_t checks() const noexcept { return checks_; }
    [[nodiscard]] const std::string& failure() const noexcept { return failure_; }

private:
    std::uint64_t checks_ = 0;
    std::string failure_;
};

struct Context {
    VerifyOptions options;
    linalg::JacobiOptions jacobi;
    std::uint64_t per_rank = 0;
};

std::string show(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string show(const ComplexMatrix& m) {
    std::ostringstream os;
    os.precision(17);
    os << "[";
    for (int r = 0; r < m.dim(); ++r) {
        os << (r ? "; " : "");
        for (int c = 0; c < m.dim(); ++c) os << (c ? ", " : "") << m(r, c).real() << std::showpos << m(r, c).imag() << std::noshowpos << "i";
    }
    os << "]";
    return os.str();
}

std::string sample_tag(int rank, std::uint64_t i) {
    return "rank " + std::to_string(rank) + " sample_index " + std::to_string(i);
}

ComplexMatrix random_hermitian(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    ComplexMatrix m(n);
    for (int r = 0; r < n; ++r) {
        m(r, r) = g(rng);
        for (int c = r + 1; c < n; ++c) {
            m(r, c) = Complex(g(rng), g(rng));
            m(c, r) = std::conj(m(r, c));
        }
    }
    return m;
}

// Gaussian elimination with partial pivoting.
Complex determinant(ComplexMatrix a) {
    const int n = a.dim();
    Complex det = 1.0;
    for (int k = 0; k < n; ++k) {
        int p = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(a(r, k)) > std::abs(a(p, k))) p = r;
        if (a(p, k) == Complex(0.0)) return 0.0;
        if (p != k) {
            for (int c = 0; c < n; ++c) std::swap(a(k, c), a(p, c));
            det = -det;
        }
        det *= a(k, k);
        for (int r = k + 1; r < n; ++r) {
            const Complex f = a(r, k) / a(k, k);
            for (int c = k; c < n; ++c) a(r, c) -= f * a(k, c);
        }
    }
    return det;
}

void suite_philox(const Context&, Checker& ck) {
    using W = std::array<std::uint32_t, 4>;
    struct Kat {
        simd::PhiloxCounter ctr;
        simd::PhiloxKey key;
        W expect;
    };
    const Kat kats[] = {
        {{{0, 0, 0, 0}}, {0, 0}, {0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}},
        {{{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}},
         {0xffffffffu, 0xffffffffu},
         {0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}},
        {{{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}},
         {0xa4093822u, 0x299f31d0u},
         {0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}},
    };
    for (const auto& k : kats) {
        const W got = simd::philox4x32(k.ctr, k.key);
        ck.check(got == k.expect, [&] { return "Philox4x32-10 known-answer mismatch"; });
        for (auto level : {simd::Level::scalar, simd::best_available_level()}) {
            std::uint32_t out[4];
            simd::kernels(level).philox_blocks(k.key, k.ctr, 1, out);
            ck.check(W{out[0], out[1], out[2], out[3]} == k.expect, [&] {
                return "philox_blocks (" + std::string(simd::level_name(level)) + ") known-answer mismatch";
            });
        }
    }
}

void suite_simd(const Context& cx, Checker& ck) {
    if (!simd::level_supported(simd::Level::avx2)) return;
    const auto& sc = simd::kernels(simd::Level::scalar);
    const auto& vx = simd::kernels(simd::Level::avx2);
    for (int rank = 1; rank <= 4; ++rank)
        for (std::uint64_t i = 0; i < cx.per_rank / 4; ++i) {
            simd::DensityPlanes a, b;
            stategen::generate_planes({rank, cx.options.seed, i}, a, sc);
            stategen::generate_planes({rank, cx.options.seed, i}, b, vx);
            ck.check(a.re == b.re && a.im == b.im,
                     [&] { return "scalar and AVX2 states differ at " + sample_tag(rank, i); });
        }
}

void suite_jacobi(const Context& cx, Checker& ck) {
    std::mt19937_64 rng(cx.options.seed);
    const int trials = cx.options.quick ? 300 : 2000;
    for (int t = 0; t < trials; ++t) {
        const ComplexMatrix m = random_hermitian(rng, 4);
        const auto s = linalg::hermitian_eigenvalues(m, cx.jacobi);
        const double tr = m.trace().real();
        ck.check(std::abs(s.sum() - tr) <= 1e-9, [&] {
            return "trace residual " + show(std::abs(s.sum() - tr)) + " > 1e-9 for " + show(m);
        });
        double prod = 1.0;
        for (double v : s.values) prod *= v;
        const double det = determinant(m).real();
        const double rel = std::abs(prod - det) / std::max(1.0, std::abs(det));
        ck.check(rel <= 1e-6, [&] { return "determinant residual " + show(rel) + " > 1e-6 for " + show(m); });
        for (std::size_t k = 1; k < s.values.size(); ++k)
            ck.check(s.values[k - 1] >= s.values[k], [&] { return "eigenvalues not descending for " + show(m); });
    }
    // Partially transposed states exercise the clustered spectra seen in campaigns.
    for (int rank = 1; rank <= 4; ++rank)
        for (std::uint64_t i = 0; i < cx.per_rank / 10; ++i) {
            const auto st = stategen::generate({rank, cx.options.seed, i});
            const auto pt = linalg::partial_transpose(st.rho, linalg::Subsystem::B);
            const auto s = linalg::hermitian_eigenvalues(pt, cx.jacobi);
            double prod = 1.0;
            for (double v : s.values) prod *= v;
            const double det = determinant(pt).real();
            const double rel = std::abs(prod - det) / std::max(1e-3, std::abs(det));
            ck.check(std::abs(s.sum() - 1.0) <= 1e-9 && rel <= 1e-6,
                     [&] { return "partial-transpose spectrum residuals at " + sample_tag(rank, i); });
        }
}

void suite_states(const Context& cx, Checker& ck) {
    for (int rank = 1; rank <= 4; ++rank)
        for (std::uint64_t i = 0; i < cx.per_rank; ++i) {
            const auto st = stategen::generate({rank, cx.options.seed, i});
            const auto& rho = st.rho;
            double herm = 0.0;
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) herm = std::max(herm, std::abs(rho(r, c) - std::conj(rho(c, r))));
            const auto s = linalg::hermitian_eigenvalues(rho, cx.jacobi);
            int nonzero = 0;
            for (double v : s.values) nonzero += v > stategen::kRankEigenvalueThreshold;
            ck.check(herm <= 1e-12, [&] { return "non-Hermitian state at " + sample_tag(rank, i); });
            ck.check(std::abs(rho.trace().real() - 1.0) <= 1e-10,
                     [&] { return "trace != 1 at " + sample_tag(rank, i) + ": " + show(rho); });
            ck.check(s.values.back() >= -1e-10,
                     [&] { return "negative eigenvalue " + show(s.values.back()) + " at " + sample_tag(rank, i); });
            ck.check(nonzero == rank, [&] {
                return "rank law: " + std::to_string(nonzero) + " eigenvalues > 1e-8 at " + sample_tag(rank, i);
            });
        }
}

void suite_resources(const Context& cx, Checker& ck) {
    for (int rank = 1; rank <= 4; ++rank)
        for (std::uint64_t i = 0; i < cx.per_rank; ++i) {
            const auto st = stategen::generate({rank, cx.options.seed, i});
            const auto res = resources::analyze(st.rho, cx.jacobi);
            const auto k = keyrate::evaluate(res);
            const double q11 = keyrate::qber_consistency(res.sv_top2[0], res.sv_top2[1]);
            ck.check(!res.is_bell_nonlocal || res.is_entangled,
                     [&] { return "nonlocal but not entangled at " + sample_tag(rank, i); });
            ck.check(std::abs(k.qber - q11) < 1e-10, [&] {
                return "QBER forms differ by " + show(std::abs(k.qber - q11)) + " at " + sample_tag(rank, i);
            });
            ck.check(std::abs(res.log_negativity - std::log2(2 * res.negativity + 1)) <= 1e-12,
                     [&] { return "LN != log2(2N+1) at " + sample_tag(rank, i); });
            ck.check(res.chsh_value <= resources::kTsirelson && res.negativity <= 0.5 + 1e-12,
                     [&] { return "resource out of range at " + sample_tag(rank, i); });
            ck.check(!(k.positive_ca || k.positive_osca) || res.chsh_value > 2.0,
                     [&] { return "positive key without CHSH violation at " + sample_tag(rank, i); });
            ck.check(!k.positive_ca || k.positive_osca,
                     [&] { return "CA-positive but not OSCA-positive at " + sample_tag(rank, i); });
        }
}

void suite_families(const Context& cx, Checker& ck) {
    using families::Family;
    for (auto at : {keyrate::Attack::osca, keyrate::Attack::ca}) {
        for (Family f : {Family::pure, Family::werner})
            for (const auto& r : families::sweep(f, at, 0.01))
                ck.check(!r.abs_diff || *r.abs_diff < 1e-9, [&] {
                    return std::string(families::family_name(f)) + " " + std::string(keyrate::attack_name(at)) +
                           " closed form differs from pipeline by " + show(*r.abs_diff) + " at N = " +
                           show(r.negativity);
                });
        if (cx.options.quick || at == keyrate::Attack::ca) continue;
        for (const auto& r : families::sweep(Family::rank2, at, 0.05))
            ck.check(!(r.premise_holds && *r.premise_holds) || (r.abs_diff && *r.abs_diff < 1e-9), [&] {
                return "rank-2 OSCA closed form differs from pipeline at p1 = " + show(r.param);
            });
    }
}

void suite_envelope(const Context& cx, Checker& ck) {
    campaign::EnvelopeConfig c;
    c.ranks = {2, 3};
    c.samples_per_rank = 8 * cx.per_rank;
    c.seed = cx.options.seed;
    const auto s = campaign::run_envelope(c);
    for (const auto& r : s.ranks)
        for (const auto& a : r.attacks)
            for (const auto& p : a.points)
                ck.check(p.verdict.inside, [&] {
                    return "outside the pure/Werner envelope at " + sample_tag(p.rank, p.sample_index) + " (" +
                           std::string(keyrate::attack_name(a.attack)) + ", N = " + show(p.verdict.negativity) +
                           ", r = " + show(p.verdict.r_state) + ")";
                });
}

void suite_determinism(const Context& cx, Checker& ck) {
    campaign::CampaignConfig c;
    c.samples_per_rank = 2 * campaign::kBlockSize + 17;
    c.seed = cx.options.seed;
    c.ranks = {2, 4};
    std::string first;
    for (int w : {1, 3}) {
        c.workers = w;
        const auto s = campaign::run_campaign(c);
        std::string text = output::campaign_summary_json(s);
        for (auto kind : {output::Kind::ln_hist, output::Kind::bell_hist})
            text += output::emit_csv(output::histogram_records(s, kind));
        text += output::emit_csv(output::table1_records(s));
        if (first.empty())
            first = text;
        else
            ck.check(text == first,
                     [&] { return "campaign outputs differ between 1 and " + std::to_string(w) + " workers"; });
    }
}

void suite_output(const Context& cx, Checker& ck) {
    campaign::CampaignConfig c;
    c.samples_per_rank = 300;
    c.seed = cx.options.seed;
    c.workers = 1;
    const auto s = campaign::run_campaign(c);
    std::vector<output::OutputRecordSet> sets = {
        output::table1_records(s), output::histogram_records(s, output::Kind::ln_hist),
        output::histogram_records(s, output::Kind::bell_hist),
        output::family_sweep_records(families::sweep(families::Family::werner, keyrate::Attack::ca, 0.05))};
    for (const auto& rs : sets)
        for (auto f : {output::Format::csv, output::Format::json}) {
            const auto back = output::parse(output::emit(rs, f), rs.kind, f);
            ck.check(back == output::canonical(rs), [&] {
                return std::string(output::kind_name(rs.kind)) + " does not round-trip through " +
                       std::string(output::format_extension(f));
            });
        }
}

struct Suite {
    const char* name;
    bool quick;
    void (*run)(const Context&, Checker&);
};

const Suite kSuites[] = {
    {"philox_known_answers", true, suite_philox},
    {"simd_equivalence", true, suite_simd},
    {"jacobi_residuals", true, suite_jacobi},
    {"state_invariants", true, suite_states},
    {"resource_keyrate_invariants", true, suite_resources},
    {"closed_form_equivalence", true, suite_families},
    {"envelope", false, suite_envelope},
    {"worker_determinism", false, suite_determinism},
    {"output_round_trip", false, suite_output},
};

}  // namespace

bool VerifyReport::passed() const noexcept { return first_failure() == nullptr; }

const SuiteResult* VerifyReport::first_failure() const noexcept {
    for (const auto& s : suites)
        if (!s.passed) return &s;
    return nullptr;
}

std::vector<std::string> suite_names(bool quick) {
    std::vector<std::string> names;
    for (const auto& s : kSuites)
        if (!quick || s.quick) names.emplace_back(s.name);
    return names;
}

linalg::JacobiOptions jacobi_options(Fault fault) noexcept {
    linalg::JacobiOptions o;
    if (fault == Fault::eigen_tolerance) o.tolerance = 1e-2;
    return o;
}

Fault parse_fault(const std::string& name) {
    if (name == "none") return Fault::none;
    if (name == "eigen-tolerance") return Fault::eigen_tolerance;
    throw ContractViolation("unknown fault '" + name + "' (expected eigen-tolerance)");
}

VerifyReport run_verify(const VerifyOptions& options, std::ostream& log) {
    Context cx{options, jacobi_options(options.fault), options.quick ? 500u : 10000u};
    VerifyReport report;
    for (const auto& suite : kSuites) {
        if (options.quick && !suite.quick) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Checker ck;
        try {
            suite.run(cx, ck);
        } catch (const std::exception& e) {
            ck.check(false, [&] { return std::string("exception: ") + e.what(); });
        }
        SuiteResult r;
        r.name = suite.name;
        r.passed = !ck.failed();
        r.checks = ck.checks();
        r.counterexample = ck.failure();
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        log << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.checks << " checks, " << std::fixed
            << std::setprecision(2) << r.seconds << " s)" << std::defaultfloat << "\n";
        if (!r.passed) log << "  counterexample: " << r.counterexample << "\n";
        report.suites.push_back(std::move(r));
    }
    return report;
}

}  // namespace diqkd::verify
