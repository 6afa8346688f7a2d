#include <cmath>
#include <cstring>
#include <numeric>

#include "diqkd/campaign.hpp"
#include "diqkd/errors.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace diqkd;
using namespace diqkd::campaign;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

bool same_opt(const std::optional<double>& a, const std::optional<double>& b) {
    return a.has_value() == b.has_value() && (!a || same_bits(*a, *b));
}

bool same_hist(const Histogram& a, const Histogram& b) {
    if (a.counts != b.counts || a.total != b.total || a.edges.size() != b.edges.size()) return false;
    for (std::size_t i = 0; i < a.edges.size(); ++i)
        if (!same_bits(a.edges[i], b.edges[i])) return false;
    for (std::size_t i = 0; i < a.normalized.size(); ++i)
        if (!same_bits(a.normalized[i], b.normalized[i])) return false;
    return true;
}

bool same_rank(const RankSummary& a, const RankSummary& b) {
    return a.rank == b.rank && a.n_total == b.n_total && a.n_entangled == b.n_entangled &&
           a.n_bell_nonlocal == b.n_bell_nonlocal && a.n_positive_osca == b.n_positive_osca &&
           a.n_positive_ca == b.n_positive_ca && same_bits(a.sum_r_osca, b.sum_r_osca) &&
           same_bits(a.sum_r_ca, b.sum_r_ca) && same_opt(a.avg_r_osca, b.avg_r_osca) &&
           same_opt(a.avg_r_ca, b.avg_r_ca) && same_hist(a.ln_histogram, b.ln_histogram) &&
           same_hist(a.bell_histogram, b.bell_histogram) && a.ln_at_least == b.ln_at_least &&
           a.chsh_at_least == b.chsh_at_least;
}

std::uint64_t total(const std::vector<std::uint64_t>& v) { return std::accumulate(v.begin(), v.end(), std::uint64_t{0}); }

}  // namespace

TEST_CASE("compensated summation") {
    CompensatedSum s;
    for (double x : {1e16, 1.0, -1e16}) s.add(x);
    CHECK(s.value() == 1.0);
    CompensatedSum a, b;
    a.add(1e16);
    b.add(1.0);
    b.add(-1e16);
    a.merge(b);
    CHECK(a.value() == 1.0);
    CompensatedSum t;
    for (int i = 0; i < 1000000; ++i) t.add(0.1);
    CHECK(std::abs(t.value() - 100000.0) < 1e-9);
}

TEST_CASE("histogram edges and binning") {
    const auto ln = ln_edges(10);
    CHECK(ln.size() == 11);
    CHECK(ln.front() == 0.0);
    CHECK(ln.back() == 1.0);
    const auto bell = bell_edges(10);
    CHECK(bell.front() == 2.0);
    CHECK(bell.back() == resources::kTsirelson);
    CHECK(std::abs(bell[1] - 2.0828427125) < 1e-9);
    CHECK_THROWS_AS(ln_edges(0), ContractViolation);
    CHECK_THROWS_AS(make_histogram({0.0, 0.5, 0.5}), ContractViolation);

    const Histogram h = normalized_distribution(std::vector<double>(10000, 0.05), ln);
    CHECK(h.counts[0] == 10000);
    CHECK(h.normalized[0] == 1.0);
    CHECK(total(h.counts) == 10000);

    const Histogram e = normalized_distribution({0.0, 0.1, 0.1000001, 1.0, 1.0000001, -0.2}, ln, 100);
    CHECK(e.counts[0] == 1);
    CHECK(e.counts[1] == 1);
    CHECK(e.counts[9] == 1);
    CHECK(total(e.counts) == 3);
    CHECK(e.normalized[9] == 0.01);
    double mass = 0.0;
    for (double v : e.normalized) mass += v;
    CHECK(mass <= 1.0);

    const Histogram b = normalized_distribution({2.0, 2.05, 2.4, 2.45, 2.6, resources::kTsirelson}, bell);
    CHECK(total(b.counts) == 5);
    CHECK(b.counts[0] == 1);
    CHECK(b.counts[9] == 1);
    // Labels are upper edges: 2.497 reads as 2.5, 2.414 does not.
    CHECK(fraction_from_bin_labels(b, 2.5) == 3.0 / 6.0);
    CHECK(fraction_from_bin_labels(normalized_distribution({0.45}, ln), 0.5) == 1.0);
    CHECK(fraction_from_bin_labels(normalized_distribution({0.39}, ln), 0.5) == 0.0);
}

TEST_CASE("average of positive key rates") {
    CHECK(std::abs(*average_positive_keyrate({0.2, 0.4, -0.1, 0.0}) - 0.3) < 1e-15);
    CHECK_FALSE(average_positive_keyrate({0.0, -1.0}).has_value());
    CHECK_FALSE(average_positive_keyrate({}).has_value());
}

TEST_CASE("Poisson intervals") {
    const auto zero = poisson_interval(0);
    CHECK(zero.lo == 0.0);
    CHECK(std::abs(zero.hi - 3.688879454) < 1e-8);
    // Chi-square quantiles: lo = chi2(0.025, 2k) / 2, hi = chi2(0.975, 2k + 2) / 2.
    const auto eleven = poisson_interval(11);
    CHECK(std::abs(eleven.lo - 5.491160367) < 1e-8);
    CHECK(std::abs(eleven.hi - 19.682038513) < 1e-8);
    const auto one = poisson_interval(1);
    CHECK(std::abs(one.lo - 0.025317808) < 1e-8);
    CHECK(std::abs(one.hi - 5.571643391) < 1e-8);
    CHECK_THROWS_AS(poisson_interval(3, 1.0), ContractViolation);
}

TEST_CASE("config validation") {
    CampaignConfig c;
    c.samples_per_rank = 0;
    CHECK_THROWS_AS(run_campaign(c), ContractViolation);
    c.samples_per_rank = 10;
    c.bins_ln = 0;
    CHECK_THROWS_AS(validate(c), ContractViolation);
    c.bins_ln = 10;
    c.ranks = {5};
    CHECK_THROWS_AS(validate(c), ContractViolation);
    c.ranks = {1, 1};
    CHECK_THROWS_AS(validate(c), ContractViolation);
    c.ranks = {1};
    c.attacks = {};
    CHECK_THROWS_AS(validate(c), ContractViolation);
    c.attacks = {keyrate::Attack::ca};
    c.chsh_thresholds = {2.0};
    CHECK_THROWS_AS(validate(c), ContractViolation);
    c.chsh_thresholds = {2.5};
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("single-sample campaign") {
    CampaignConfig c;
    c.samples_per_rank = 1;
    c.ranks = {1};
    const auto s = run_campaign(c);
    REQUIRE(s.ranks.size() == 1);
    const RankSummary& r = s.rank(1);
    CHECK(r.n_total == 1);
    for (auto v : {r.n_entangled, r.n_bell_nonlocal, r.n_positive_osca, r.n_positive_ca}) CHECK(v <= 1);
    CHECK_THROWS_AS(static_cast<void>(s.rank(2)), ContractViolation);
}

TEST_CASE("campaign counters match a direct per-sample loop") {
    CampaignConfig c;
    c.samples_per_rank = 20000;
    c.seed = 77;
    c.workers = 2;
    c.chsh_thresholds = {2.5, std::nextafter(2.0 + resources::kBellThreshold, 3.0), resources::kTsirelson};
    std::vector<SampleRecord> records;
    const auto s = run_campaign(c, [&](const SampleRecord& r) { records.push_back(r); });
    CHECK(records.size() == 4 * c.samples_per_rank);
    std::size_t at = 0;
    for (int rank = 1; rank <= 4; ++rank) {
        const RankSummary& r = s.rank(rank);
        std::uint64_t ent = 0, bell = 0, po = 0, pc = 0, ln5 = 0, s25 = 0;
        double so = 0, sc = 0;
        std::vector<double> lns, ss;
        for (std::uint64_t i = 0; i < c.samples_per_rank; ++i, ++at) {
            const auto st = stategen::generate_by_partial_trace({rank, c.seed, i});
            const auto res = resources::analyze(st);
            const auto k = keyrate::evaluate(res);
            ent += res.is_entangled;
            bell += res.is_bell_nonlocal;
            po += k.positive_osca;
            pc += k.positive_ca;
            ln5 += res.log_negativity >= 0.5;
            s25 += res.chsh_value >= 2.5;
            if (k.positive_osca) so += k.r_smin;
            if (k.positive_ca) sc += k.r_cmin;
            if (res.is_entangled) lns.push_back(std::min(1.0, res.log_negativity));
            if (res.is_bell_nonlocal) ss.push_back(res.chsh_value);
            const SampleRecord& rec = records[at];
            CHECK(rec.rank == rank);
            CHECK(rec.sample_index == i);
            CHECK(std::abs(rec.negativity - res.negativity) < 1e-12);
            CHECK(std::abs(rec.chsh_value - res.chsh_value) < 1e-12);
            CHECK(rec.positive_ca == k.positive_ca);
        }
        CHECK(r.n_total == c.samples_per_rank);
        CHECK(r.n_entangled == ent);
        CHECK(r.n_bell_nonlocal == bell);
        CHECK(r.n_positive_osca == po);
        CHECK(r.n_positive_ca == pc);
        CHECK(r.ln_at_least.at(0.5) == ln5);
        CHECK(r.chsh_at_least.at(2.5) == s25);
        CHECK(std::abs(r.sum_r_osca - so) < 1e-9);
        CHECK(std::abs(r.sum_r_ca - sc) < 1e-9);
        if (po > 0) CHECK(std::abs(*r.avg_r_osca - so / po) < 1e-12);
        CHECK(r.ln_histogram.counts == normalized_distribution(lns, ln_edges(10)).counts);
        CHECK(r.bell_histogram.counts == normalized_distribution(ss, bell_edges(10)).counts);

        // Structural invariants.
        CHECK(total(r.ln_histogram.counts) == r.n_entangled);
        CHECK(total(r.bell_histogram.counts) == r.n_bell_nonlocal);
        CHECK(r.n_bell_nonlocal <= r.n_entangled);
        CHECK(r.n_positive_ca <= r.n_positive_osca);
        CHECK(r.n_positive_osca <= r.n_bell_nonlocal);
        CHECK(fraction_with_ln_at_least(r, 0.5) == static_cast<double>(ln5) / c.samples_per_rank);
        CHECK(fraction_with_chsh_at_least(r, std::nextafter(2.0 + resources::kBellThreshold, 3.0)) ==
              static_cast<double>(r.n_bell_nonlocal) / c.samples_per_rank);
        CHECK(fraction_with_chsh_at_least(r, resources::kTsirelson) == 0.0);
        CHECK(fraction_with_ln_at_least(r, 1.0) <= 1.0 / c.samples_per_rank);
        CHECK_THROWS_AS(fraction_with_ln_at_least(r, 0.3), ContractViolation);
    }
    CHECK(s.rank(1).n_bell_nonlocal == s.rank(1).n_entangled);
}

TEST_CASE("campaign results do not depend on the worker count") {
    CampaignConfig c;
    c.samples_per_rank = 3 * kBlockSize + 123;
    c.seed = 2024;
    c.workers = 1;
    const auto one = run_campaign(c);
    for (int w : {2, 3, 8}) {
        c.workers = w;
        const auto many = run_campaign(c);
        CHECK(many.workers_used == w);
        for (std::size_t i = 0; i < one.ranks.size(); ++i) CHECK(same_rank(one.ranks[i], many.ranks[i]));
    }
}

TEST_CASE("numeric failures name the offending sample") {
    CampaignConfig c;
    c.samples_per_rank = 2 * kBlockSize;
    c.ranks = {2};
    c.jacobi.max_sweeps = 0;
    for (int w : {1, 4}) {
        c.workers = w;
        try {
            run_campaign(c);
            FAIL("expected a numeric integrity failure");
        } catch (const NumericIntegrityError& e) {
            CHECK(std::string(e.what()).find("rank 2 sample_index 0:") == 0);
        }
    }
}

TEST_CASE("correlation Frobenius norm from planes") {
    for (int rank = 1; rank <= 4; ++rank)
        for (std::uint64_t i = 0; i < 2000; ++i) {
            simd::DensityPlanes p;
            stategen::generate_planes({rank, 4, i}, p, simd::active_kernels());
            const auto t = resources::correlation_matrix(stategen::to_matrix(p));
            double f = 0.0;
            for (double v : t.entries()) f += v * v;
            CHECK(std::abs(correlation_frobenius2(p) - f) < 1e-14);
        }
}

TEST_CASE("screen threshold is a valid lower bound") {
    const double cut_osca = screen_threshold(keyrate::Attack::osca);
    const double cut_ca = screen_threshold(keyrate::Attack::ca);
    CHECK(cut_osca > 1.0);
    CHECK(cut_osca < cut_ca);
    CHECK(cut_ca < 2.0);
    // Werner states have F = 3 p^2 and reach the bound's equality case.
    for (int i = 0; i <= 1000; ++i) {
        const double p = i / 1000.0;
        const auto k = keyrate::evaluate(oracle::werner(p));
        if (k.positive_osca) CHECK(3 * p * p >= cut_osca);
        if (k.positive_ca) CHECK(3 * p * p >= cut_ca);
    }
    for (int rank = 1; rank <= 4; ++rank)
        for (std::uint64_t i = 0; i < 20000; ++i) {
            simd::DensityPlanes p;
            stategen::generate_planes({rank, 41, i}, p, simd::active_kernels());
            const auto k = keyrate::evaluate(stategen::to_matrix(p));
            const double f = correlation_frobenius2(p);
            if (k.positive_osca) CHECK(f >= cut_osca);
            if (k.positive_ca) CHECK(f >= cut_ca);
        }
}

TEST_CASE("envelope scan") {
    EnvelopeConfig c;
    c.ranks = {2, 3};
    c.samples_per_rank = 60000;
    c.seed = 9;
    const auto screened = run_envelope(c);
    c.screen = false;
    c.workers = 3;
    const auto full = run_envelope(c);
    for (int rank : {2, 3}) {
        const auto& a = screened.rank(rank);
        const auto& b = full.rank(rank);
        CHECK(a.n_sampled == c.samples_per_rank);
        CHECK(b.n_screened_out == 0);
        CHECK(a.n_screened_out > a.n_sampled / 2);
        for (auto at : {keyrate::Attack::osca, keyrate::Attack::ca}) {
            const auto& sa = a.attack(at);
            const auto& sb = b.attack(at);
            CHECK(sa.n_positive == sb.n_positive);
            CHECK(sa.n_positive > 0);
            CHECK(sa.n_inside == sa.n_positive);
            CHECK(sa.inside_fraction() == 1.0);
            REQUIRE(sa.points.size() == sb.points.size());
            for (std::size_t i = 0; i < sa.points.size(); ++i) {
                CHECK(sa.points[i].sample_index == sb.points[i].sample_index);
                CHECK(same_bits(sa.points[i].verdict.r_state, sb.points[i].verdict.r_state));
            }
            CHECK(sa.cut_fraction_of_positive() >= a.cut_fraction_of_sampled(at));
        }
        // Positives match the campaign's counters on the same streams.
        CampaignConfig cc;
        cc.samples_per_rank = c.samples_per_rank;
        cc.seed = c.seed;
        cc.ranks = {rank};
        const auto camp = run_campaign(cc);
        CHECK(camp.rank(rank).n_positive_osca == a.attack(keyrate::Attack::osca).n_positive);
        CHECK(camp.rank(rank).n_positive_ca == a.attack(keyrate::Attack::ca).n_positive);
    }

    EnvelopeConfig t;
    t.ranks = {2};
    t.samples_per_rank = 10000000;
    t.target_positive = 500;
    t.workers = 2;
    const auto stopped = run_envelope(t);
    const auto& r = stopped.rank(2);
    CHECK(r.n_sampled % kBlockSize == 0);
    CHECK(r.n_sampled < t.samples_per_rank);
    CHECK(r.attack(keyrate::Attack::ca).n_positive >= 500);
    t.workers = 1;
    CHECK(run_envelope(t).rank(2).n_sampled == r.n_sampled);

    EnvelopeConfig bad;
    bad.ranks = {1};
    CHECK_THROWS_AS(validate(bad), ContractViolation);
}
