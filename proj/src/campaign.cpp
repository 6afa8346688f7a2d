#include "diqkd/campaign.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "diqkd/errors.hpp"
#include "diqkd/stategen.hpp"

namespace diqkd::campaign {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void require_ranks(const std::vector<int>& ranks) {
    require(!ranks.empty(), "at least one rank is required");
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        require(ranks[i] >= stategen::kMinRank && ranks[i] <= stategen::kMaxRank,
                "ranks must be in {1,2,3,4}, got " + std::to_string(ranks[i]));
        for (std::size_t j = 0; j < i; ++j) require(ranks[i] != ranks[j], "ranks must not repeat");
    }
}

void require_attacks(const std::vector<Attack>& attacks) {
    require(!attacks.empty(), "at least one attack is required");
    require(attacks.size() <= 2 && (attacks.size() == 1 || attacks[0] != attacks[1]), "attacks must not repeat");
}

// Runs process(b) for b in [0, n_blocks) on `workers` threads and hands the
// results to consume(b, result) on the calling thread in block order.
// consume returns false to stop early. An exception from the lowest failing
// block is rethrown after all workers have joined.
template <class Result, class Process, class Consume>
void ordered_blocks(std::uint64_t n_blocks, int workers, Process process, Consume consume) {
    if (workers <= 1 || n_blocks <= 1) {
        for (std::uint64_t b = 0; b < n_blocks; ++b)
            if (!consume(b, process(b))) return;
        return;
    }
    const std::uint64_t window = 4 * static_cast<std::uint64_t>(workers);
    std::mutex m;
    std::condition_variable cv;
    std::map<std::uint64_t, Result> ready;
    std::uint64_t next = 0;
    std::uint64_t limit = n_blocks;  // blocks >= limit are not started
    std::uint64_t consumed = 0;
    std::uint64_t error_block = n_blocks;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            std::uint64_t b;
            {
                std::unique_lock lock(m);
                cv.wait(lock, [&] { return next >= limit || next < consumed + window; });
                if (next >= limit) return;
                b = next++;
            }
            try {
                Result r = process(b);
                std::lock_guard lock(m);
                ready.emplace(b, std::move(r));
            } catch (...) {
                std::lock_guard lock(m);
                if (b < error_block) {
                    error_block = b;
                    error = std::current_exception();
                }
                limit = std::min(limit, b);
            }
            cv.notify_all();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);

    auto stop_and_join = [&] {
        {
            std::lock_guard lock(m);
            limit = 0;
        }
        cv.notify_all();
        for (auto& t : pool) t.join();
    };
    try {
        for (std::uint64_t b = 0; b < n_blocks; ++b) {
            Result r;
            {
                std::unique_lock lock(m);
                cv.wait(lock, [&] { return ready.count(b) > 0 || error_block <= b; });
                if (error_block <= b) break;
                r = std::move(ready.at(b));
                ready.erase(b);
            }
            const bool more = consume(b, std::move(r));
            {
                std::lock_guard lock(m);
                consumed = b + 1;
                if (!more) limit = std::min(limit, b + 1);
            }
            cv.notify_all();
            if (!more) break;
        }
    } catch (...) {
        stop_and_join();
        throw;
    }
    stop_and_join();
    if (error) std::rethrow_exception(error);
}

struct Evaluated {
    resources::ResourceReport res;
    keyrate::KeyRateReport key;
};

[[noreturn]] void rethrow_with_sample(int rank, std::uint64_t index) {
    try {
        throw;
    } catch (const std::exception& e) {
        throw NumericIntegrityError("rank " + std::to_string(rank) + " sample_index " + std::to_string(index) + ": " +
                                    e.what());
    }
}

Evaluated evaluate_planes(const simd::DensityPlanes& planes, const linalg::JacobiOptions& jacobi,
                          CountingRule rule) {
    Evaluated e;
    e.res = resources::analyze(stategen::to_matrix(planes), jacobi);
    e.key = keyrate::evaluate(e.res, rule);
    return e;
}

struct Partial {
    std::uint64_t n = 0, entangled = 0, nonlocal = 0, pos_osca = 0, pos_ca = 0;
    CompensatedSum sum_osca, sum_ca;
    std::vector<std::uint64_t> ln_bins, bell_bins, ln_thr, chsh_thr;
    std::vector<SampleRecord> records;
};

void add_counts(std::vector<std::uint64_t>& into, const std::vector<std::uint64_t>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i] += from[i];
}

std::uint64_t tracked(const std::map<double, std::uint64_t>& m, double threshold, const char* what) {
    const auto it = m.find(threshold);
    require(it != m.end(), std::string(what) + " threshold " + std::to_string(threshold) + " is not tracked");
    return it->second;
}

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

void CompensatedSum::add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
}

std::optional<std::size_t> Histogram::bin_of(double v) const {
    if (edges.size() < 2 || !(v > edges.front()) || !(v <= edges.back())) return std::nullopt;
    const auto it = std::lower_bound(edges.begin(), edges.end(), v);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

void Histogram::add(double v) {
    if (const auto k = bin_of(v)) ++counts[*k];
}

void Histogram::finalize(std::uint64_t n_total) {
    total = n_total;
    normalized.assign(counts.size(), 0.0);
    for (std::size_t k = 0; k < counts.size(); ++k) normalized[k] = ratio(counts[k], n_total);
}

std::vector<double> ln_edges(int bins) {
    require(bins >= 1, "bin count must be >= 1");
    std::vector<double> e(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = static_cast<double>(i) / bins;
    return e;
}

std::vector<double> bell_edges(int bins) {
    require(bins >= 1, "bin count must be >= 1");
    std::vector<double> e(static_cast<std::size_t>(bins) + 1);
    const double width = resources::kTsirelson - 2.0;
    for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = 2.0 + width * i / bins;
    e.back() = resources::kTsirelson;
    return e;
}

Histogram make_histogram(std::vector<double> edges) {
    require(edges.size() >= 2, "histogram needs at least two edges");
    for (std::size_t i = 1; i < edges.size(); ++i) require(edges[i] > edges[i - 1], "edges must increase strictly");
    Histogram h;
    h.counts.assign(edges.size() - 1, 0);
    h.normalized.assign(edges.size() - 1, 0.0);
    h.edges = std::move(edges);
    return h;
}

Histogram normalized_distribution(const std::vector<double>& values, const std::vector<double>& edges) {
    return normalized_distribution(values, edges, values.size());
}

Histogram normalized_distribution(const std::vector<double>& values, const std::vector<double>& edges,
                                  std::uint64_t n_total) {
    Histogram h = make_histogram(edges);
    for (double v : values) h.add(v);
    h.finalize(n_total);
    return h;
}

std::optional<double> average_positive_keyrate(const std::vector<double>& rates) {
    CompensatedSum s;
    std::uint64_t n = 0;
    for (double r : rates)
        if (r > 0.0) {
            s.add(r);
            ++n;
        }
    if (n == 0) return std::nullopt;
    return s.value() / static_cast<double>(n);
}

CountInterval poisson_interval(std::uint64_t count, double confidence) {
    require(confidence > 0.0 && confidence < 1.0, "confidence must be in (0, 1)");
    const double tail = (1.0 - confidence) / 2.0;
    const double k = static_cast<double>(count);
    CountInterval ci;
    ci.lo = count == 0 ? 0.0 : boost::math::gamma_p_inv(k, tail);
    ci.hi = boost::math::gamma_p_inv(k + 1.0, 1.0 - tail);
    return ci;
}

void validate(const CampaignConfig& c) {
    require(c.samples_per_rank >= 1, "samples per rank must be >= 1");
    require(c.bins_ln >= 1 && c.bins_bell >= 1, "bin counts must be >= 1");
    require(c.workers >= 0, "worker count must be >= 0 (0 = auto)");
    require_ranks(c.ranks);
    require_attacks(c.attacks);
    for (double t : c.ln_thresholds) require(t > 0.0 && t <= 1.0, "LN thresholds must be in (0, 1]");
    for (double t : c.chsh_thresholds)
        require(t > 2.0 && t <= resources::kTsirelson, "CHSH thresholds must be in (2, 2 sqrt 2]");
}

const RankSummary& CampaignSummary::rank(int r) const {
    for (const auto& s : ranks)
        if (s.rank == r) return s;
    throw ContractViolation("rank " + std::to_string(r) + " is not part of this campaign");
}

CampaignSummary run_campaign(const CampaignConfig& config, const SampleSink& sink) {
    validate(config);
    const auto t_start = Clock::now();
    CampaignSummary out;
    out.config = config;
    out.workers_used = resolve_workers(config.workers);
    const simd::KernelTable& kernels = simd::active_kernels();
    const auto ln_e = ln_edges(config.bins_ln);
    const auto bell_e = bell_edges(config.bins_bell);

    for (int rank : config.ranks) {
        const auto t_rank = Clock::now();
        RankSummary rs;
        rs.rank = rank;
        rs.ln_histogram = make_histogram(ln_e);
        rs.bell_histogram = make_histogram(bell_e);
        const std::uint64_t n = config.samples_per_rank;
        const std::uint64_t n_blocks = (n + kBlockSize - 1) / kBlockSize;

        auto process = [&](std::uint64_t b) {
            Partial p;
            p.ln_bins.assign(ln_e.size() - 1, 0);
            p.bell_bins.assign(bell_e.size() - 1, 0);
            p.ln_thr.assign(config.ln_thresholds.size(), 0);
            p.chsh_thr.assign(config.chsh_thresholds.size(), 0);
            const std::uint64_t lo = b * kBlockSize, hi = std::min(n, lo + kBlockSize);
            if (sink) p.records.reserve(hi - lo);
            simd::DensityPlanes planes;
            for (std::uint64_t i = lo; i < hi; ++i) {
                Evaluated e;
                try {
                    stategen::generate_planes({rank, config.seed, i}, planes, kernels);
                    e = evaluate_planes(planes, config.jacobi, config.counting);
                } catch (...) {
                    rethrow_with_sample(rank, i);
                }
                ++p.n;
                if (e.res.is_entangled) {
                    ++p.entangled;
                    if (const auto k = rs.ln_histogram.bin_of(std::min(e.res.log_negativity, ln_e.back())))
                        ++p.ln_bins[*k];
                }
                if (e.res.is_bell_nonlocal) {
                    ++p.nonlocal;
                    if (const auto k = rs.bell_histogram.bin_of(e.res.chsh_value)) ++p.bell_bins[*k];
                }
                if (e.key.positive_osca) {
                    ++p.pos_osca;
                    p.sum_osca.add(e.key.r_smin);
                }
                if (e.key.positive_ca) {
                    ++p.pos_ca;
                    p.sum_ca.add(e.key.r_cmin);
                }
                for (std::size_t t = 0; t < config.ln_thresholds.size(); ++t)
                    p.ln_thr[t] += e.res.log_negativity >= config.ln_thresholds[t];
                for (std::size_t t = 0; t < config.chsh_thresholds.size(); ++t)
                    p.chsh_thr[t] += e.res.chsh_value >= config.chsh_thresholds[t];
                if (sink)
                    p.records.push_back({rank, i, e.res.negativity, e.res.log_negativity, e.res.chsh_value,
                                         e.key.qber, e.key.r_smin_raw, e.key.r_cmin_raw, e.res.is_entangled,
                                         e.res.is_bell_nonlocal, e.key.positive_osca, e.key.positive_ca});
            }
            return p;
        };

        Partial total;
        total.ln_bins.assign(ln_e.size() - 1, 0);
        total.bell_bins.assign(bell_e.size() - 1, 0);
        total.ln_thr.assign(config.ln_thresholds.size(), 0);
        total.chsh_thr.assign(config.chsh_thresholds.size(), 0);
        auto consume = [&](std::uint64_t, Partial&& p) {
            total.n += p.n;
            total.entangled += p.entangled;
            total.nonlocal += p.nonlocal;
            total.pos_osca += p.pos_osca;
            total.pos_ca += p.pos_ca;
            total.sum_osca.merge(p.sum_osca);
            total.sum_ca.merge(p.sum_ca);
            add_counts(total.ln_bins, p.ln_bins);
            add_counts(total.bell_bins, p.bell_bins);
            add_counts(total.ln_thr, p.ln_thr);
            add_counts(total.chsh_thr, p.chsh_thr);
            if (sink)
                for (const auto& r : p.records) sink(r);
            return true;
        };
        ordered_blocks<Partial>(n_blocks, out.workers_used, process, consume);

        rs.n_total = total.n;
        rs.n_entangled = total.entangled;
        rs.n_bell_nonlocal = total.nonlocal;
        rs.n_positive_osca = total.pos_osca;
        rs.n_positive_ca = total.pos_ca;
        rs.sum_r_osca = total.sum_osca.value();
        rs.sum_r_ca = total.sum_ca.value();
        if (total.pos_osca > 0) rs.avg_r_osca = rs.sum_r_osca / static_cast<double>(total.pos_osca);
        if (total.pos_ca > 0) rs.avg_r_ca = rs.sum_r_ca / static_cast<double>(total.pos_ca);
        rs.ln_histogram.counts = total.ln_bins;
        rs.bell_histogram.counts = total.bell_bins;
        rs.ln_histogram.finalize(total.n);
        rs.bell_histogram.finalize(total.n);
        for (std::size_t t = 0; t < config.ln_thresholds.size(); ++t)
            rs.ln_at_least[config.ln_thresholds[t]] = total.ln_thr[t];
        for (std::size_t t = 0; t < config.chsh_thresholds.size(); ++t)
            rs.chsh_at_least[config.chsh_thresholds[t]] = total.chsh_thr[t];
        rs.wall_seconds = seconds_since(t_rank);
        rs.samples_per_second = rs.wall_seconds > 0 ? static_cast<double>(n) / rs.wall_seconds : 0.0;
        out.ranks.push_back(std::move(rs));
    }
    out.wall_seconds = seconds_since(t_start);
    return out;
}

double fraction_with_ln_at_least(const RankSummary& r, double threshold) {
    require(threshold > 0.0 && threshold <= 1.0, "LN threshold must be in (0, 1]");
    return ratio(tracked(r.ln_at_least, threshold, "LN"), r.n_total);
}

double fraction_with_chsh_at_least(const RankSummary& r, double threshold) {
    require(threshold > 2.0 && threshold <= resources::kTsirelson, "CHSH threshold must be in (2, 2 sqrt 2]");
    return ratio(tracked(r.chsh_at_least, threshold, "CHSH"), r.n_total);
}

double fraction_from_bin_labels(const Histogram& h, double threshold) {
    require(h.edges.size() == h.counts.size() + 1, "histogram edges and counts disagree");
    std::uint64_t n = 0;
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        const double width = h.edges[k + 1] - h.edges[k];
        if (h.edges[k + 1] >= threshold - width / 2) n += h.counts[k];
    }
    return ratio(n, h.total);
}

// ---------------------------------------------------------------- envelope

double correlation_frobenius2(const simd::DensityPlanes& rho) {
    // T_ij = sum_r M_rc rho_cr with M = sigma_i (x) sigma_j, c = r xor flip.
    // sigma_x, sigma_y flip the bit; sigma_y and sigma_z carry a sign, sigma_y a factor i.
    double f = 0.0;
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            const int flip = (i != 3 ? 2 : 0) | (j != 3 ? 1 : 0);
            double t = 0.0;
            for (int r = 0; r < 4; ++r) {
                const int c = r ^ flip;
                const int ra = r >> 1, rb = r & 1;
                // Element of sigma on one qubit at row bit `rbit`: x -> 1, y -> (rbit ? i : -i), z -> (rbit ? -1 : 1).
                double sign = 1.0;
                int i_power = 0;
                auto apply = [&](int p, int rbit) {
                    if (p == 2) {
                        ++i_power;
                        if (!rbit) sign = -sign;
                    } else if (p == 3 && rbit) {
                        sign = -sign;
                    }
                };
                apply(i, ra);
                apply(j, rb);
                const auto idx = static_cast<std::size_t>(4 * c + r);
                // sign * i^k * rho_cr, real part.
                switch (i_power) {
                    case 0: t += sign * rho.re[idx]; break;
                    case 1: t -= sign * rho.im[idx]; break;
                    default: t -= sign * rho.re[idx]; break;
                }
            }
            f += t * t;
        }
    return f;
}

double screen_threshold(Attack attack) {
    // Upper bounds on the rate from F = |T|_F^2 >= s1^2 + s2^2:
    // Q >= (2 - sqrt(2F)) / 4 and S / 2 <= sqrt(F).
    auto bound = [attack](double f) {
        const double q_lo = std::clamp((2.0 - std::sqrt(2.0 * f)) / 4.0, 0.0, 0.5);
        if (attack == Attack::osca) return 1.0 - 2.0 * keyrate::binary_entropy(q_lo);
        if (f < 1.0) return -1.0;
        const double root = std::sqrt(std::min(f, 2.0) - 1.0);
        return 1.0 - keyrate::binary_entropy(q_lo) - keyrate::binary_entropy((1.0 + root) / 2.0);
    };
    double lo = 0.0, hi = 3.0;  // bound(lo) <= 0 < bound(hi)
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bound(mid) > 0.0 ? hi : lo) = mid;
    }
    return lo;
}

void validate(const EnvelopeConfig& c) {
    require(c.samples_per_rank >= 1, "samples per rank must be >= 1");
    require(c.workers >= 0, "worker count must be >= 0 (0 = auto)");
    require_ranks(c.ranks);
    for (int r : c.ranks) require(r >= 2, "envelope ranks must be mixed (2, 3, 4)");
    require_attacks(c.attacks);
    require(!c.target_positive || *c.target_positive >= 1, "target positive count must be >= 1");
}

double EnvelopeAttackSummary::inside_fraction() const noexcept { return ratio(n_inside, n_positive); }
double EnvelopeAttackSummary::cut_fraction_of_positive() const noexcept {
    return ratio(n_rate_at_least_cut, n_positive);
}

const EnvelopeAttackSummary& EnvelopeRankSummary::attack(Attack a) const {
    for (const auto& s : attacks)
        if (s.attack == a) return s;
    throw ContractViolation("attack " + std::string(keyrate::attack_name(a)) + " was not scanned");
}

double EnvelopeRankSummary::cut_fraction_of_sampled(Attack a) const {
    return ratio(attack(a).n_rate_at_least_cut, n_sampled);
}

const EnvelopeRankSummary& EnvelopeSummary::rank(int r) const {
    for (const auto& s : ranks)
        if (s.rank == r) return s;
    throw ContractViolation("rank " + std::to_string(r) + " was not scanned");
}

EnvelopeSummary run_envelope(const EnvelopeConfig& config) {
    validate(config);
    const auto t_start = Clock::now();
    EnvelopeSummary out;
    out.config = config;
    out.workers_used = resolve_workers(config.workers);
    const simd::KernelTable& kernels = simd::active_kernels();
    double cut = 3.0;
    for (Attack a : config.attacks) cut = std::min(cut, screen_threshold(a));
    cut -= 1e-9;

    struct Block {
        std::uint64_t n = 0, screened = 0;
        std::vector<EnvelopeAttackSummary> attacks;
    };

    for (int rank : config.ranks) {
        const auto t_rank = Clock::now();
        EnvelopeRankSummary rs;
        rs.rank = rank;
        for (Attack a : config.attacks) rs.attacks.push_back({a, 0, 0, 0, {}});
        const std::uint64_t n = config.samples_per_rank;
        const std::uint64_t n_blocks = (n + kBlockSize - 1) / kBlockSize;

        auto process = [&](std::uint64_t b) {
            Block blk;
            for (Attack a : config.attacks) blk.attacks.push_back({a, 0, 0, 0, {}});
            const std::uint64_t lo = b * kBlockSize, hi = std::min(n, lo + kBlockSize);
            simd::DensityPlanes planes;
            for (std::uint64_t i = lo; i < hi; ++i) {
                ++blk.n;
                try {
                    stategen::generate_planes({rank, config.seed, i}, planes, kernels);
                    if (config.screen && correlation_frobenius2(planes) < cut) {
                        ++blk.screened;
                        continue;
                    }
                    const Evaluated e = evaluate_planes(planes, {}, CountingRule::require_chsh);
                    for (auto& s : blk.attacks) {
                        if (!e.key.positive(s.attack)) continue;
                        const double r = *e.key.raw(s.attack);
                        const auto v = families::envelope_verdict(e.res.negativity, r, s.attack);
                        ++s.n_positive;
                        s.n_inside += v.inside;
                        s.n_rate_at_least_cut += r >= config.rate_cut;
                        s.points.push_back({rank, i, v});
                    }
                } catch (...) {
                    rethrow_with_sample(rank, i);
                }
            }
            return blk;
        };
        auto consume = [&](std::uint64_t, Block&& blk) {
            rs.n_sampled += blk.n;
            rs.n_screened_out += blk.screened;
            bool reached = config.target_positive.has_value();
            for (std::size_t k = 0; k < rs.attacks.size(); ++k) {
                auto& dst = rs.attacks[k];
                auto& src = blk.attacks[k];
                dst.n_positive += src.n_positive;
                dst.n_inside += src.n_inside;
                dst.n_rate_at_least_cut += src.n_rate_at_least_cut;
                dst.points.insert(dst.points.end(), std::make_move_iterator(src.points.begin()),
                                  std::make_move_iterator(src.points.end()));
                if (config.target_positive && dst.n_positive < *config.target_positive) reached = false;
            }
            return !reached;
        };
        ordered_blocks<Block>(n_blocks, out.workers_used, process, consume);
        rs.wall_seconds = seconds_since(t_rank);
        out.ranks.push_back(std::move(rs));
    }
    out.wall_seconds = seconds_since(t_start);
    return out;
}

}  // namespace diqkd::campaign
