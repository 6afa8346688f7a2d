#pragma once

// Monte Carlo campaigns over Haar-induced random states of rank 1-4:
// resource and key-rate counters, histograms, and the envelope scan.
//
// Sample i of rank k is always the state drawn from stream (seed, i, k), so
// every number below depends only on (seed, samples, ranks) and never on the
// worker count. Workers process fixed blocks of sample indices; partial
// results are reduced in block order with compensated sums.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "diqkd/families.hpp"
#include "diqkd/keyrate.hpp"
#include "diqkd/resources.hpp"
#include "diqkd/simd/kernels.hpp"

namespace diqkd::campaign {

using keyrate::Attack;
using keyrate::CountingRule;

inline constexpr std::uint64_t kBlockSize = 16384;

/// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x) noexcept;
    void merge(const CompensatedSum& other) noexcept;
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct Histogram {
    std::vector<double> edges;  // bins are (edges[k], edges[k+1]]
    std::vector<std::uint64_t> counts;
    std::vector<double> normalized;  // counts / total
    std::uint64_t total = 0;

    [[nodiscard]] std::size_t bins() const noexcept { return counts.size(); }
    /// Bin k with edges[k] < v <= edges[k+1]; empty when v is out of range.
    [[nodiscard]] std::optional<std::size_t> bin_of(double v) const;
    void add(double v);
    void finalize(std::uint64_t n_total);
};

/// n equal bins over (0, 1].
std::vector<double> ln_edges(int bins);
/// n equal bins over (2, 2 sqrt 2].
std::vector<double> bell_edges(int bins);
Histogram make_histogram(std::vector<double> edges);

/// Bins `values` on `edges`, normalized by the number of values.
Histogram normalized_distribution(const std::vector<double>& values, const std::vector<double>& edges);
/// Same with an explicit normalizing population.
Histogram normalized_distribution(const std::vector<double>& values, const std::vector<double>& edges,
                                  std::uint64_t n_total);

/// Mean of the strictly positive entries; empty when there are none.
std::optional<double> average_positive_keyrate(const std::vector<double>& rates);

/// Two-sided Poisson interval on a count (Garwood, chi-square based).
struct CountInterval {
    double lo = 0.0;
    double hi = 0.0;
};
CountInterval poisson_interval(std::uint64_t count, double confidence = 0.95);

struct CampaignConfig {
    std::uint64_t samples_per_rank = 1000000;
    std::uint64_t seed = 0;
    std::vector<int> ranks{1, 2, 3, 4};
    int bins_ln = 10;
    int bins_bell = 10;
    std::vector<Attack> attacks{Attack::ca, Attack::osca};
    CountingRule counting = CountingRule::require_chsh;
    int workers = 0;  // 0 = hardware concurrency
    /// Thresholds with exact LN >= t and S >= t counters.
    std::vector<double> ln_thresholds{0.5, 1.0};
    std::vector<double> chsh_thresholds{2.5, resources::kTsirelson};
    linalg::JacobiOptions jacobi{};
};

/// Validates a config; throws ContractViolation.
void validate(const CampaignConfig& config);

struct SampleRecord {
    int rank = 1;
    std::uint64_t sample_index = 0;
    double negativity = 0.0;
    double log_negativity = 0.0;
    double chsh_value = 0.0;
    double qber = 0.0;
    double r_smin_raw = 0.0;
    std::optional<double> r_cmin_raw;
    bool is_entangled = false;
    bool is_bell_nonlocal = false;
    bool positive_osca = false;
    bool positive_ca = false;
};

/// Receives every sample record in (rank, sample_index) order.
using SampleSink = std::function<void(const SampleRecord&)>;

struct RankSummary {
    int rank = 1;
    std::uint64_t n_total = 0;
    std::uint64_t n_entangled = 0;
    std::uint64_t n_bell_nonlocal = 0;
    std::uint64_t n_positive_osca = 0;
    std::uint64_t n_positive_ca = 0;
    double sum_r_osca = 0.0;
    double sum_r_ca = 0.0;
    std::optional<double> avg_r_osca;
    std::optional<double> avg_r_ca;
    Histogram ln_histogram;    // entangled states only
    Histogram bell_histogram;  // nonlocal states only
    std::map<double, std::uint64_t> ln_at_least;
    std::map<double, std::uint64_t> chsh_at_least;
    double wall_seconds = 0.0;
    double samples_per_second = 0.0;

    [[nodiscard]] std::uint64_t n_positive(Attack a) const noexcept {
        return a == Attack::ca ? n_positive_ca : n_positive_osca;
    }
    [[nodiscard]] std::optional<double> avg_r(Attack a) const noexcept {
        return a == Attack::ca ? avg_r_ca : avg_r_osca;
    }
};

struct CampaignSummary {
    CampaignConfig config;
    int workers_used = 1;
    std::vector<RankSummary> ranks;
    double wall_seconds = 0.0;

    [[nodiscard]] const RankSummary& rank(int r) const;
};

/// Throws NumericIntegrityError naming the first failing (rank, sample_index).
CampaignSummary run_campaign(const CampaignConfig& config, const SampleSink& sink = {});

/// count(LN >= t) / N0 from the exact counter; t must be a tracked threshold.
double fraction_with_ln_at_least(const RankSummary& r, double threshold);
/// count(S >= t) / N0 from the exact counter; t must be a tracked threshold.
double fraction_with_chsh_at_least(const RankSummary& r, double threshold);
/// Mass of the bins whose upper edge, read as a figure label, is at least t:
/// upper edge >= t - width / 2.
double fraction_from_bin_labels(const Histogram& h, double threshold);

// ---------------------------------------------------------------- envelope

struct EnvelopeConfig {
    std::vector<int> ranks{2, 3, 4};
    std::uint64_t samples_per_rank = 100000;
    std::uint64_t seed = 0;
    std::vector<Attack> attacks{Attack::osca, Attack::ca};
    /// When set, scanning of a rank stops after the first block at which
    /// every requested attack has this many key-positive samples, or at
    /// samples_per_rank, whichever comes first.
    std::optional<std::uint64_t> target_positive;
    int workers = 0;
    /// Skip the full pipeline for states whose |T|_F^2 bound rules out a
    /// positive rate for every requested attack. Does not change results.
    bool screen = true;
    double rate_cut = 0.1;
};

void validate(const EnvelopeConfig& config);

struct EnvelopePoint {
    int rank = 2;
    std::uint64_t sample_index = 0;
    families::EnvelopeVerdict verdict;
};

struct EnvelopeAttackSummary {
    Attack attack = Attack::osca;
    std::uint64_t n_positive = 0;
    std::uint64_t n_inside = 0;
    std::uint64_t n_rate_at_least_cut = 0;
    std::vector<EnvelopePoint> points;  // sample order

    [[nodiscard]] double inside_fraction() const noexcept;
    /// Denominator: key-positive samples.
    [[nodiscard]] double cut_fraction_of_positive() const noexcept;
};

struct EnvelopeRankSummary {
    int rank = 2;
    std::uint64_t n_sampled = 0;
    std::uint64_t n_screened_out = 0;
    std::vector<EnvelopeAttackSummary> attacks;
    double wall_seconds = 0.0;

    [[nodiscard]] const EnvelopeAttackSummary& attack(Attack a) const;
    /// Denominator: all sampled states.
    [[nodiscard]] double cut_fraction_of_sampled(Attack a) const;
};

struct EnvelopeSummary {
    EnvelopeConfig config;
    int workers_used = 1;
    std::vector<EnvelopeRankSummary> ranks;
    double wall_seconds = 0.0;

    [[nodiscard]] const EnvelopeRankSummary& rank(int r) const;
};

EnvelopeSummary run_envelope(const EnvelopeConfig& config);

/// Smallest |T|_F^2 at which the attack's rate bound becomes positive. Every
/// state with a positive raw rate has |T|_F^2 >= this value.
double screen_threshold(Attack attack);
/// |T|_F^2 of the density matrix in plane form.
double correlation_frobenius2(const simd::DensityPlanes& rho);

}  // namespace diqkd::campaign
