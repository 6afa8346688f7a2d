// diqkd: Monte Carlo campaigns, family sweeps, envelope scans and invariant
// checks for device-independent key rates of random two-qubit states.
//
// Exit codes: 0 success, 1 failed verification, 2 invalid arguments,
// 3 numeric-integrity failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diqkd/campaign.hpp"
#include "diqkd/errors.hpp"
#include "diqkd/families.hpp"
#include "diqkd/output.hpp"
#include "diqkd/simd/kernels.hpp"
#include "diqkd/verify.hpp"
#include "json.hpp"

namespace {

using namespace diqkd;
using keyrate::Attack;
namespace fs = std::filesystem;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

std::vector<Attack> parse_attacks(const std::vector<std::string>& names) {
    std::vector<Attack> out;
    for (const auto& n : names) {
        if (n == "ca")
            out.push_back(Attack::ca);
        else if (n == "osca")
            out.push_back(Attack::osca);
        else if (n == "both") {
            out.push_back(Attack::osca);
            out.push_back(Attack::ca);
        } else
            throw ContractViolation("attack must be ca, osca or both, got '" + n + "'");
    }
    return out;
}

keyrate::CountingRule parse_counting(const std::string& s) {
    if (s == "require-chsh") return keyrate::CountingRule::require_chsh;
    if (s == "raw") return keyrate::CountingRule::raw_rate_only;
    throw ContractViolation("counting must be require-chsh or raw, got '" + s + "'");
}

int parse_threads(const std::string& s) {
    if (s == "auto") return 0;
    std::size_t used = 0;
    int n = 0;
    try {
        n = std::stoi(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    require(used == s.size() && n >= 1, "threads must be auto or a positive integer, got '" + s + "'");
    return n;
}

std::vector<families::Family> parse_families(const std::string& s) {
    using families::Family;
    if (s == "pure") return {Family::pure};
    if (s == "werner") return {Family::werner};
    if (s == "rank2") return {Family::rank2};
    if (s == "all") return {Family::pure, Family::werner, Family::rank2};
    throw ContractViolation("family must be pure, werner, rank2 or all, got '" + s + "'");
}

void select_simd(const std::string& s) {
    if (s == "auto") return;
    if (s == "scalar") {
        simd::set_active_level(simd::Level::scalar);
        return;
    }
    if (s == "avx2") {
        simd::set_active_level(simd::Level::avx2);
        return;
    }
    throw ContractViolation("simd must be auto, scalar or avx2, got '" + s + "'");
}

fs::path prepare_out(const std::string& dir) {
    const fs::path p(dir);
    std::error_code ec;
    fs::create_directories(p, ec);
    require(fs::is_directory(p), "cannot create output directory " + dir);
    return p;
}

struct CampaignArgs {
    std::vector<int> ranks{1, 2, 3, 4};
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 0;
    std::vector<std::string> attacks{"ca", "osca"};
    int bins_ln = 10;
    int bins_bell = 10;
    std::string counting = "require-chsh";
    std::string threads = "auto";
    std::string out = ".";
    std::string format = "csv";
    bool raw = false;
};

int cmd_campaign(const CampaignArgs& a) {
    campaign::CampaignConfig c;
    c.ranks = a.ranks;
    c.samples_per_rank = a.samples;
    c.seed = a.seed;
    c.attacks = parse_attacks(a.attacks);
    c.bins_ln = a.bins_ln;
    c.bins_bell = a.bins_bell;
    c.counting = parse_counting(a.counting);
    c.workers = parse_threads(a.threads);
    const auto format = output::parse_format(a.format);
    campaign::validate(c);
    const fs::path dir = prepare_out(a.out);

    std::optional<output::RawSampleWriter> raw;
    campaign::SampleSink sink;
    if (a.raw) {
        raw.emplace(dir / ("raw_samples." + std::string(output::format_extension(format))), format);
        sink = [&raw](const campaign::SampleRecord& r) { raw->write(r); };
    }
    const auto s = campaign::run_campaign(c, sink);
    if (raw) raw->close();

    output::write_record_set(dir, output::table1_records(s), format);
    output::write_record_set(dir, output::histogram_records(s, output::Kind::ln_hist), format);
    output::write_record_set(dir, output::histogram_records(s, output::Kind::bell_hist), format);
    output::write_text(dir / "summary.json", output::campaign_summary_json(s));
    output::write_text(dir / "timing.json", output::campaign_timing_json(s));

    std::printf("%-5s %10s %12s %12s %12s %12s %10s %10s\n", "rank", "n_total", "entangled", "bell", "pos_osca",
                "pos_ca", "avg_osca", "avg_ca");
    for (const auto& r : s.ranks)
        std::printf("%-5d %10llu %12.6f %12.6f %12.6f %12.6f %10.4f %10.4f\n", r.rank,
                    static_cast<unsigned long long>(r.n_total), r.n_entangled / static_cast<double>(r.n_total),
                    r.n_bell_nonlocal / static_cast<double>(r.n_total),
                    r.n_positive_osca / static_cast<double>(r.n_total),
                    r.n_positive_ca / static_cast<double>(r.n_total), r.avg_r_osca.value_or(0.0),
                    r.avg_r_ca.value_or(0.0));
    std::printf("wall %.2f s, %d workers, simd %s, outputs in %s\n", s.wall_seconds, s.workers_used,
                std::string(simd::level_name(simd::active_level())).c_str(), dir.string().c_str());
    return 0;
}

struct FamiliesArgs {
    std::string family = "pure";
    std::vector<std::string> attacks{"osca"};
    double step = 0.01;
    std::string out = ".";
    std::string format = "csv";
};

int cmd_families(const FamiliesArgs& a) {
    const auto fams = parse_families(a.family);
    const auto attacks = parse_attacks(a.attacks);
    const auto format = output::parse_format(a.format);
    require(a.step > 0.0 && a.step <= 1.0, "step must be in (0, 1]");
    const fs::path dir = prepare_out(a.out);
    std::vector<families::SweepRow> rows;
    nlohmann::ordered_json summary = nlohmann::ordered_json::array();
    for (auto f : fams)
        for (auto at : attacks) {
            auto part = families::sweep(f, at, a.step);
            auto js = nlohmann::ordered_json::parse(output::families_summary_json(part));
            nlohmann::ordered_json entry = {{"family", std::string(families::family_name(f))},
                                            {"attack", std::string(keyrate::attack_name(at))},
                                            {"step", output::round_real(a.step)}};
            entry.update(js);
            summary.push_back(entry);
            std::printf("%-7s %-5s rows %zu, both defined %llu, max |closed - pipeline| %s\n",
                        std::string(families::family_name(f)).c_str(), std::string(keyrate::attack_name(at)).c_str(),
                        part.size(), static_cast<unsigned long long>(js["both_defined"].get<std::uint64_t>()),
                        js["max_abs_diff"].is_null() ? "n/a" : output::format_real(js["max_abs_diff"]).c_str());
            rows.insert(rows.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        }
    output::write_record_set(dir, output::family_sweep_records(rows), format);
    output::write_text(dir / "families_summary.json", summary.dump(2) + "\n");
    return 0;
}

struct EnvelopeArgs {
    std::vector<int> ranks{2, 3, 4};
    std::uint64_t samples = 100000;
    std::uint64_t seed = 0;
    std::vector<std::string> attacks{"osca"};
    std::optional<std::uint64_t> target;
    std::string threads = "auto";
    std::string out = ".";
    std::string format = "csv";
    bool controls = false;
    bool no_screen = false;
};

nlohmann::ordered_json control_rows(const std::vector<Attack>& attacks) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    struct Control {
        std::string name;
        stategen::TwoQubitState state;
    };
    std::vector<Control> controls;
    for (double p : {0.9, 0.95, 1.0})
        controls.push_back({"werner p=" + output::format_real(p), families::werner_state_matrix({p})});
    for (double th : {1.2, 1.4})
        controls.push_back({"pure theta=" + output::format_real(th), families::pure_state_matrix({th})});
    for (const auto& c : controls)
        for (auto at : attacks) {
            const auto v = families::envelope_check(c.state, at);
            rows.push_back({{"state", c.name},
                            {"attack", std::string(keyrate::attack_name(at))},
                            {"negativity", output::round_real(v.negativity)},
                            {"r_state", output::round_real(v.r_state)},
                            {"r_pure_bound", output::round_real(v.r_pure_at_n)},
                            {"r_werner_bound", output::round_real(v.r_werner_at_n)},
                            {"inside", v.inside},
                            {"at_lower_bound", std::abs(v.r_state - v.r_werner_at_n) <= families::kEnvelopeEpsilon},
                            {"at_upper_bound", std::abs(v.r_state - v.r_pure_at_n) <= families::kEnvelopeEpsilon}});
        }
    return rows;
}

int cmd_envelope(const EnvelopeArgs& a) {
    campaign::EnvelopeConfig c;
    c.ranks = a.ranks;
    c.samples_per_rank = a.samples;
    c.seed = a.seed;
    c.attacks = parse_attacks(a.attacks);
    c.target_positive = a.target;
    c.workers = parse_threads(a.threads);
    c.screen = !a.no_screen;
    const auto format = output::parse_format(a.format);
    campaign::validate(c);
    const fs::path dir = prepare_out(a.out);
    const auto s = campaign::run_envelope(c);

    std::vector<campaign::EnvelopePoint> points;
    for (const auto& r : s.ranks)
        for (const auto& at : r.attacks) points.insert(points.end(), at.points.begin(), at.points.end());
    output::write_record_set(dir, output::envelope_records(points), format);
    auto summary = nlohmann::ordered_json::parse(output::envelope_summary_json(s));
    if (a.controls) summary["controls"] = control_rows(c.attacks);
    output::write_text(dir / "envelope_summary.json", summary.dump(2) + "\n");

    for (const auto& r : s.ranks)
        for (const auto& at : r.attacks)
            std::printf("rank %d %-4s sampled %llu, key-positive %llu, inside %llu (fraction %.6f); "
                        "r >= %.2g: %.4f of key-positive, %.6f of sampled\n",
                        r.rank, std::string(keyrate::attack_name(at.attack)).c_str(),
                        static_cast<unsigned long long>(r.n_sampled), static_cast<unsigned long long>(at.n_positive),
                        static_cast<unsigned long long>(at.n_inside), at.inside_fraction(), c.rate_cut,
                        at.cut_fraction_of_positive(), r.cut_fraction_of_sampled(at.attack));
    if (a.controls)
        for (const auto& row : summary["controls"])
            std::printf("control %-16s %-4s inside=%s lower=%s upper=%s\n", row["state"].get<std::string>().c_str(),
                        row["attack"].get<std::string>().c_str(), row["inside"].get<bool>() ? "true" : "false",
                        row["at_lower_bound"].get<bool>() ? "true" : "false",
                        row["at_upper_bound"].get<bool>() ? "true" : "false");
    std::printf("wall %.2f s, %d workers\n", s.wall_seconds, s.workers_used);
    return 0;
}

int cmd_verify(bool quick, const std::string& fault) {
    verify::VerifyOptions o;
    o.quick = quick;
    o.fault = verify::parse_fault(fault);
    const auto report = verify::run_verify(o, std::cout);
    if (const auto* f = report.first_failure()) {
        std::cout << "first counterexample (" << f->name << "): " << f->counterexample << "\n";
        return kExitVerifyFailed;
    }
    std::cout << "all " << report.suites.size() << " suites passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Device-independent key rates of random two-qubit states"};
    app.require_subcommand(1);
    std::string simd_level = "auto";
    app.add_option("--simd", simd_level, "Kernel level: auto, scalar or avx2")->capture_default_str();

    CampaignArgs ca;
    auto* campaign_cmd = app.add_subcommand("campaign", "Monte Carlo campaign over ranks 1-4");
    campaign_cmd->add_option("--ranks", ca.ranks, "Comma-separated ranks")->delimiter(',')->capture_default_str();
    campaign_cmd->add_option("--samples", ca.samples, "Samples per rank")->capture_default_str();
    campaign_cmd->add_option("--seed", ca.seed, "64-bit seed")->capture_default_str();
    campaign_cmd->add_option("--attacks", ca.attacks, "ca, osca or both")->delimiter(',')->capture_default_str();
    campaign_cmd->add_option("--bins-ln", ca.bins_ln, "LN histogram bins")->capture_default_str();
    campaign_cmd->add_option("--bins-bell", ca.bins_bell, "CHSH histogram bins")->capture_default_str();
    campaign_cmd->add_option("--counting", ca.counting, "require-chsh or raw")->capture_default_str();
    campaign_cmd->add_option("--threads", ca.threads, "auto or a worker count")->capture_default_str();
    campaign_cmd->add_option("--out", ca.out, "Output directory")->capture_default_str();
    campaign_cmd->add_option("--format", ca.format, "csv or json")->capture_default_str();
    campaign_cmd->add_flag("--raw", ca.raw, "Also write every sample to raw_samples");

    FamiliesArgs fa;
    auto* families_cmd = app.add_subcommand("families", "Closed-form versus pipeline sweeps");
    families_cmd->add_option("--family", fa.family, "pure, werner, rank2 or all")->capture_default_str();
    families_cmd->add_option("--attack", fa.attacks, "ca, osca or both")->delimiter(',')->capture_default_str();
    families_cmd->add_option("--step", fa.step, "Grid step")->capture_default_str();
    families_cmd->add_option("--out", fa.out, "Output directory")->capture_default_str();
    families_cmd->add_option("--format", fa.format, "csv or json")->capture_default_str();

    EnvelopeArgs ea;
    auto* envelope_cmd = app.add_subcommand("envelope", "Pure/Werner envelope scan of key-positive states");
    envelope_cmd->add_option("--ranks", ea.ranks, "Comma-separated mixed ranks")->delimiter(',')->capture_default_str();
    envelope_cmd->add_option("--samples", ea.samples, "Maximum samples per rank")->capture_default_str();
    envelope_cmd->add_option("--seed", ea.seed, "64-bit seed")->capture_default_str();
    envelope_cmd->add_option("--attack", ea.attacks, "ca, osca or both")->delimiter(',')->capture_default_str();
    envelope_cmd->add_option("--target-positive", ea.target, "Stop a rank once every attack has this many positives");
    envelope_cmd->add_option("--threads", ea.threads, "auto or a worker count")->capture_default_str();
    envelope_cmd->add_option("--out", ea.out, "Output directory")->capture_default_str();
    envelope_cmd->add_option("--format", ea.format, "csv or json")->capture_default_str();
    envelope_cmd->add_flag("--controls", ea.controls, "Add Werner and pure control states to the summary");
    envelope_cmd->add_flag("--no-screen", ea.no_screen, "Run the full pipeline on every sample");

    bool quick = false;
    std::string fault = "none";
    auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suites");
    verify_cmd->add_flag("--quick", quick, "Subset of the suites");
    verify_cmd->add_option("--inject-fault", fault, "Fault to inject: eigen-tolerance")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        select_simd(simd_level);
        if (*campaign_cmd) return cmd_campaign(ca);
        if (*families_cmd) return cmd_families(fa);
        if (*envelope_cmd) return cmd_envelope(ea);
        if (*verify_cmd) return cmd_verify(quick, fault);
    } catch (const ContractViolation& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericIntegrityError& e) {
        std::cerr << "numeric integrity failure: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitUsage;
}
