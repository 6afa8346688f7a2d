#pragma once

// Flat record sets with frozen column schemas and their CSV / JSON forms.
//
// Reals are written with 12 significant digits, undefined values as an empty
// CSV field or JSON null. CSV follows RFC 4180 quoting with LF line endings;
// JSON is an array of objects whose keys follow the column order.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "diqkd/campaign.hpp"
#include "diqkd/families.hpp"

namespace diqkd::output {

enum class Kind { table1, ln_hist, bell_hist, family_sweep, envelope_points, raw_samples };
enum class Format { csv, json };
enum class ColumnType { integer, real, boolean, text };

struct Column {
    std::string_view name;
    ColumnType type;
};

using Field = std::variant<std::monostate, bool, std::int64_t, double, std::string>;
using Row = std::vector<Field>;

struct OutputRecordSet {
    Kind kind = Kind::table1;
    std::vector<Row> rows;

    bool operator==(const OutputRecordSet&) const = default;
};

std::string_view kind_name(Kind kind) noexcept;
std::string_view format_extension(Format format) noexcept;
Kind parse_kind(std::string_view name);
Format parse_format(std::string_view name);
const std::vector<Column>& columns(Kind kind);

/// %.12g; throws NumericIntegrityError for non-finite values.
std::string format_real(double v);
/// The double that format_real(v) denotes.
double round_real(double v);
/// Copy with every real rounded to 12 significant digits; the fixed point
/// of emit followed by parse.
OutputRecordSet canonical(const OutputRecordSet& rs);

/// Checks each row against the column schema (ContractViolation).
void validate(const OutputRecordSet& rs);

std::string emit(const OutputRecordSet& rs, Format format);
std::string emit_csv(const OutputRecordSet& rs);
std::string emit_json(const OutputRecordSet& rs);
OutputRecordSet parse(std::string_view text, Kind kind, Format format);
OutputRecordSet parse_csv(std::string_view text, Kind kind);
OutputRecordSet parse_json(std::string_view text, Kind kind);

// Record builders.
OutputRecordSet table1_records(const campaign::CampaignSummary& s);
OutputRecordSet histogram_records(const campaign::CampaignSummary& s, Kind kind);
OutputRecordSet family_sweep_records(const std::vector<families::SweepRow>& rows);
OutputRecordSet envelope_records(const std::vector<campaign::EnvelopePoint>& points);
Row raw_sample_row(const campaign::SampleRecord& r);

/// Deterministic summaries (no timing) and the timing side file.
std::string campaign_summary_json(const campaign::CampaignSummary& s);
std::string campaign_timing_json(const campaign::CampaignSummary& s);
std::string envelope_summary_json(const campaign::EnvelopeSummary& s);
std::string families_summary_json(const std::vector<families::SweepRow>& rows);

/// Writes `<dir>/<kind>.<ext>`; returns the path.
std::filesystem::path write_record_set(const std::filesystem::path& dir, const OutputRecordSet& rs, Format format);
void write_text(const std::filesystem::path& path, std::string_view text);

/// Streams raw_samples rows to a file without holding them in memory.
class RawSampleWriter {
public:
    RawSampleWriter(const std::filesystem::path& path, Format format);
    ~RawSampleWriter();
    RawSampleWriter(const RawSampleWriter&) = delete;
    RawSampleWriter& operator=(const RawSampleWriter&) = delete;

    void write(const campaign::SampleRecord& r);
    void close();

private:
    std::ofstream out_;
    Format format_;
    bool first_ = true;
    bool closed_ = false;
};

}  // namespace diqkd::output
