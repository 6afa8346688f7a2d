#include "diqkd/output.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "diqkd/errors.hpp"
#include "diqkd/simd/kernels.hpp"
#include "json.hpp"

namespace diqkd::output {

namespace {

using Json = nlohmann::ordered_json;
using CT = ColumnType;

const std::vector<Column> kTable1 = {
    {"rank", CT::integer},           {"n_total", CT::integer},       {"n_entangled", CT::integer},
    {"n_bell_nonlocal", CT::integer}, {"n_pos_osca", CT::integer},    {"n_pos_ca", CT::integer},
    {"avg_r_osca", CT::real},        {"avg_r_ca", CT::real},         {"poisson_lo_ca", CT::real},
    {"poisson_hi_ca", CT::real},
};
const std::vector<Column> kHist = {
    {"rank", CT::integer}, {"bin_lower", CT::real}, {"bin_upper", CT::real}, {"count", CT::integer},
    {"normalized", CT::real},
};
const std::vector<Column> kSweep = {
    {"negativity", CT::real}, {"keyrate_closed_form", CT::real}, {"keyrate_pipeline", CT::real},
    {"abs_diff", CT::real},   {"family", CT::text},              {"attack", CT::text},
    {"param", CT::real},      {"alpha", CT::real},               {"a", CT::real},
    {"a_prime", CT::real},    {"constraint_residual", CT::real}, {"premise_holds", CT::boolean},
};
const std::vector<Column> kEnvelope = {
    {"rank", CT::integer},         {"negativity", CT::real},     {"r_state", CT::real},
    {"r_pure_bound", CT::real},    {"r_werner_bound", CT::real}, {"inside", CT::boolean},
};
const std::vector<Column> kRaw = {
    {"rank", CT::integer},          {"sample_index", CT::integer},   {"negativity", CT::real},
    {"log_negativity", CT::real},   {"chsh_value", CT::real},        {"qber", CT::real},
    {"r_smin_raw", CT::real},       {"r_cmin_raw", CT::real},        {"is_entangled", CT::boolean},
    {"is_bell_nonlocal", CT::boolean}, {"positive_osca", CT::boolean}, {"positive_ca", CT::boolean},
};

Field opt(const std::optional<double>& v) { return v ? Field(*v) : Field(std::monostate{}); }
Field integer(std::uint64_t v) { return Field(static_cast<std::int64_t>(v)); }

Json real_json(double v) { return Json(round_real(v)); }
Json opt_json(const std::optional<double>& v) { return v ? real_json(*v) : Json(nullptr); }

bool fits(const Field& f, ColumnType t) {
    if (std::holds_alternative<std::monostate>(f)) return true;
    switch (t) {
        case CT::integer: return std::holds_alternative<std::int64_t>(f);
        case CT::real: return std::holds_alternative<double>(f) && std::isfinite(std::get<double>(f));
        case CT::boolean: return std::holds_alternative<bool>(f);
        case CT::text: return std::holds_alternative<std::string>(f) && !std::get<std::string>(f).empty();
    }
    return false;
}

std::string field_text(const Field& f) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
            else if constexpr (std::is_same_v<T, double>) return format_real(v);
            else return v;
        },
        f);
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

void append_csv_row(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += csv_quote(cells[i]);
    }
    out += '\n';
}

std::string csv_header(Kind kind) {
    std::vector<std::string> names;
    for (const auto& c : columns(kind)) names.emplace_back(c.name);
    std::string out;
    append_csv_row(out, names);
    return out;
}

std::string csv_row(const Row& row) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (const auto& f : row) cells.push_back(field_text(f));
    std::string out;
    append_csv_row(out, cells);
    return out;
}

Json json_row(Kind kind, const Row& row) {
    const auto& cols = columns(kind);
    Json obj = Json::object();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const std::string key(cols[i].name);
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::monostate>) obj[key] = nullptr;
                else if constexpr (std::is_same_v<T, double>) obj[key] = real_json(v);
                else obj[key] = v;
            },
            row[i]);
    }
    return obj;
}

// Splits RFC 4180 records; quoted fields may contain separators and newlines.
std::vector<std::vector<std::string>> split_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> cur;
    std::string cell;
    bool quoted = false, in_record = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        in_record = true;
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cur.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            cur.push_back(std::move(cell));
            cell.clear();
            records.push_back(std::move(cur));
            cur.clear();
            in_record = false;
        } else {
            cell += c;
        }
    }
    require(!quoted, "CSV: unterminated quoted field");
    if (in_record) {
        cur.push_back(std::move(cell));
        records.push_back(std::move(cur));
    }
    return records;
}

Field parse_cell(const std::string& s, const Column& col) {
    if (s.empty()) return std::monostate{};
    const std::string where = "column " + std::string(col.name) + ": cannot parse '" + s + "'";
    switch (col.type) {
        case CT::integer: {
            std::int64_t v = 0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            require(r.ec == std::errc{} && r.ptr == s.data() + s.size(), where);
            return v;
        }
        case CT::real: {
            double v = 0.0;
            const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
            require(r.ec == std::errc{} && r.ptr == s.data() + s.size() && std::isfinite(v), where);
            return v;
        }
        case CT::boolean:
            require(s == "true" || s == "false", where);
            return s == "true";
        case CT::text: return s;
    }
    return std::monostate{};
}

Field parse_json_value(const Json& v, const Column& col) {
    if (v.is_null()) return std::monostate{};
    const std::string where = "column " + std::string(col.name) + ": unexpected JSON type";
    switch (col.type) {
        case CT::integer:
            require(v.is_number_integer(), where);
            return v.get<std::int64_t>();
        case CT::real:
            require(v.is_number(), where);
            return v.get<double>();
        case CT::boolean:
            require(v.is_boolean(), where);
            return v.get<bool>();
        case CT::text:
            require(v.is_string(), where);
            return v.get<std::string>();
    }
    return std::monostate{};
}

Json attacks_json(const std::vector<keyrate::Attack>& attacks) {
    Json a = Json::array();
    for (auto at : attacks) a.push_back(std::string(keyrate::attack_name(at)));
    return a;
}

bool has_attack(const std::vector<keyrate::Attack>& attacks, keyrate::Attack a) {
    for (auto x : attacks)
        if (x == a) return true;
    return false;
}

Json interval_json(std::uint64_t count) {
    const auto ci = campaign::poisson_interval(count);
    return Json::array({real_json(ci.lo), real_json(ci.hi)});
}

double fraction(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::string_view kind_name(Kind kind) noexcept {
    switch (kind) {
        case Kind::table1: return "table1";
        case Kind::ln_hist: return "ln_hist";
        case Kind::bell_hist: return "bell_hist";
        case Kind::family_sweep: return "family_sweep";
        case Kind::envelope_points: return "envelope_points";
        case Kind::raw_samples: return "raw_samples";
    }
    return "unknown";
}

std::string_view format_extension(Format format) noexcept { return format == Format::csv ? "csv" : "json"; }

Kind parse_kind(std::string_view name) {
    for (Kind k : {Kind::table1, Kind::ln_hist, Kind::bell_hist, Kind::family_sweep, Kind::envelope_points,
                   Kind::raw_samples})
        if (kind_name(k) == name) return k;
    throw ContractViolation("unknown record kind '" + std::string(name) + "'");
}

Format parse_format(std::string_view name) {
    if (name == "csv") return Format::csv;
    if (name == "json") return Format::json;
    throw ContractViolation("format must be csv or json, got '" + std::string(name) + "'");
}

const std::vector<Column>& columns(Kind kind) {
    switch (kind) {
        case Kind::table1: return kTable1;
        case Kind::ln_hist:
        case Kind::bell_hist: return kHist;
        case Kind::family_sweep: return kSweep;
        case Kind::envelope_points: return kEnvelope;
        case Kind::raw_samples: return kRaw;
    }
    throw ContractViolation("unknown record kind");
}

std::string format_real(double v) {
    if (!std::isfinite(v)) throw NumericIntegrityError("non-finite value in output");
    if (v == 0.0) v = 0.0;  // no negative zero
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

double round_real(double v) { return std::strtod(format_real(v).c_str(), nullptr); }

OutputRecordSet canonical(const OutputRecordSet& rs) {
    OutputRecordSet out = rs;
    for (auto& row : out.rows)
        for (auto& f : row)
            if (auto* d = std::get_if<double>(&f)) *d = round_real(*d);
    return out;
}

void validate(const OutputRecordSet& rs) {
    const auto& cols = columns(rs.kind);
    for (std::size_t r = 0; r < rs.rows.size(); ++r) {
        require(rs.rows[r].size() == cols.size(), std::string(kind_name(rs.kind)) + " row " + std::to_string(r) +
                                                      " has the wrong number of fields");
        for (std::size_t c = 0; c < cols.size(); ++c)
            require(fits(rs.rows[r][c], cols[c].type), std::string(kind_name(rs.kind)) + " row " +
                                                           std::to_string(r) + " column " +
                                                           std::string(cols[c].name) + " has the wrong type");
    }
}

std::string emit_csv(const OutputRecordSet& rs) {
    validate(rs);
    std::string out = csv_header(rs.kind);
    for (const auto& row : rs.rows) out += csv_row(row);
    return out;
}

std::string emit_json(const OutputRecordSet& rs) {
    validate(rs);
    Json arr = Json::array();
    for (const auto& row : rs.rows) arr.push_back(json_row(rs.kind, row));
    return arr.dump(1) + "\n";
}

std::string emit(const OutputRecordSet& rs, Format format) {
    return format == Format::csv ? emit_csv(rs) : emit_json(rs);
}

OutputRecordSet parse_csv(std::string_view text, Kind kind) {
    const auto records = split_csv(text);
    const auto& cols = columns(kind);
    require(!records.empty(), "CSV: missing header");
    require(records[0].size() == cols.size(), "CSV: header has the wrong number of columns");
    for (std::size_t c = 0; c < cols.size(); ++c)
        require(records[0][c] == cols[c].name, "CSV: unexpected column '" + records[0][c] + "'");
    OutputRecordSet rs{kind, {}};
    for (std::size_t r = 1; r < records.size(); ++r) {
        require(records[r].size() == cols.size(), "CSV: row " + std::to_string(r) + " has the wrong field count");
        Row row;
        row.reserve(cols.size());
        for (std::size_t c = 0; c < cols.size(); ++c) row.push_back(parse_cell(records[r][c], cols[c]));
        rs.rows.push_back(std::move(row));
    }
    return rs;
}

OutputRecordSet parse_json(std::string_view text, Kind kind) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ContractViolation(std::string("JSON: ") + e.what());
    }
    require(doc.is_array(), "JSON: expected an array of records");
    const auto& cols = columns(kind);
    OutputRecordSet rs{kind, {}};
    for (const auto& obj : doc) {
        require(obj.is_object() && obj.size() == cols.size(), "JSON: record has the wrong number of keys");
        Row row;
        std::size_t c = 0;
        for (auto it = obj.begin(); it != obj.end(); ++it, ++c) {
            require(it.key() == cols[c].name, "JSON: unexpected key '" + it.key() + "'");
            row.push_back(parse_json_value(it.value(), cols[c]));
        }
        rs.rows.push_back(std::move(row));
    }
    return rs;
}

OutputRecordSet parse(std::string_view text, Kind kind, Format format) {
    return format == Format::csv ? parse_csv(text, kind) : parse_json(text, kind);
}

OutputRecordSet table1_records(const campaign::CampaignSummary& s) {
    using keyrate::Attack;
    const bool osca = has_attack(s.config.attacks, Attack::osca), ca = has_attack(s.config.attacks, Attack::ca);
    OutputRecordSet rs{Kind::table1, {}};
    for (const auto& r : s.ranks) {
        const auto ci = campaign::poisson_interval(r.n_positive_ca);
        rs.rows.push_back({
            Field(static_cast<std::int64_t>(r.rank)),
            integer(r.n_total),
            integer(r.n_entangled),
            integer(r.n_bell_nonlocal),
            osca ? integer(r.n_positive_osca) : Field(),
            ca ? integer(r.n_positive_ca) : Field(),
            osca ? opt(r.avg_r_osca) : Field(),
            ca ? opt(r.avg_r_ca) : Field(),
            ca ? Field(ci.lo) : Field(),
            ca ? Field(ci.hi) : Field(),
        });
    }
    return rs;
}

OutputRecordSet histogram_records(const campaign::CampaignSummary& s, Kind kind) {
    require(kind == Kind::ln_hist || kind == Kind::bell_hist, "histogram_records: kind must be a histogram");
    OutputRecordSet rs{kind, {}};
    for (const auto& r : s.ranks) {
        const auto& h = kind == Kind::ln_hist ? r.ln_histogram : r.bell_histogram;
        for (std::size_t k = 0; k < h.bins(); ++k)
            rs.rows.push_back({Field(static_cast<std::int64_t>(r.rank)), Field(h.edges[k]), Field(h.edges[k + 1]),
                               integer(h.counts[k]), Field(h.normalized[k])});
    }
    return rs;
}

OutputRecordSet family_sweep_records(const std::vector<families::SweepRow>& rows) {
    OutputRecordSet rs{Kind::family_sweep, {}};
    for (const auto& r : rows)
        rs.rows.push_back({
            Field(r.negativity),
            opt(r.closed_form),
            opt(r.pipeline),
            opt(r.abs_diff),
            Field(std::string(families::family_name(r.family))),
            Field(std::string(keyrate::attack_name(r.attack))),
            Field(r.param),
            opt(r.alpha),
            opt(r.a),
            opt(r.a_prime),
            opt(r.constraint_residual),
            r.premise_holds ? Field(*r.premise_holds) : Field(),
        });
    return rs;
}

OutputRecordSet envelope_records(const std::vector<campaign::EnvelopePoint>& points) {
    OutputRecordSet rs{Kind::envelope_points, {}};
    for (const auto& p : points)
        rs.rows.push_back({Field(static_cast<std::int64_t>(p.rank)), Field(p.verdict.negativity),
                           Field(p.verdict.r_state), Field(p.verdict.r_pure_at_n), Field(p.verdict.r_werner_at_n),
                           Field(p.verdict.inside)});
    return rs;
}

Row raw_sample_row(const campaign::SampleRecord& r) {
    return {Field(static_cast<std::int64_t>(r.rank)),
            integer(r.sample_index),
            Field(r.negativity),
            Field(r.log_negativity),
            Field(r.chsh_value),
            Field(r.qber),
            Field(r.r_smin_raw),
            opt(r.r_cmin_raw),
            Field(r.is_entangled),
            Field(r.is_bell_nonlocal),
            Field(r.positive_osca),
            Field(r.positive_ca)};
}

std::string campaign_summary_json(const campaign::CampaignSummary& s) {
    using keyrate::Attack;
    const auto& c = s.config;
    Json cfg = Json::object();
    cfg["seed"] = c.seed;
    cfg["samples_per_rank"] = c.samples_per_rank;
    cfg["ranks"] = c.ranks;
    cfg["attacks"] = attacks_json(c.attacks);
    cfg["counting"] = std::string(keyrate::counting_rule_name(c.counting));
    cfg["bins_ln"] = c.bins_ln;
    cfg["bins_bell"] = c.bins_bell;
    Json ranks = Json::array();
    for (const auto& r : s.ranks) {
        Json j = Json::object();
        j["rank"] = r.rank;
        j["n_total"] = r.n_total;
        j["n_entangled"] = r.n_entangled;
        j["n_bell_nonlocal"] = r.n_bell_nonlocal;
        j["fraction_entangled"] = real_json(fraction(r.n_entangled, r.n_total));
        j["fraction_bell_nonlocal"] = real_json(fraction(r.n_bell_nonlocal, r.n_total));
        for (Attack a : {Attack::osca, Attack::ca}) {
            const std::string tag(keyrate::attack_name(a));
            const bool on = has_attack(c.attacks, a);
            j["n_positive_" + tag] = on ? Json(r.n_positive(a)) : Json(nullptr);
            j["fraction_positive_" + tag] = on ? real_json(fraction(r.n_positive(a), r.n_total)) : Json(nullptr);
            j["avg_r_" + tag] = on ? opt_json(r.avg_r(a)) : Json(nullptr);
            j["poisson95_count_" + tag] = on ? interval_json(r.n_positive(a)) : Json(nullptr);
        }
        Json ln = Json::object();
        for (const auto& [t, n] : r.ln_at_least)
            ln[format_real(t)] = {{"exact", real_json(fraction(n, r.n_total))},
                                  {"bin_labels", real_json(campaign::fraction_from_bin_labels(r.ln_histogram, t))}};
        j["fraction_ln_at_least"] = ln;
        Json chsh = Json::object();
        for (const auto& [t, n] : r.chsh_at_least)
            chsh[format_real(t)] = {
                {"exact", real_json(fraction(n, r.n_total))},
                {"count", n},
                {"bin_labels", real_json(campaign::fraction_from_bin_labels(r.bell_histogram, t))}};
        j["fraction_chsh_at_least"] = chsh;
        ranks.push_back(j);
    }
    Json doc = Json::object();
    doc["config"] = cfg;
    doc["ranks"] = ranks;
    return doc.dump(2) + "\n";
}

std::string campaign_timing_json(const campaign::CampaignSummary& s) {
    Json doc = Json::object();
    doc["workers"] = s.workers_used;
    doc["simd"] = std::string(simd::level_name(simd::active_level()));
    doc["wall_seconds"] = real_json(s.wall_seconds);
    Json ranks = Json::array();
    for (const auto& r : s.ranks)
        ranks.push_back({{"rank", r.rank},
                         {"wall_seconds", real_json(r.wall_seconds)},
                         {"samples_per_second", real_json(r.samples_per_second)}});
    doc["ranks"] = ranks;
    return doc.dump(2) + "\n";
}

std::string envelope_summary_json(const campaign::EnvelopeSummary& s) {
    const auto& c = s.config;
    Json cfg = Json::object();
    cfg["seed"] = c.seed;
    cfg["samples_per_rank"] = c.samples_per_rank;
    cfg["ranks"] = c.ranks;
    cfg["attacks"] = attacks_json(c.attacks);
    cfg["target_positive"] = c.target_positive ? Json(*c.target_positive) : Json(nullptr);
    cfg["rate_cut"] = real_json(c.rate_cut);
    Json ranks = Json::array();
    for (const auto& r : s.ranks) {
        Json j = Json::object();
        j["rank"] = r.rank;
        j["n_sampled"] = r.n_sampled;
        Json atk = Json::array();
        for (const auto& a : r.attacks)
            atk.push_back({{"attack", std::string(keyrate::attack_name(a.attack))},
                           {"n_positive", a.n_positive},
                           {"n_inside", a.n_inside},
                           {"inside_fraction", real_json(a.inside_fraction())},
                           {"n_rate_at_least_cut", a.n_rate_at_least_cut},
                           {"fraction_cut_of_positive", real_json(a.cut_fraction_of_positive())},
                           {"fraction_cut_of_sampled", real_json(r.cut_fraction_of_sampled(a.attack))}});
        j["attacks"] = atk;
        ranks.push_back(j);
    }
    Json doc = Json::object();
    doc["config"] = cfg;
    doc["ranks"] = ranks;
    return doc.dump(2) + "\n";
}

std::string families_summary_json(const std::vector<families::SweepRow>& rows) {
    std::size_t both = 0, closed_only = 0, pipeline_only = 0, premise = 0, premise_both = 0;
    double max_diff = 0.0, max_diff_premise = 0.0;
    for (const auto& r : rows) {
        if (r.abs_diff) {
            ++both;
            max_diff = std::max(max_diff, *r.abs_diff);
        } else if (r.closed_form) {
            ++closed_only;
        } else if (r.pipeline) {
            ++pipeline_only;
        }
        if (r.premise_holds && *r.premise_holds) {
            ++premise;
            if (r.abs_diff) {
                ++premise_both;
                max_diff_premise = std::max(max_diff_premise, *r.abs_diff);
            }
        }
    }
    Json doc = Json::object();
    doc["rows"] = rows.size();
    doc["both_defined"] = both;
    doc["closed_form_only"] = closed_only;
    doc["pipeline_only"] = pipeline_only;
    doc["max_abs_diff"] = both ? real_json(max_diff) : Json(nullptr);
    if (!rows.empty() && rows.front().family == families::Family::rank2) {
        doc["premise_holds"] = premise;
        doc["premise_holds_both_defined"] = premise_both;
        doc["max_abs_diff_premise_holds"] = premise_both ? real_json(max_diff_premise) : Json(nullptr);
    }
    return doc.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot open " + path.string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.close();
    require(static_cast<bool>(out), "failed writing " + path.string());
}

std::filesystem::path write_record_set(const std::filesystem::path& dir, const OutputRecordSet& rs, Format format) {
    const auto path = dir / (std::string(kind_name(rs.kind)) + "." + std::string(format_extension(format)));
    write_text(path, emit(rs, format));
    return path;
}

RawSampleWriter::RawSampleWriter(const std::filesystem::path& path, Format format)
    : out_(path, std::ios::binary | std::ios::trunc), format_(format) {
    require(static_cast<bool>(out_), "cannot open " + path.string() + " for writing");
    if (format_ == Format::csv)
        out_ << csv_header(Kind::raw_samples);
    else
        out_ << "[";
}

RawSampleWriter::~RawSampleWriter() {
    try {
        close();
    } catch (...) {
    }
}

void RawSampleWriter::write(const campaign::SampleRecord& r) {
    const Row row = raw_sample_row(r);
    if (format_ == Format::csv) {
        out_ << csv_row(row);
    } else {
        out_ << (first_ ? "\n" : ",\n") << json_row(Kind::raw_samples, row).dump();
    }
    first_ = false;
}

void RawSampleWriter::close() {
    if (closed_) return;
    closed_ = true;
    if (format_ == Format::json) out_ << (first_ ? "]\n" : "\n]\n");
    out_.close();
    require(static_cast<bool>(out_), "failed writing raw samples");
}

}  // namespace diqkd::output
