#include "hunt/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include "hunt/encode.hpp"
#include "hunt/error.hpp"
#include "hunt/rng.hpp"
#include "text.hpp"

namespace hunt {

void SkipReport::note(std::size_t row, const std::string& reason) {
    ++skipped_rows;
    if (samples.size() < 10) samples.push_back("row " + std::to_string(row) + ": " + reason);
}

namespace {

struct Converted {
    std::variant<std::int64_t, double, std::string, std::uint8_t> value;
    bool missing = false;
};

bool is_absent(std::string_view s) { return s.empty() || s == "-"; }

std::optional<std::int64_t> parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && end == s.data() + s.size()) return v;
    double d = 0.0;
    auto [dend, dec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (dec == std::errc() && dend == s.data() + s.size() && std::isfinite(d) && std::trunc(d) == d &&
        std::fabs(d) < 9.2e18) {
        return static_cast<std::int64_t>(d);
    }
    return std::nullopt;
}

std::optional<double> parse_double(std::string_view s) {
    double d = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
    if (ec == std::errc() && end == s.data() + s.size() && std::isfinite(d)) return d;
    return std::nullopt;
}

std::optional<bool> parse_bool(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "true" || lower == "t" || lower == "1" || lower == "yes" || lower == "y") return true;
    if (lower == "false" || lower == "f" || lower == "0" || lower == "no" || lower == "n") return false;
    return std::nullopt;
}

std::string cell_text(const Cell& cell) {
    struct Visitor {
        std::string operator()(std::monostate) const { return {}; }
        std::string operator()(std::int64_t v) const { return std::to_string(v); }
        std::string operator()(double v) const { return text::format_double(v); }
        std::string operator()(const std::string& v) const { return v; }
        std::string operator()(bool v) const { return v ? "true" : "false"; }
    };
    return std::visit(Visitor{}, cell);
}

// Returns the converted value, or sets `reason` and returns nullopt.
std::optional<Converted> convert(const Cell& cell, const ColumnSpec& spec, std::string& reason) {
    auto fail = [&](const std::string& what) -> std::optional<Converted> {
        reason = "column '" + spec.name + "': " + what;
        return std::nullopt;
    };
    const bool absent = std::holds_alternative<std::monostate>(cell) ||
                        (std::holds_alternative<std::string>(cell) &&
                         is_absent(text::trim(std::get<std::string>(cell))));

    switch (spec.storage) {
    case Storage::int64: {
        if (absent) return Converted{std::int64_t{0}, true};
        if (const auto* i = std::get_if<std::int64_t>(&cell)) return Converted{*i, false};
        if (const auto* b = std::get_if<bool>(&cell)) return Converted{std::int64_t{*b ? 1 : 0}, false};
        if (const auto* d = std::get_if<double>(&cell)) {
            if (std::isfinite(*d) && std::trunc(*d) == *d && std::fabs(*d) < 9.2e18) {
                return Converted{static_cast<std::int64_t>(*d), false};
            }
            return fail("non-integral value " + text::format_double(*d));
        }
        const auto s = text::trim(std::get<std::string>(cell));
        if (auto v = parse_int(s)) return Converted{*v, false};
        return fail("cannot parse '" + std::string(s) + "' as int64");
    }
    case Storage::float64: {
        if (absent) return Converted{0.0, true};
        if (const auto* i = std::get_if<std::int64_t>(&cell)) return Converted{static_cast<double>(*i), false};
        if (const auto* b = std::get_if<bool>(&cell)) return Converted{*b ? 1.0 : 0.0, false};
        if (const auto* d = std::get_if<double>(&cell)) {
            if (std::isfinite(*d)) return Converted{*d, false};
            return fail("non-finite value");
        }
        const auto s = text::trim(std::get<std::string>(cell));
        if (auto v = parse_double(s)) return Converted{*v, false};
        if (spec.kind == ColumnKind::timestamp) {
            try {
                return Converted{to_epoch(s), false};
            } catch (const DataError&) {
            }
        }
        return fail("cannot parse '" + std::string(s) + "' as float64");
    }
    case Storage::boolean: {
        if (absent) return Converted{std::uint8_t{0}, true};
        if (const auto* b = std::get_if<bool>(&cell)) return Converted{std::uint8_t{*b}, false};
        if (const auto* i = std::get_if<std::int64_t>(&cell)) {
            if (*i == 0 || *i == 1) return Converted{static_cast<std::uint8_t>(*i), false};
            return fail("integer " + std::to_string(*i) + " is not a boolean");
        }
        if (const auto* d = std::get_if<double>(&cell)) {
            if (*d == 0.0 || *d == 1.0) return Converted{static_cast<std::uint8_t>(*d), false};
            return fail("number is not a boolean");
        }
        const auto s = text::trim(std::get<std::string>(cell));
        if (auto v = parse_bool(s)) return Converted{std::uint8_t{*v}, false};
        return fail("cannot parse '" + std::string(s) + "' as bool");
    }
    case Storage::text: {
        if (spec.kind == ColumnKind::categorical) return Converted{cell_text(cell), false};
        if (absent) return Converted{std::string{}, true};
        std::string value;
        if (const auto* i = std::get_if<std::int64_t>(&cell);
            i && spec.kind == ColumnKind::ipv4 && *i >= 0 && *i <= 0xffffffffLL) {
            value = u32_to_ipv4(static_cast<std::uint32_t>(*i));
        } else {
            value = std::string(text::trim(cell_text(cell)));
        }
        try {
            if (spec.kind == ColumnKind::ipv4) ipv4_to_u32(value);
            if (spec.kind == ColumnKind::timestamp) to_epoch(value);
        } catch (const DataError& e) {
            return fail(e.what());
        }
        return Converted{std::move(value), false};
    }
    }
    return fail("unsupported storage");
}

template <typename T>
void push(Column& col, T&& v) {
    std::visit(
        [&](auto& vec) {
            using Elem = typename std::decay_t<decltype(vec)>::value_type;
            if constexpr (std::is_constructible_v<Elem, T&&>) {
                vec.push_back(Elem(std::forward<T>(v)));
            }
        },
        col.values);
}

} // namespace

std::optional<std::uint32_t> resolve_label(const Cell& label, const ClassRegistry& registry) {
    if (const auto* s = std::get_if<std::string>(&label)) {
        const auto name = text::trim(*s);
        if (auto i = registry.find(name)) return static_cast<std::uint32_t>(*i);
        if (auto code = parse_int(name); code && *code >= 0 && static_cast<std::size_t>(*code) < registry.size()) {
            return static_cast<std::uint32_t>(*code);
        }
        return std::nullopt;
    }
    if (const auto* i = std::get_if<std::int64_t>(&label)) {
        if (*i >= 0 && static_cast<std::size_t>(*i) < registry.size()) return static_cast<std::uint32_t>(*i);
        return std::nullopt;
    }
    if (const auto* d = std::get_if<double>(&label)) {
        if (*d >= 0 && std::trunc(*d) == *d && *d < static_cast<double>(registry.size())) {
            return static_cast<std::uint32_t>(*d);
        }
    }
    return std::nullopt;
}

TableBuilder::TableBuilder(const DatasetProfile& profile, const std::vector<std::string>& present)
    : class_names_(profile.classes.names()), registry_(&profile.classes) {
    for (const auto& spec : profile.columns) {
        if (std::find(present.begin(), present.end(), spec.name) == present.end()) continue;
        specs_.push_back(spec);
        columns_.push_back(Column{spec, Column::empty_values(spec.storage), {}});
    }
}

TableBuilder::TableBuilder(const DatasetProfile& profile)
    : TableBuilder(profile, [&] {
          std::vector<std::string> all;
          for (const auto& c : profile.columns) all.push_back(c.name);
          return all;
      }()) {}

std::optional<std::string> TableBuilder::append(std::span<const Cell> cells, const Cell& label) {
    if (cells.size() != specs_.size()) return "expected " + std::to_string(specs_.size()) + " values";
    if (std::holds_alternative<std::monostate>(label) ||
        (std::holds_alternative<std::string>(label) && text::trim(std::get<std::string>(label)).empty())) {
        return std::string("missing label");
    }
    const auto index = resolve_label(label, *registry_);
    if (!index) return "unknown class '" + cell_text(label) + "'";

    std::vector<Converted> converted;
    converted.reserve(cells.size());
    std::string reason;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        auto c = convert(cells[i], specs_[i], reason);
        if (!c) return reason;
        converted.push_back(std::move(*c));
    }
    const std::size_t row = labels_.size();
    for (std::size_t i = 0; i < converted.size(); ++i) {
        auto& col = columns_[i];
        std::visit([&](auto&& v) { push(col, std::move(v)); }, std::move(converted[i].value));
        const bool has_mask = !col.missing.empty();
        if (converted[i].missing && !has_mask) col.missing.assign(row, 0);
        if (converted[i].missing || has_mask) col.missing.push_back(converted[i].missing ? 1 : 0);
    }
    labels_.push_back(*index);
    return std::nullopt;
}

LogTable TableBuilder::build() {
    LogTable table(std::move(columns_), std::move(labels_), class_names_);
    columns_.clear();
    labels_.clear();
    for (const auto& spec : specs_) columns_.push_back(Column{spec, Column::empty_values(spec.storage), {}});
    return table;
}

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    auto* buf = in_.rdbuf();
    using traits = std::char_traits<char>;
    if (first_) {
        first_ = false;
        if (buf->sgetc() == 0xEF) {
            // UTF-8 byte order mark
            char bom[3];
            if (buf->sgetn(bom, 3) != 3 || static_cast<unsigned char>(bom[1]) != 0xBB ||
                static_cast<unsigned char>(bom[2]) != 0xBF) {
                throw DataError("CSV: malformed byte order mark");
            }
        }
    }
    if (traits::eq_int_type(buf->sgetc(), traits::eof())) return false;

    std::string field;
    bool quoted = false;
    bool after_quote = false;
    for (;;) {
        const auto ch = buf->sbumpc();
        if (traits::eq_int_type(ch, traits::eof())) {
            if (quoted) throw DataError("CSV: unterminated quoted field in record " + std::to_string(records_ + 1));
            fields.push_back(std::move(field));
            break;
        }
        const char c = traits::to_char_type(ch);
        if (quoted) {
            if (c == '"') {
                if (buf->sgetc() == '"') {
                    buf->sbumpc();
                    field.push_back('"');
                } else {
                    quoted = false;
                    after_quote = true;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            after_quote = false;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && buf->sgetc() == '\n') buf->sbumpc();
            fields.push_back(std::move(field));
            break;
        } else if (c == '"' && field.empty() && !after_quote) {
            quoted = true;
        } else {
            field.push_back(c);
        }
    }
    ++records_;
    return true;
}

void write_csv_record(std::ostream& out, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        const auto& f = fields[i];
        const bool quote = f.find_first_of(",\"\r\n") != std::string::npos ||
                           (!f.empty() && (f.front() == ' ' || f.back() == ' '));
        if (!quote) {
            out << f;
            continue;
        }
        out << '"';
        for (char c : f) {
            if (c == '"') out << '"';
            out << c;
        }
        out << '"';
    }
    out << '\n';
}

Ingested read_csv(std::istream& in, const DatasetProfile& profile, const std::string& source_name) {
    CsvReader reader(in);
    std::vector<std::string> header;
    if (!reader.next(header)) throw DataError(source_name + ": empty CSV, header row required");
    for (auto& h : header) h = std::string(text::trim(h));

    const auto label_it = std::find(header.begin(), header.end(), profile.label_column);
    if (label_it == header.end()) {
        throw DataError(source_name + ": header lacks label column '" + profile.label_column + "'");
    }
    const auto label_index = static_cast<std::size_t>(label_it - header.begin());

    std::vector<std::string> present;
    for (const auto& spec : profile.columns) {
        if (std::find(header.begin(), header.end(), spec.name) != header.end()) present.push_back(spec.name);
    }
    TableBuilder builder(profile, present);
    std::vector<std::size_t> source_index;
    for (const auto& spec : builder.columns()) {
        source_index.push_back(static_cast<std::size_t>(std::find(header.begin(), header.end(), spec.name) -
                                                        header.begin()));
    }

    Ingested result;
    std::vector<std::string> fields;
    std::vector<Cell> cells(builder.columns().size());
    std::size_t row = 0;
    while (reader.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        ++row;
        if (fields.size() != header.size()) {
            result.skips.note(row, "expected " + std::to_string(header.size()) + " fields, found " +
                                       std::to_string(fields.size()));
            continue;
        }
        for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = std::move(fields[source_index[i]]);
        if (auto reason = builder.append(cells, Cell{std::move(fields[label_index])})) {
            result.skips.note(row, *reason);
        }
    }
    if (builder.rows() == 0) {
        throw DataError(source_name + ": zero parseable rows" +
                        (result.skips.samples.empty() ? std::string() : " (" + result.skips.samples.front() + ")"));
    }
    result.table = builder.build();
    return result;
}

Ingested read_csv(const std::filesystem::path& path, const DatasetProfile& profile) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    return read_csv(in, profile, path.string());
}

namespace {

std::vector<const Column*> profile_ordered(const LogTable& table, const DatasetProfile& profile) {
    std::vector<const Column*> cols;
    for (const auto& spec : profile.columns) {
        if (const auto* c = table.column(spec.name)) cols.push_back(c);
    }
    return cols;
}

std::string value_text(const Column& c, std::size_t r) {
    if (c.is_missing(r)) return {};
    switch (c.spec.storage) {
    case Storage::int64: return std::to_string(c.int64s()[r]);
    case Storage::float64: return text::format_double(c.float64s()[r]);
    case Storage::text: return c.texts()[r];
    case Storage::boolean: return c.bools()[r] ? "true" : "false";
    }
    return {};
}

} // namespace

void write_csv(const LogTable& table, const DatasetProfile& profile, std::ostream& out) {
    const auto cols = profile_ordered(table, profile);
    std::vector<std::string> fields;
    for (const auto* c : cols) fields.push_back(c->spec.name);
    fields.push_back(profile.label_column);
    write_csv_record(out, fields);
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        fields.clear();
        for (const auto* c : cols) fields.push_back(value_text(*c, r));
        fields.push_back(table.class_names()[table.labels()[r]]);
        write_csv_record(out, fields);
    }
}

void write_csv(const LogTable& table, const DatasetProfile& profile, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    write_csv(table, profile, out);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

bool is_parquet_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    return ext == ".parquet" || ext == ".pq";
}

} // namespace

Ingested read_table(const std::filesystem::path& path, const DatasetProfile& profile) {
    return is_parquet_path(path) ? read_parquet(path, profile) : read_csv(path, profile);
}

void write_table(const LogTable& table, const DatasetProfile& profile, const std::filesystem::path& path) {
    if (is_parquet_path(path)) {
        write_parquet(table, profile, path);
    } else {
        write_csv(table, profile, path);
    }
}

LogTable collate(std::span<const LogTable> tables) {
    if (tables.empty()) throw DataError("collate: no tables given");
    const auto& first = tables.front();
    for (std::size_t t = 1; t < tables.size(); ++t) {
        const auto& other = tables[t];
        bool same = other.columns().size() == first.columns().size() && other.class_names() == first.class_names();
        for (std::size_t c = 0; same && c < first.columns().size(); ++c) {
            same = other.columns()[c].spec == first.columns()[c].spec;
        }
        if (!same) throw DataError("collate: table " + std::to_string(t) + " has a different schema than table 0");
    }

    std::size_t total = 0;
    for (const auto& t : tables) total += t.row_count();

    std::vector<Column> columns;
    for (std::size_t c = 0; c < first.columns().size(); ++c) {
        const auto& spec = first.columns()[c].spec;
        Column out{spec, Column::empty_values(spec.storage), {}};
        bool any_missing = false;
        for (const auto& t : tables) any_missing = any_missing || !t.columns()[c].missing.empty();
        for (const auto& t : tables) {
            const auto& src = t.columns()[c];
            std::visit(
                [&](auto& dst) {
                    const auto& s = std::get<std::decay_t<decltype(dst)>>(src.values);
                    dst.reserve(total);
                    dst.insert(dst.end(), s.begin(), s.end());
                },
                out.values);
            if (any_missing) {
                if (src.missing.empty()) {
                    out.missing.insert(out.missing.end(), t.row_count(), 0);
                } else {
                    out.missing.insert(out.missing.end(), src.missing.begin(), src.missing.end());
                }
            }
        }
        columns.push_back(std::move(out));
    }
    std::vector<std::uint32_t> labels;
    labels.reserve(total);
    for (const auto& t : tables) labels.insert(labels.end(), t.labels().begin(), t.labels().end());
    return LogTable(std::move(columns), std::move(labels), first.class_names());
}

std::size_t SynthSpec::numeric_dimension() const noexcept {
    return static_cast<std::size_t>(std::count_if(feature_columns.begin(), feature_columns.end(),
                                                   [](const auto& c) { return c.kind == ColumnKind::numeric; }));
}

void SynthSpec::validate() const {
    if (classes.empty()) throw DataError("synth spec has no classes");
    if (feature_columns.empty()) throw DataError("synth spec has no feature columns");
    for (const auto& c : feature_columns) c.validate();
    const auto dim = numeric_dimension();
    std::vector<std::string> names;
    for (const auto& c : classes) {
        if (c.count == 0) throw DataError("synth class '" + c.name + "' has zero count");
        if (!(c.spread > 0.0) || !std::isfinite(c.spread)) {
            throw DataError("synth class '" + c.name + "' needs a positive spread");
        }
        if (c.center.size() != dim) {
            throw DataError("synth class '" + c.name + "': center has " + std::to_string(c.center.size()) +
                            " entries, numeric feature count is " + std::to_string(dim));
        }
        if (std::find(names.begin(), names.end(), c.name) != names.end()) {
            throw DataError("synth spec repeats class '" + c.name + "'");
        }
        names.push_back(c.name);
    }
}

namespace {

const std::vector<std::string>& vocabulary(const std::string& column) {
    static const std::vector<std::string> proto = {"icmp", "tcp", "udp"};
    static const std::vector<std::string> conn_state = {"OTH", "REJ", "RSTO", "RSTR", "S0", "S1", "SF", "SH"};
    static const std::vector<std::string> service = {"-", "dhcp", "dns", "http", "ssh", "ssl"};
    static const std::vector<std::string> generic = {"v0", "v1", "v2", "v3"};
    if (column == "proto") return proto;
    if (column == "conn_state") return conn_state;
    if (column == "service") return service;
    return generic;
}

// 2022-07-01T00:00:00Z
constexpr std::int64_t kSynthEpochBase = 1656633600;

std::string iso_timestamp(std::int64_t micros) {
    namespace chr = std::chrono;
    const std::int64_t secs = micros / 1000000;
    const std::int64_t frac = micros % 1000000;
    const auto day_point = chr::floor<chr::days>(chr::sys_seconds{chr::seconds{secs}});
    const chr::year_month_day ymd{day_point};
    const std::int64_t sod = secs - day_point.time_since_epoch().count() * 86400;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<long long>(sod / 3600), static_cast<long long>((sod / 60) % 60),
                  static_cast<long long>(sod % 60), static_cast<long long>(frac));
    return buf;
}

} // namespace

LogTable synthesize(const SynthSpec& spec) {
    spec.validate();
    std::size_t total = 0;
    for (const auto& c : spec.classes) total += c.count;

    std::vector<Column> columns;
    for (const auto& c : spec.feature_columns) {
        Column col{c, Column::empty_values(c.storage), {}};
        std::visit([&](auto& v) { v.reserve(total); }, col.values);
        columns.push_back(std::move(col));
    }
    std::vector<std::uint32_t> labels;
    labels.reserve(total);
    std::vector<std::string> class_names;

    for (std::size_t k = 0; k < spec.classes.size(); ++k) {
        const auto& cls = spec.classes[k];
        class_names.push_back(cls.name);
        Rng rng(derive_seed(spec.seed, k));
        for (std::size_t i = 0; i < cls.count; ++i) {
            std::size_t numeric = 0;
            for (std::size_t j = 0; j < spec.feature_columns.size(); ++j) {
                const auto& cs = spec.feature_columns[j];
                auto& col = columns[j];
                switch (cs.kind) {
                case ColumnKind::numeric: {
                    const double v = cls.center[numeric++] + cls.spread * rng.normal();
                    if (cs.storage == Storage::int64) {
                        std::get<std::vector<std::int64_t>>(col.values).push_back(std::llround(v));
                    } else {
                        std::get<std::vector<double>>(col.values).push_back(v);
                    }
                    break;
                }
                case ColumnKind::categorical: {
                    const auto& vocab = vocabulary(cs.name);
                    const std::size_t preferred = (k * 7 + j) % vocab.size();
                    const std::size_t pick = rng.bernoulli(0.8) ? preferred : rng.index(vocab.size());
                    std::get<std::vector<std::string>>(col.values).push_back(vocab[pick]);
                    break;
                }
                case ColumnKind::ipv4: {
                    const auto addr = (10U << 24) | (static_cast<std::uint32_t>(k % 256) << 16) |
                                      (static_cast<std::uint32_t>(rng.index(256)) << 8) |
                                      static_cast<std::uint32_t>(1 + rng.index(254));
                    std::get<std::vector<std::string>>(col.values).push_back(u32_to_ipv4(addr));
                    break;
                }
                case ColumnKind::timestamp: {
                    const std::int64_t micros = (kSynthEpochBase + static_cast<std::int64_t>(k) * 3600) * 1000000 +
                                                static_cast<std::int64_t>(rng.index(86400ULL * 1000000ULL));
                    if (cs.storage == Storage::text) {
                        std::get<std::vector<std::string>>(col.values).push_back(iso_timestamp(micros));
                    } else {
                        std::get<std::vector<double>>(col.values).push_back(static_cast<double>(micros) / 1e6);
                    }
                    break;
                }
                case ColumnKind::boolean: {
                    const double p = (k % 2) ? 0.8 : 0.2;
                    std::get<std::vector<std::uint8_t>>(col.values).push_back(rng.bernoulli(p) ? 1 : 0);
                    break;
                }
                }
            }
            labels.push_back(static_cast<std::uint32_t>(k));
        }
    }
    return LogTable(std::move(columns), std::move(labels), std::move(class_names));
}

} // namespace hunt
