#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hunt/schema.hpp"

namespace hunt {

/// A single untyped source value before conversion to column storage.
/// monostate marks an absent value.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

/// Rows dropped while reading, with the first few reasons for diagnostics.
struct SkipReport {
    std::size_t skipped_rows = 0;
    std::vector<std::string> samples;

    void note(std::size_t row, const std::string& reason);
};

struct Ingested {
    LogTable table;
    SkipReport skips;
};

/// Accumulates rows of cells into a LogTable shaped by a profile. Only the
/// `present` columns are materialized (in profile order); class names are the
/// profile registry. Labels may be class names or integer registry codes.
class TableBuilder {
public:
    TableBuilder(const DatasetProfile& profile, const std::vector<std::string>& present);
    /// All profile columns.
    explicit TableBuilder(const DatasetProfile& profile);

    const std::vector<ColumnSpec>& columns() const noexcept { return specs_; }
    std::size_t rows() const noexcept { return labels_.size(); }

    /// `cells` follows columns(). On failure returns the reason and leaves the
    /// builder unchanged.
    std::optional<std::string> append(std::span<const Cell> cells, const Cell& label);

    /// Moves the accumulated rows out; the builder is empty afterwards.
    LogTable build();

private:
    std::vector<ColumnSpec> specs_;
    std::vector<Column> columns_;
    std::vector<std::uint32_t> labels_;
    std::vector<std::string> class_names_;
    const ClassRegistry* registry_;
};

/// Resolves a label cell to a registry index (name match first, then an
/// integer code).
std::optional<std::uint32_t> resolve_label(const Cell& label, const ClassRegistry& registry);

/// RFC-4180 record reader (quoted fields, doubled quotes, embedded newlines,
/// CRLF, leading UTF-8 BOM).
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}
    /// False at end of input.
    bool next(std::vector<std::string>& fields);
    std::size_t records_read() const noexcept { return records_; }

private:
    std::istream& in_;
    std::size_t records_ = 0;
    bool first_ = true;
};

void write_csv_record(std::ostream& out, std::span<const std::string> fields);

/// Reads a CSV file, keeping only profile columns. Rows with values that do
/// not convert are skipped and counted. Throws IoError for a missing file and
/// DataError for a header without the label column or zero parseable rows.
Ingested read_csv(const std::filesystem::path& path, const DatasetProfile& profile);
Ingested read_csv(std::istream& in, const DatasetProfile& profile, const std::string& source_name = "<stream>");

/// Writes profile-ordered columns followed by the label column.
void write_csv(const LogTable& table, const DatasetProfile& profile, const std::filesystem::path& path);
void write_csv(const LogTable& table, const DatasetProfile& profile, std::ostream& out);

/// True when the Parquet reader/writer is compiled in.
bool parquet_supported() noexcept;
/// Same contract as read_csv. Throws UnsupportedFormat when Parquet support
/// is compiled out and DataError for files that are not valid Parquet.
Ingested read_parquet(const std::filesystem::path& path, const DatasetProfile& profile);
/// Flat schema, one row group, PLAIN encoding, uncompressed.
void write_parquet(const LogTable& table, const DatasetProfile& profile, const std::filesystem::path& path);

/// Dispatches on extension (.parquet / .pq, otherwise CSV).
Ingested read_table(const std::filesystem::path& path, const DatasetProfile& profile);
void write_table(const LogTable& table, const DatasetProfile& profile, const std::filesystem::path& path);

/// Concatenates tables with identical column specs and class names, in input
/// order. Throws DataError on any schema difference.
LogTable collate(std::span<const LogTable> tables);

struct SynthClass {
    std::string name;
    std::size_t count = 0;
    std::vector<double> center; // one entry per numeric-kind feature column
    double spread = 1.0;
};

struct SynthSpec {
    std::vector<SynthClass> classes;
    std::vector<ColumnSpec> feature_columns;
    std::uint64_t seed = 0;

    std::size_t numeric_dimension() const noexcept;
    void validate() const;
};

/// Deterministic synthetic table: numeric features drawn around each class
/// center, other kinds from per-class generators. Rows are grouped by class
/// in spec order; class names follow spec order.
LogTable synthesize(const SynthSpec& spec);

} // namespace hunt
