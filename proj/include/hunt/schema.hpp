#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace hunt {

/// Semantic role of a column; decides how it is encoded.
enum class ColumnKind { numeric, categorical, ipv4, timestamp, boolean };

/// Physical storage of a column inside a LogTable.
enum class Storage { int64, float64, text, boolean };

const char* to_string(ColumnKind kind) noexcept;
const char* to_string(Storage storage) noexcept;
ColumnKind parse_column_kind(std::string_view text);
Storage parse_storage(std::string_view text);

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;
    Storage storage = Storage::float64;

    /// Throws DataError when kind and storage are incompatible.
    void validate() const;

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

/// Tactic label carried by benign classes in place of an ATT&CK id.
inline constexpr std::string_view kBenignTactic = "Desired traffic";
/// Tactic label carried by a class that merges every attack class.
inline constexpr std::string_view kAmalgamatedTactic = "Amalgamated";

/// True for ATT&CK technique ids such as T1498 or T1595.001.
bool is_tactic_id(std::string_view label) noexcept;

struct ClassEntry {
    std::string name;
    std::vector<std::string> tactics;

    bool is_benign() const noexcept;

    friend bool operator==(const ClassEntry&, const ClassEntry&) = default;
};

/// Output classes of a dataset together with their ATT&CK cross reference.
class ClassRegistry {
public:
    ClassRegistry() = default;
    explicit ClassRegistry(std::vector<ClassEntry> entries);

    const std::vector<ClassEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    std::optional<std::size_t> find(std::string_view name) const noexcept;
    const ClassEntry* entry(std::string_view name) const noexcept;
    std::vector<std::string> names() const;
    std::vector<std::string> benign_names() const;

    friend bool operator==(const ClassRegistry&, const ClassRegistry&) = default;

private:
    std::vector<ClassEntry> entries_;
};

/// Declarative schema of one dataset: the feature columns kept after
/// cropping, the label column and the class registry.
struct DatasetProfile {
    std::string name;
    std::vector<ColumnSpec> columns;
    std::string label_column;
    ClassRegistry classes;

    /// Throws DataError if an invariant is broken.
    void validate() const;
    const ColumnSpec* column(std::string_view column_name) const noexcept;

    friend bool operator==(const DatasetProfile&, const DatasetProfile&) = default;
};

/// The three built-in profiles, in the order UWF-2022, CIC-IDS2017, TON_IoT.
const std::vector<DatasetProfile>& builtin_profiles();
/// Built-in profile by name ("uwf2022", "cicids2017", "toniot").
const DatasetProfile* find_builtin_profile(std::string_view name) noexcept;

nlohmann::json profile_to_json(const DatasetProfile& profile);
DatasetProfile profile_from_json(const nlohmann::json& doc);
std::string serialize_profile(const DatasetProfile& profile);
DatasetProfile parse_profile(std::string_view text);
/// Built-in name or path to a profile config file.
DatasetProfile load_profile(const std::string& name_or_path);

/// One column of a LogTable. `missing` is either empty (no missing cells) or
/// has one flag per row.
struct Column {
    using Values = std::variant<std::vector<std::int64_t>, std::vector<double>,
                                std::vector<std::string>, std::vector<std::uint8_t>>;

    ColumnSpec spec;
    Values values;
    std::vector<std::uint8_t> missing;

    std::size_t size() const noexcept;
    bool is_missing(std::size_t row) const noexcept { return !missing.empty() && missing[row] != 0; }
    std::size_t missing_count() const noexcept;

    const std::vector<std::int64_t>& int64s() const { return std::get<std::vector<std::int64_t>>(values); }
    const std::vector<double>& float64s() const { return std::get<std::vector<double>>(values); }
    const std::vector<std::string>& texts() const { return std::get<std::vector<std::string>>(values); }
    const std::vector<std::uint8_t>& bools() const { return std::get<std::vector<std::uint8_t>>(values); }

    /// Empty value vector matching `spec.storage`.
    static Values empty_values(Storage storage);

    friend bool operator==(const Column&, const Column&) = default;
};

/// Columnar table of typed columns plus a label column. Immutable once built.
class LogTable {
public:
    LogTable() = default;
    /// Throws DataError when column lengths, label indices or storages are
    /// inconsistent.
    LogTable(std::vector<Column> columns, std::vector<std::uint32_t> labels,
             std::vector<std::string> class_names);

    const std::vector<Column>& columns() const noexcept { return columns_; }
    const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    std::size_t row_count() const noexcept { return labels_.size(); }

    const Column* column(std::string_view name) const noexcept;

    /// Rows at `indices` (repeats allowed), same schema and class names.
    LogTable select_rows(const std::vector<std::size_t>& indices) const;

    friend bool operator==(const LogTable&, const LogTable&) = default;

private:
    std::vector<Column> columns_;
    std::vector<std::uint32_t> labels_;
    std::vector<std::string> class_names_;
};

struct ValidationIssue {
    enum class Kind { missing_column, type_mismatch, unknown_class };
    Kind kind;
    std::string subject;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
    std::size_t count(ValidationIssue::Kind kind) const noexcept;
    std::string summary() const;
};

/// Lists missing columns, kind/storage mismatches and classes that the
/// profile registry does not know. Empty iff the table conforms.
ValidationReport validate_table(const LogTable& table, const DatasetProfile& profile);

/// Per-class counts over `class_names` (zero counts included), sorted by
/// count descending, ties by name.
std::vector<std::pair<std::string, std::size_t>> class_histogram(const LogTable& table);

/// Counts per class index.
std::vector<std::size_t> label_counts(const std::vector<std::uint32_t>& labels, std::size_t class_count);

} // namespace hunt
