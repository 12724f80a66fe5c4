#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hunt/schema.hpp"

namespace hunt {

/// Packs a dotted quad into its 32-bit big-endian value
/// (o0 << 24 | o1 << 16 | o2 << 8 | o3). Throws DataError on malformed text or
/// an octet outside [0, 255].
std::uint32_t ipv4_to_u32(std::string_view text);
std::string u32_to_ipv4(std::uint32_t value);

/// Seconds since the Unix epoch for an ISO-8601 timestamp
/// ("2022-02-10T14:03:27.5Z", "2022-02-10 14:03:27+01:00", "2022-02-10").
/// Numeric text passes through unchanged. Throws DataError if unparseable.
double to_epoch(std::string_view text);
inline double to_epoch(double seconds) noexcept { return seconds; }

/// Indicator vectors, one per category.
struct OneHot {
    std::vector<std::vector<double>> groups;
    std::size_t unknown = 0;
};

/// Rows whose value is not a category encode as all zeros and are counted in
/// `unknown`.
OneHot one_hot(std::span<const std::string> values, std::span<const std::string> categories);

/// How one source column becomes output features.
struct ColumnPlan {
    enum class Kind { pass_float, ipv4_pack, epoch, one_hot, bool_to_float };

    std::string source;
    Kind kind = Kind::pass_float;
    std::vector<std::string> categories; // one_hot only: sorted, unique

    friend bool operator==(const ColumnPlan&, const ColumnPlan&) = default;
};

const char* to_string(ColumnPlan::Kind kind) noexcept;

/// Frozen mapping from a profile's columns to matrix features.
struct EncodingMap {
    std::vector<ColumnPlan> plans;
    std::vector<std::string> feature_names;

    std::size_t width() const noexcept { return feature_names.size(); }

    friend bool operator==(const EncodingMap&, const EncodingMap&) = default;
};

nlohmann::json encoding_to_json(const EncodingMap& map);
EncodingMap encoding_from_json(const nlohmann::json& doc);

/// Dense row-major float64 matrix with one class label per row.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::vector<std::uint32_t> labels;
    std::vector<std::string> class_names;

    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    /// Throws DataError on shape mismatch, bad labels or non-finite values.
    void check() const;
    /// Rows at `indices` in the given order (repeats allowed).
    FeatureMatrix select_rows(std::span<const std::size_t> indices) const;

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

struct EncodeStats {
    std::size_t missing_values = 0;    // encoded as 0.0
    std::size_t unknown_categories = 0; // encoded as an all-zero group
};

struct Encoded {
    FeatureMatrix matrix;
    EncodingMap map;
    EncodeStats stats;
};

/// Learns an EncodingMap from `table` (one-hot categories collected and
/// sorted) following the profile's column order.
EncodingMap fit_encoding(const LogTable& table, const DatasetProfile& profile);

/// Encodes with a frozen map. Throws DataError if a source column is missing
/// or a row yields a non-finite value.
FeatureMatrix apply_encoding(const LogTable& table, const EncodingMap& map, EncodeStats* stats = nullptr);

/// fit_encoding followed by apply_encoding. The table must carry every
/// profile column with the declared kind and storage.
Encoded encode_table(const LogTable& table, const DatasetProfile& profile);

inline const std::string kBinaryBenign = "Benign";
inline const std::string kBinaryMalicious = "Malicious";

/// Collapses classes into {Benign, Malicious}: rows of `benign_names` become
/// Benign, everything else Malicious.
LogTable amalgamate_binary(const LogTable& table, std::span<const std::string> benign_names);

} // namespace hunt
