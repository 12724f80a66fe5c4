#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hunt/balance.hpp"
#include "hunt/encode.hpp"
#include "hunt/ingest.hpp"
#include "hunt/schema.hpp"

namespace hunt {

/// A synthetic dataset description bound to a profile.
struct SynthRecipe {
    std::string profile; // built-in name or profile file path
    SynthSpec spec;
};

/// Per-class row counts of the built-in synthetic presets. uwf2022 and
/// cicids2017 are shrunk copies of the published class counts that keep
/// every balancing target of the golden plans reachable.
std::vector<std::pair<std::string, std::size_t>> preset_counts(const std::string& name);

/// Class centers spaced `separation` apart along a deterministic pattern.
std::vector<double> default_center(std::size_t class_index, std::size_t dimension, double separation);

/// Presets: "uwf2022", "cicids2017", "toniot", "demo".
bool is_synth_preset(const std::string& name) noexcept;
SynthRecipe synth_preset(const std::string& name, std::uint64_t seed);

/// JSON recipe file:
///   {"profile": "toniot", "seed": 1, "separation": 6, "spread": 1,
///    "classes": [{"name": "Benign", "count": 100, "center": [...], "spread": 1}]}
/// `center` and per-class `spread` are optional.
SynthRecipe parse_synth_recipe(std::string_view text);
/// Preset name or recipe file path.
SynthRecipe load_synth_recipe(const std::string& name_or_path, std::uint64_t seed);

/// Table with class names and label indices in registry order. Throws
/// DataError for a class the profile does not know.
LogTable conform_to_profile(const LogTable& table, const DatasetProfile& profile);

struct Prepared {
    FeatureMatrix matrix;
    EncodingMap encoding;
    EncodeStats stats;
    std::vector<std::string> removed_classes;
};

/// Optional binary amalgamation, small-class removal, then encoding.
Prepared prepare(const LogTable& table, const DatasetProfile& profile, bool binary, std::size_t min_class_size);

/// Reads and collates every input (CSV or Parquet by extension).
Ingested read_inputs(const std::vector<std::filesystem::path>& inputs, const DatasetProfile& profile);

/// Feature names plus label column, one row per matrix row.
void write_matrix_csv(const FeatureMatrix& matrix, const EncodingMap& encoding, const std::filesystem::path& path);

} // namespace hunt
