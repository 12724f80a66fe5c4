#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hunt/encode.hpp"
#include "hunt/schema.hpp"

namespace hunt {

using TargetMap = std::map<std::string, std::size_t>;

/// Explicit per-class targets for the three resampling stages.
struct BalancePlan {
    std::size_t min_class_size = 2;
    TargetMap under_targets;
    TargetMap over_targets;
    TargetMap smote_targets;
    std::size_t smote_k = 5;
    std::uint64_t seed = 0;

    /// Checks the target ordering under ≤ over ≤ smote per class. Throws
    /// DataError.
    void validate() const;
    bool empty() const noexcept;

    friend bool operator==(const BalancePlan&, const BalancePlan&) = default;
};

nlohmann::json plan_to_json(const BalancePlan& plan);
BalancePlan plan_from_json(const nlohmann::json& doc);
std::string serialize_plan(const BalancePlan& plan);
BalancePlan parse_plan(std::string_view text);
BalancePlan load_plan(const std::filesystem::path& path);
void save_plan(const BalancePlan& plan, const std::filesystem::path& path);

/// Built-in golden plans ("uwf2022", "cicids2017"); nullptr otherwise.
const BalancePlan* golden_plan(std::string_view name) noexcept;

/// Class counts in class-index order.
using Histogram = std::vector<std::pair<std::string, std::size_t>>;

Histogram histogram_of(const FeatureMatrix& matrix);

struct BalanceTrace {
    Histogram initial;
    Histogram after_removal;
    Histogram after_under;
    Histogram after_over;
    Histogram after_smote;
    std::vector<std::string> removed_classes;
};

nlohmann::json trace_to_json(const BalanceTrace& trace);

/// Drops classes with fewer than `min_class_size` rows and compacts the class
/// index space. Classes without any rows are dropped silently; `removed` lists
/// only classes that had rows. Throws DataError if nothing remains.
std::pair<LogTable, std::vector<std::string>> remove_small_classes(const LogTable& table,
                                                                   std::size_t min_class_size);
std::pair<FeatureMatrix, std::vector<std::string>> remove_small_classes(const FeatureMatrix& matrix,
                                                                        std::size_t min_class_size);

/// Keeps a seeded uniform subset of each targeted class; retained rows keep
/// their original order.
FeatureMatrix undersample(const FeatureMatrix& matrix, const TargetMap& targets, std::uint64_t seed);

/// Appends duplicates of uniformly chosen class members until each targeted
/// class reaches its target.
FeatureMatrix random_oversample(const FeatureMatrix& matrix, const TargetMap& targets, std::uint64_t seed);

struct SmoteResult {
    FeatureMatrix matrix;
    /// For each appended synthetic row (in order), the input rows (x, x')
    /// whose segment it was drawn from.
    std::vector<std::pair<std::size_t, std::size_t>> origins;
};

/// Appends synthetic rows x + u·(x' − x), x a uniformly chosen class member,
/// x' one of its k nearest class members (Euclidean), u uniform in [0, 1).
SmoteResult smote(const FeatureMatrix& matrix, const TargetMap& targets, std::size_t k, std::uint64_t seed);

/// Removal, undersampling, oversampling and SMOTE, in that order.
std::pair<FeatureMatrix, BalanceTrace> apply_plan(const FeatureMatrix& matrix, const BalancePlan& plan);

/// Rescales a plan for a partition holding `fraction` of the rows the plan
/// was written for, then clamps it to what `matrix` can satisfy: under
/// targets never exceed the class count, over and SMOTE targets never fall
/// below it, SMOTE is skipped for classes with fewer than two rows, and
/// targets for classes the matrix lacks are dropped.
BalancePlan adapt_plan(const BalancePlan& plan, const FeatureMatrix& matrix, double fraction);

} // namespace hunt
