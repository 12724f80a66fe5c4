#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "hunt/encode.hpp"
#include "hunt/error.hpp"
#include "hunt/rng.hpp"

namespace hunt {

/// Number of candidate features examined per node.
struct FeatureChoice {
    enum class Mode { sqrt, all, fixed };
    Mode mode = Mode::sqrt;
    std::size_t count = 0; // fixed only

    /// Candidates per node for a matrix of `width` features (at least 1).
    std::size_t resolve(std::size_t width) const;
    std::string to_string() const;
    /// "sqrt", "all" or a positive integer.
    static FeatureChoice parse(std::string_view text);

    friend bool operator==(const FeatureChoice&, const FeatureChoice&) = default;
};

struct ForestConfig {
    std::size_t n_trees = 100;
    std::optional<std::size_t> max_depth = 16; // nullopt: unlimited
    std::size_t min_samples_split = 2;
    FeatureChoice features;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    /// Throws DataError for non-positive sizes or fixed(n) wider than `width`.
    void validate(std::size_t width) const;

    friend bool operator==(const ForestConfig&, const ForestConfig&) = default;
};

/// Internal nodes have feature ≥ 0 and send value ≤ threshold left. Leaves
/// have feature −1 and carry class counts.
struct TreeNode {
    std::int32_t feature = -1;
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<std::uint32_t> counts;

    bool is_leaf() const noexcept { return feature < 0; }

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
    std::vector<TreeNode> nodes; // root at 0
    std::uint32_t batch_id = 0;

    const TreeNode& leaf_for(std::span<const double> row) const;
    std::size_t depth() const;

    friend bool operator==(const Tree&, const Tree&) = default;
};

struct ForestModel {
    ForestConfig config;
    std::string profile;
    std::vector<std::string> class_names;
    EncodingMap encoding;
    std::vector<Tree> trees;

    std::size_t width() const noexcept { return encoding.width(); }
    std::uint32_t max_batch_id() const noexcept;

    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

/// 1 − Σ (c_i / total)². Throws DataError when the total is zero.
double gini(std::span<const std::uint32_t> counts);

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity = 0.0; // weighted Gini of the two children
};

/// Exhaustive search over midpoints between consecutive distinct values of
/// each candidate feature. Minimizes weighted child Gini; ties go to the lower
/// feature index, then the lower threshold. nullopt when fewer than
/// `min_samples_split` rows or no split lowers the parent impurity.
std::optional<Split> best_split(const FeatureMatrix& matrix, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_samples_split);

/// Grows a single tree on `rows` (repeats allowed) with the given RNG seed.
Tree grow_tree(const FeatureMatrix& matrix, std::span<const std::size_t> rows, const ForestConfig& config,
               std::uint64_t seed, std::size_t class_count);

/// Trains n_trees trees in parallel (`threads` 0 = hardware concurrency). The
/// result does not depend on the thread count.
ForestModel train(const FeatureMatrix& matrix, const ForestConfig& config, const EncodingMap& encoding = {},
                  std::string profile = {}, std::size_t threads = 0);

struct Prediction {
    std::uint32_t label = 0;
    std::string class_name;
    std::vector<std::uint32_t> votes;
};

/// Majority vote of per-tree leaf argmax (ties to the lowest class index).
Prediction predict(const ForestModel& model, std::span<const double> row);
std::vector<std::uint32_t> predict_labels(const ForestModel& model, const FeatureMatrix& matrix,
                                          std::size_t threads = 0);

/// Appends trees_per_batch trees trained on `batch` under a fresh batch id.
/// Batch class names must be model classes.
ForestModel extend(const ForestModel& model, const FeatureMatrix& batch, std::size_t trees_per_batch,
                   std::size_t threads = 0);

/// While more than `max_pending` items are queued, removes a uniformly chosen
/// one. Returns the removed items in removal order.
template <typename T>
std::vector<T> maybe_drop_batch(std::deque<T>& pending, std::size_t max_pending, std::uint64_t seed) {
    if (max_pending == 0) throw DataError("max_pending must be positive");
    std::vector<T> dropped;
    Rng rng(seed);
    while (pending.size() > max_pending) {
        const auto victim = pending.begin() + static_cast<std::ptrdiff_t>(rng.index(pending.size()));
        dropped.push_back(std::move(*victim));
        pending.erase(victim);
    }
    return dropped;
}

nlohmann::json config_to_json(const ForestConfig& config);
ForestConfig config_from_json(const nlohmann::json& doc);
nlohmann::json model_to_json(const ForestModel& model);
ForestModel model_from_json(const nlohmann::json& doc);
std::string serialize_model(const ForestModel& model);
ForestModel parse_model(std::string_view text);
void save_model(const ForestModel& model, const std::filesystem::path& path);
ForestModel load_model(const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). The first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

} // namespace hunt
