#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "hunt/balance.hpp"
#include "hunt/encode.hpp"
#include "hunt/forest.hpp"

namespace hunt {

struct SplitIndices {
    std::vector<std::size_t> train; // ascending
    std::vector<std::size_t> test;  // ascending
};

/// floor(fraction · n) rows go to training. Stratified mode gives each class
/// floor(fraction · count) rows and hands the remaining training slots to the
/// classes with the largest fractional parts (ties to the lower class index).
/// Throws DataError for a fraction outside (0, 1), an empty side, or (when
/// stratified) a class with a single row.
SplitIndices split_indices(std::span<const std::uint32_t> labels, std::size_t class_count, double train_fraction,
                           std::uint64_t seed, bool stratified);

std::pair<FeatureMatrix, FeatureMatrix> split_train_test(const FeatureMatrix& matrix, double train_fraction,
                                                         std::uint64_t seed, bool stratified);

/// Row = true class, column = predicted class.
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::vector<std::uint64_t>> counts;

    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws DataError on length mismatch or an entry ≥ class_count.
ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> y_true, std::span<const std::uint32_t> y_pred,
                                 std::size_t class_count);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Zero denominators yield 0.
struct Metrics {
    std::vector<ClassMetrics> per_class;
    ClassMetrics macro;
    double accuracy = 0.0;
};

Metrics metrics(const ConfusionMatrix& matrix);

struct EvaluationReport {
    ConfusionMatrix matrix;
    Metrics metrics;
    std::uint64_t seed = 0;
    double split_ratio = 0.7;
};

/// Where rebalancing happens relative to the split.
enum class BalanceMode { none, train_only, before_split };

const char* to_string(BalanceMode mode) noexcept;
BalanceMode parse_balance_mode(std::string_view text);

struct HoldoutOptions {
    double train_fraction = 0.7;
    bool stratified = true;
    std::size_t n_runs = 1;
    std::uint64_t base_seed = 0;
    BalanceMode balance = BalanceMode::train_only;
    std::optional<BalancePlan> plan;
    std::size_t threads = 0;
};

struct RunOutcome {
    EvaluationReport report;
    ForestModel model;
    std::optional<BalanceTrace> trace;
};

/// One split/balance/train/evaluate cycle. The split and the forest are
/// seeded with `run_seed`; train-only balancing derives its own stream.
/// In train_only mode the plan is adapted to the training partition.
RunOutcome evaluate_once(const FeatureMatrix& matrix, const ForestConfig& config, const HoldoutOptions& options,
                         std::uint64_t run_seed, const EncodingMap& encoding = {}, const std::string& profile = {});

struct HoldoutResult {
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0; // population standard deviation
    std::vector<EvaluationReport> runs;
    std::optional<BalanceTrace> trace; // before_split mode only
};

/// Run i uses seed derive_seed(base_seed, i). Runs are independent and may
/// execute in parallel without changing the result.
HoldoutResult repeated_holdout(const FeatureMatrix& matrix, const ForestConfig& config,
                               const HoldoutOptions& options);

/// Test-set report for an existing model.
EvaluationReport evaluate_model(const ForestModel& model, const FeatureMatrix& test, std::uint64_t seed,
                                double split_ratio);

nlohmann::json report_to_json(const EvaluationReport& report);
/// Pooled confusion matrix over all runs plus per-run accuracies.
nlohmann::json holdout_to_json(const HoldoutResult& result, const HoldoutOptions& options);
/// Aligned grid of counts with row-normalized percentages, then metrics.
std::string render_text(const EvaluationReport& report);
std::string render_text(const HoldoutResult& result);

} // namespace hunt
