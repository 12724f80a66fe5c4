#include "hunt/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "hunt/error.hpp"
#include "hunt/rng.hpp"
#include "hunt/version.hpp"

namespace hunt {

namespace {

// Stream tag for train-partition balancing; the split uses the run seed's
// per-class streams and the forest its per-tree streams.
constexpr std::uint64_t kBalanceStream = 0x62616c616e6365ULL;

std::size_t floor_share(double fraction, std::size_t n) {
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

ConfusionMatrix pooled(const std::vector<EvaluationReport>& runs) {
    ConfusionMatrix out;
    if (runs.empty()) return out;
    out = runs.front().matrix;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        const auto& m = runs[i].matrix;
        for (std::size_t r = 0; r < m.counts.size(); ++r) {
            for (std::size_t c = 0; c < m.counts[r].size(); ++c) out.counts[r][c] += m.counts[r][c];
        }
    }
    return out;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace

SplitIndices split_indices(std::span<const std::uint32_t> labels, std::size_t class_count, double train_fraction,
                           std::uint64_t seed, bool stratified) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("split fraction must lie strictly between 0 and 1");
    }
    const std::size_t n = labels.size();
    const std::size_t n_train = floor_share(train_fraction, n);
    if (n_train == 0 || n_train == n) {
        throw DataError("split of " + std::to_string(n) + " rows leaves an empty partition");
    }
    std::vector<std::uint8_t> in_train(n, 0);
    if (!stratified) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(seed);
        for (std::size_t i = 0; i < n_train; ++i) {
            std::swap(idx[i], idx[i + rng.index(n - i)]);
            in_train[idx[i]] = 1;
        }
    } else {
        std::vector<std::vector<std::size_t>> members(class_count);
        for (std::size_t r = 0; r < n; ++r) {
            if (labels[r] >= class_count) throw DataError("split: label index out of range");
            members[labels[r]].push_back(r);
        }
        std::vector<std::size_t> take(class_count, 0);
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t k = 0; k < class_count; ++k) {
            const auto c = members[k].size();
            if (c == 1) throw DataError("stratified split: class index " + std::to_string(k) + " has a single row");
            const double exact = train_fraction * static_cast<double>(c);
            take[k] = floor_share(train_fraction, c);
            assigned += take[k];
            const double frac = exact - static_cast<double>(take[k]);
            if (frac > 0.0 && take[k] < c) remainders.emplace_back(frac, k);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < n_train && i < remainders.size(); ++i, ++assigned) {
            ++take[remainders[i].second];
        }
        for (std::size_t k = 0; k < class_count; ++k) {
            auto& rows = members[k];
            Rng rng(derive_seed(seed, k));
            for (std::size_t i = 0; i < take[k]; ++i) {
                std::swap(rows[i], rows[i + rng.index(rows.size() - i)]);
                in_train[rows[i]] = 1;
            }
        }
    }
    SplitIndices out;
    for (std::size_t r = 0; r < n; ++r) (in_train[r] ? out.train : out.test).push_back(r);
    if (out.train.empty() || out.test.empty()) throw DataError("split leaves an empty partition");
    return out;
}

std::pair<FeatureMatrix, FeatureMatrix> split_train_test(const FeatureMatrix& matrix, double train_fraction,
                                                         std::uint64_t seed, bool stratified) {
    const auto idx = split_indices(matrix.labels, matrix.class_names.size(), train_fraction, seed, stratified);
    return {matrix.select_rows(idx.train), matrix.select_rows(idx.test)};
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts) {
        for (auto c : row) t += c;
    }
    return t;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

ConfusionMatrix confusion_matrix(std::span<const std::uint32_t> y_true, std::span<const std::uint32_t> y_pred,
                                 std::size_t class_count) {
    if (y_true.size() != y_pred.size()) {
        throw DataError("confusion matrix: " + std::to_string(y_true.size()) + " true labels but " +
                        std::to_string(y_pred.size()) + " predictions");
    }
    ConfusionMatrix m;
    m.counts.assign(class_count, std::vector<std::uint64_t>(class_count, 0));
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= class_count || y_pred[i] >= class_count) {
            throw DataError("confusion matrix: label " + std::to_string(std::max(y_true[i], y_pred[i])) +
                            " outside " + std::to_string(class_count) + " classes");
        }
        ++m.counts[y_true[i]][y_pred[i]];
    }
    return m;
}

Metrics metrics(const ConfusionMatrix& matrix) {
    const std::size_t k = matrix.counts.size();
    Metrics out;
    out.per_class.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        std::uint64_t row = 0;
        std::uint64_t col = 0;
        for (std::size_t i = 0; i < k; ++i) {
            row += matrix.counts[j][i];
            col += matrix.counts[i][j];
        }
        auto& m = out.per_class[j];
        m.precision = ratio(matrix.counts[j][j], col);
        m.recall = ratio(matrix.counts[j][j], row);
        m.f1 = m.precision + m.recall == 0.0 ? 0.0 : 2.0 * m.precision * m.recall / (m.precision + m.recall);
        out.macro.precision += m.precision;
        out.macro.recall += m.recall;
        out.macro.f1 += m.f1;
    }
    if (k > 0) {
        out.macro.precision /= static_cast<double>(k);
        out.macro.recall /= static_cast<double>(k);
        out.macro.f1 /= static_cast<double>(k);
    }
    out.accuracy = ratio(matrix.trace(), matrix.total());
    return out;
}

const char* to_string(BalanceMode mode) noexcept {
    switch (mode) {
    case BalanceMode::none: return "none";
    case BalanceMode::before_split: return "before-split";
    case BalanceMode::train_only:
    default: return "train-only";
    }
}

BalanceMode parse_balance_mode(std::string_view text) {
    if (text == "none") return BalanceMode::none;
    if (text == "train-only") return BalanceMode::train_only;
    if (text == "before-split") return BalanceMode::before_split;
    throw UsageError("balance mode must be none, train-only or before-split, got '" + std::string(text) + "'");
}

EvaluationReport evaluate_model(const ForestModel& model, const FeatureMatrix& test, std::uint64_t seed,
                                double split_ratio) {
    if (test.class_names != model.class_names) throw DataError("evaluate: test classes differ from model classes");
    const auto predicted = predict_labels(model, test);
    EvaluationReport r;
    r.matrix = confusion_matrix(test.labels, predicted, model.class_names.size());
    r.matrix.class_names = model.class_names;
    r.metrics = metrics(r.matrix);
    r.seed = seed;
    r.split_ratio = split_ratio;
    return r;
}

RunOutcome evaluate_once(const FeatureMatrix& matrix, const ForestConfig& config, const HoldoutOptions& options,
                         std::uint64_t run_seed, const EncodingMap& encoding, const std::string& profile) {
    RunOutcome out;
    auto [train_part, test_part] = split_train_test(matrix, options.train_fraction, run_seed, options.stratified);
    if (options.balance == BalanceMode::train_only && options.plan) {
        auto plan = adapt_plan(*options.plan, train_part, options.train_fraction);
        plan.seed = derive_seed(run_seed, kBalanceStream);
        // Classes kept for the whole table must stay in the model even if the
        // partition has too few rows to pass the plan's minimum.
        plan.min_class_size = 1;
        auto [balanced, trace] = apply_plan(train_part, plan);
        train_part = std::move(balanced);
        out.trace = std::move(trace);
        // Removal compacts classes; restore the full class list.
        std::vector<std::uint32_t> remap(train_part.class_names.size());
        for (std::size_t k = 0; k < train_part.class_names.size(); ++k) {
            remap[k] = static_cast<std::uint32_t>(
                std::find(matrix.class_names.begin(), matrix.class_names.end(), train_part.class_names[k]) -
                matrix.class_names.begin());
        }
        for (auto& l : train_part.labels) l = remap[l];
        train_part.class_names = matrix.class_names;
    }
    ForestConfig forest = config;
    forest.seed = run_seed;
    const std::size_t threads = options.n_runs > 1 ? 1 : options.threads;
    out.model = train(train_part, forest, encoding, profile, threads);
    out.report = evaluate_model(out.model, test_part, run_seed, options.train_fraction);
    return out;
}

HoldoutResult repeated_holdout(const FeatureMatrix& matrix, const ForestConfig& config,
                               const HoldoutOptions& options) {
    if (options.n_runs == 0) throw DataError("repeated holdout needs at least one run");
    HoldoutResult result;
    const FeatureMatrix* source = &matrix;
    FeatureMatrix balanced;
    HoldoutOptions run_options = options;
    if (options.balance == BalanceMode::before_split && options.plan) {
        auto plan = *options.plan;
        auto [m, trace] = apply_plan(matrix, plan);
        balanced = std::move(m);
        source = &balanced;
        result.trace = std::move(trace);
        run_options.balance = BalanceMode::none;
    }
    result.runs.resize(options.n_runs);
    parallel_for(options.n_runs, options.threads, [&](std::size_t i) {
        result.runs[i] = evaluate_once(*source, config, run_options, derive_seed(options.base_seed, i)).report;
    });
    double sum = 0.0;
    for (const auto& r : result.runs) sum += r.metrics.accuracy;
    result.mean_accuracy = sum / static_cast<double>(options.n_runs);
    double sq = 0.0;
    for (const auto& r : result.runs) sq += (r.metrics.accuracy - result.mean_accuracy) * (r.metrics.accuracy - result.mean_accuracy);
    result.std_accuracy = std::sqrt(sq / static_cast<double>(options.n_runs));
    return result;
}

nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t k = 0; k < report.metrics.per_class.size(); ++k) {
        const auto& m = report.metrics.per_class[k];
        std::uint64_t support = 0;
        for (auto c : report.matrix.counts[k]) support += c;
        per_class.push_back({{"class", report.matrix.class_names.at(k)},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"support", support}});
    }
    const auto& macro = report.metrics.macro;
    return {{"class_names", report.matrix.class_names},
            {"matrix", report.matrix.counts},
            {"per_class", std::move(per_class)},
            {"macro", {{"precision", macro.precision}, {"recall", macro.recall}, {"f1", macro.f1}}},
            {"accuracy", report.metrics.accuracy},
            {"seed", report.seed},
            {"split_ratio", report.split_ratio},
            {"tool_version", kToolVersion}};
}

nlohmann::json holdout_to_json(const HoldoutResult& result, const HoldoutOptions& options) {
    EvaluationReport pooled_report;
    pooled_report.matrix = pooled(result.runs);
    pooled_report.metrics = metrics(pooled_report.matrix);
    pooled_report.seed = options.base_seed;
    pooled_report.split_ratio = options.train_fraction;
    auto doc = report_to_json(pooled_report);
    doc["accuracy"] = result.mean_accuracy;
    doc["n_runs"] = result.runs.size();
    doc["mean_accuracy"] = result.mean_accuracy;
    doc["std_accuracy"] = result.std_accuracy;
    doc["stratified"] = options.stratified;
    doc["balance_mode"] = to_string(options.balance);
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : result.runs) {
        runs.push_back({{"seed", r.seed}, {"accuracy", r.metrics.accuracy}, {"macro_f1", r.metrics.macro.f1}});
    }
    doc["runs"] = std::move(runs);
    return doc;
}

std::string render_text(const EvaluationReport& report) {
    const auto& names = report.matrix.class_names;
    const auto& counts = report.matrix.counts;
    const std::size_t k = names.size();
    std::vector<std::vector<std::string>> cells(k, std::vector<std::string>(k));
    std::size_t name_w = 4;
    for (const auto& n : names) name_w = std::max(name_w, n.size());
    std::vector<std::size_t> col_w(k);
    for (std::size_t i = 0; i < k; ++i) {
        std::uint64_t row = 0;
        for (auto c : counts[i]) row += c;
        for (std::size_t j = 0; j < k; ++j) {
            cells[i][j] = std::to_string(counts[i][j]) + " (" + fixed(100.0 * ratio(counts[i][j], row), 1) + "%)";
        }
    }
    for (std::size_t j = 0; j < k; ++j) {
        col_w[j] = names[j].size();
        for (std::size_t i = 0; i < k; ++i) col_w[j] = std::max(col_w[j], cells[i][j].size());
    }
    auto pad = [](const std::string& s, std::size_t w, bool left) {
        const std::string fill(w > s.size() ? w - s.size() : 0, ' ');
        return left ? s + fill : fill + s;
    };
    std::ostringstream out;
    out << "confusion matrix (rows: true, columns: predicted)\n";
    out << pad("", name_w, true);
    for (std::size_t j = 0; j < k; ++j) out << "  " << pad(names[j], col_w[j], false);
    out << "\n";
    for (std::size_t i = 0; i < k; ++i) {
        out << pad(names[i], name_w, true);
        for (std::size_t j = 0; j < k; ++j) out << "  " << pad(cells[i][j], col_w[j], false);
        out << "\n";
    }
    out << "\n" << pad("class", name_w, true) << "  precision     recall         f1\n";
    for (std::size_t i = 0; i < k; ++i) {
        const auto& m = report.metrics.per_class[i];
        out << pad(names[i], name_w, true) << "  " << pad(fixed(m.precision, 6), 9, false) << "  "
            << pad(fixed(m.recall, 6), 9, false) << "  " << pad(fixed(m.f1, 6), 9, false) << "\n";
    }
    const auto& macro = report.metrics.macro;
    out << pad("macro", name_w, true) << "  " << pad(fixed(macro.precision, 6), 9, false) << "  "
        << pad(fixed(macro.recall, 6), 9, false) << "  " << pad(fixed(macro.f1, 6), 9, false) << "\n";
    out << "accuracy " << fixed(report.metrics.accuracy, 6) << "  seed " << report.seed << "  split "
        << fixed(report.split_ratio, 2) << "\n";
    return out.str();
}

std::string render_text(const HoldoutResult& result) {
    EvaluationReport pooled_report;
    pooled_report.matrix = pooled(result.runs);
    pooled_report.metrics = metrics(pooled_report.matrix);
    if (!result.runs.empty()) {
        pooled_report.seed = result.runs.front().seed;
        pooled_report.split_ratio = result.runs.front().split_ratio;
    }
    std::ostringstream out;
    out << render_text(pooled_report);
    out << "runs " << result.runs.size() << "  mean accuracy " << fixed(result.mean_accuracy, 6) << "  std "
        << fixed(result.std_accuracy, 6) << "\n";
    return out.str();
}

} // namespace hunt
