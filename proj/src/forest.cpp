#include "hunt/forest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "hunt/version.hpp"

namespace hunt {

namespace {

using u128 = unsigned __int128;

constexpr const char* kModelFormat = "hunt-forest";
constexpr int kModelVersion = 1;

// Split quality as the exact fraction num/den of Σ_left c²/n_L + Σ_right c²/n_R
// (larger is better; weighted Gini = 1 − (num/den)/n).
struct Candidate {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    u128 num = 0;
    u128 den = 1;
};

double midpoint(double a, double b) {
    double mid = (a + b) / 2.0;
    if (!std::isfinite(mid)) mid = a / 2.0 + b / 2.0;
    if (!(mid >= a && mid < b)) mid = a;
    return mid;
}

class SplitSearch {
public:
    SplitSearch(const FeatureMatrix& m, std::size_t class_count) : m_(m), k_(class_count) {}

    // Sets up the parent statistics for `rows`.
    void reset(std::span<const std::size_t> rows) {
        rows_ = rows;
        parent_.assign(k_, 0);
        for (auto r : rows) ++parent_[m_.labels[r]];
        parent_sq_ = 0;
        for (auto c : parent_) parent_sq_ += static_cast<std::uint64_t>(c) * c;
        best_ = Candidate{};
        best_.num = parent_sq_;
        best_.den = rows.size();
    }

    // Returns false when the feature is constant over the node.
    bool evaluate(std::size_t f) {
        const std::size_t n = rows_.size();
        buf_.clear();
        for (auto r : rows_) buf_.emplace_back(m_.at(r, f), m_.labels[r]);
        std::sort(buf_.begin(), buf_.end());
        if (buf_.front().first == buf_.back().first) return false;

        left_.assign(k_, 0);
        right_ = parent_;
        std::uint64_t sl = 0;
        std::uint64_t sr = parent_sq_;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const auto y = buf_[i].second;
            sl += 2ULL * left_[y] + 1;
            ++left_[y];
            sr -= 2ULL * right_[y] - 1;
            --right_[y];
            if (buf_[i].first == buf_[i + 1].first) continue;
            const std::uint64_t nl = i + 1;
            const std::uint64_t nr = n - nl;
            const u128 num = static_cast<u128>(sl) * nr + static_cast<u128>(sr) * nl;
            const u128 den = static_cast<u128>(nl) * nr;
            const u128 lhs = num * best_.den;
            const u128 rhs = best_.num * den;
            if (lhs < rhs) continue;
            const double thr = midpoint(buf_[i].first, buf_[i + 1].first);
            if (lhs == rhs) {
                if (!best_.found) continue; // must strictly beat the parent
                if (f > best_.feature || (f == best_.feature && thr >= best_.threshold)) continue;
            }
            best_ = Candidate{true, f, thr, num, den};
        }
        return true;
    }

    std::optional<Split> result() const {
        if (!best_.found) return std::nullopt;
        const double score = static_cast<double>(best_.num) / static_cast<double>(best_.den);
        const double impurity = 1.0 - score / static_cast<double>(rows_.size());
        return Split{best_.feature, best_.threshold, std::max(0.0, impurity)};
    }

    const std::vector<std::uint32_t>& parent_counts() const { return parent_; }

private:
    const FeatureMatrix& m_;
    std::size_t k_;
    std::span<const std::size_t> rows_;
    std::vector<std::uint32_t> parent_;
    std::vector<std::uint32_t> left_;
    std::vector<std::uint32_t> right_;
    std::uint64_t parent_sq_ = 0;
    std::vector<std::pair<double, std::uint32_t>> buf_;
    Candidate best_;
};

std::size_t argmax(std::span<const std::uint32_t> counts) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] > counts[best]) best = i;
    }
    return best;
}

std::size_t present_classes(const FeatureMatrix& m) {
    const auto counts = label_counts(m.labels, m.class_names.size());
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
}

std::vector<Tree> grow_trees(const FeatureMatrix& matrix, const ForestConfig& config, std::size_t count,
                             std::uint32_t batch_id, std::size_t class_count, std::size_t threads) {
    std::vector<Tree> trees(count);
    parallel_for(count, threads, [&](std::size_t t) {
        const auto seed = derive_seed(config.seed, batch_id, t);
        Rng rng(seed);
        std::vector<std::size_t> rows(matrix.rows);
        if (config.bootstrap) {
            for (auto& r : rows) r = rng.index(matrix.rows);
        } else {
            for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        }
        trees[t] = grow_tree(matrix, rows, config, rng.next(), class_count);
        trees[t].batch_id = batch_id;
    });
    return trees;
}

} // namespace

std::size_t FeatureChoice::resolve(std::size_t width) const {
    switch (mode) {
    case Mode::all: return std::max<std::size_t>(width, 1);
    case Mode::fixed: return std::max<std::size_t>(std::min(count, width), 1);
    case Mode::sqrt:
    default: {
        auto n = static_cast<std::size_t>(std::sqrt(static_cast<double>(width)));
        while ((n + 1) * (n + 1) <= width) ++n;
        while (n * n > width) --n;
        return std::max<std::size_t>(n, 1);
    }
    }
}

std::string FeatureChoice::to_string() const {
    switch (mode) {
    case Mode::all: return "all";
    case Mode::fixed: return std::to_string(count);
    case Mode::sqrt:
    default: return "sqrt";
    }
}

FeatureChoice FeatureChoice::parse(std::string_view text) {
    if (text == "sqrt") return {};
    if (text == "all") return {Mode::all, 0};
    std::size_t n = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
    if (ec != std::errc{} || end != text.data() + text.size() || n == 0) {
        throw UsageError("features must be sqrt, all or a positive integer, got '" + std::string(text) + "'");
    }
    return {Mode::fixed, n};
}

void ForestConfig::validate(std::size_t width) const {
    if (n_trees == 0) throw DataError("forest: n_trees must be positive");
    if (max_depth && *max_depth == 0) throw DataError("forest: max_depth must be positive");
    if (min_samples_split < 2) throw DataError("forest: min_samples_split must be at least 2");
    if (features.mode == FeatureChoice::Mode::fixed) {
        if (features.count == 0) throw DataError("forest: fixed feature count must be positive");
        if (width > 0 && features.count > width) {
            throw DataError("forest: " + std::to_string(features.count) + " features per split exceeds width " +
                            std::to_string(width));
        }
    }
}

const TreeNode& Tree::leaf_for(std::span<const double> row) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        const auto& n = nodes[i];
        i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i];
}

std::size_t Tree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t deepest = 0;
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes[i].is_leaf()) {
            stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
        }
    }
    return deepest;
}

std::uint32_t ForestModel::max_batch_id() const noexcept {
    std::uint32_t id = 0;
    for (const auto& t : trees) id = std::max(id, t.batch_id);
    return id;
}

double gini(std::span<const std::uint32_t> counts) {
    std::uint64_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw DataError("gini of an empty node");
    double sum = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum += p * p;
    }
    return 1.0 - sum;
}

std::optional<Split> best_split(const FeatureMatrix& matrix, std::span<const std::size_t> rows,
                                std::span<const std::size_t> candidate_features, std::size_t min_samples_split) {
    if (rows.size() < std::max<std::size_t>(min_samples_split, 2)) return std::nullopt;
    SplitSearch search(matrix, matrix.class_names.size());
    search.reset(rows);
    for (auto f : candidate_features) {
        if (f >= matrix.cols) throw DataError("best_split: feature index out of range");
        search.evaluate(f);
    }
    return search.result();
}

Tree grow_tree(const FeatureMatrix& matrix, std::span<const std::size_t> rows_in, const ForestConfig& config,
               std::uint64_t seed, std::size_t class_count) {
    Rng rng(seed);
    const std::size_t width = matrix.cols;
    const std::size_t mtry = config.features.resolve(width);
    std::vector<std::size_t> rows(rows_in.begin(), rows_in.end());
    std::vector<std::size_t> features(width);
    SplitSearch search(matrix, class_count);

    Tree tree;
    tree.nodes.emplace_back();
    struct Work {
        std::size_t node, begin, end, depth;
    };
    std::vector<Work> stack{{0, 0, rows.size(), 0}};
    while (!stack.empty()) {
        const Work w = stack.back();
        stack.pop_back();
        const std::span<const std::size_t> node_rows(rows.data() + w.begin, w.end - w.begin);
        search.reset(node_rows);
        const auto& counts = search.parent_counts();
        const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;

        std::optional<Split> split;
        const bool depth_ok = !config.max_depth || w.depth < *config.max_depth;
        if (!pure && depth_ok && node_rows.size() >= config.min_samples_split && width > 0) {
            for (std::size_t i = 0; i < width; ++i) features[i] = i;
            std::size_t visited = 0;
            for (std::size_t i = 0; i < width && visited < mtry; ++i) {
                std::swap(features[i], features[i + rng.index(width - i)]);
                if (search.evaluate(features[i])) ++visited;
            }
            split = search.result();
        }
        if (!split) {
            tree.nodes[w.node].counts = counts;
            continue;
        }
        const auto mid = std::stable_partition(rows.begin() + static_cast<std::ptrdiff_t>(w.begin),
                                               rows.begin() + static_cast<std::ptrdiff_t>(w.end), [&](std::size_t r) {
                                                   return matrix.at(r, split->feature) <= split->threshold;
                                               });
        const auto cut = static_cast<std::size_t>(mid - rows.begin());
        const auto left = tree.nodes.size();
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        auto& node = tree.nodes[w.node];
        node.feature = static_cast<std::int32_t>(split->feature);
        node.threshold = split->threshold;
        node.left = static_cast<std::int32_t>(left);
        node.right = static_cast<std::int32_t>(left + 1);
        stack.push_back({left + 1, cut, w.end, w.depth + 1});
        stack.push_back({left, w.begin, cut, w.depth + 1});
    }
    return tree;
}

ForestModel train(const FeatureMatrix& matrix, const ForestConfig& config, const EncodingMap& encoding,
                  std::string profile, std::size_t threads) {
    if (matrix.rows == 0) throw DataError("train: empty matrix");
    matrix.check();
    config.validate(matrix.cols);
    if (present_classes(matrix) < 2) throw DataError("train: need at least two classes with rows");
    if (matrix.rows < config.min_samples_split) throw DataError("train: fewer rows than min_samples_split");
    if (encoding.width() != 0 && encoding.width() != matrix.cols) {
        throw DataError("train: encoding width does not match the matrix");
    }
    ForestModel model;
    model.config = config;
    model.profile = std::move(profile);
    model.class_names = matrix.class_names;
    model.encoding = encoding;
    model.trees = grow_trees(matrix, config, config.n_trees, 0, matrix.class_names.size(), threads);
    return model;
}

Prediction predict(const ForestModel& model, std::span<const double> row) {
    if (model.trees.empty()) throw DataError("predict: model has no trees");
    if (model.width() != 0 && row.size() != model.width()) {
        throw DataError("predict: row has " + std::to_string(row.size()) + " features, model expects " +
                        std::to_string(model.width()));
    }
    Prediction p;
    p.votes.assign(model.class_names.size(), 0);
    for (const auto& t : model.trees) ++p.votes[argmax(t.leaf_for(row).counts)];
    p.label = static_cast<std::uint32_t>(argmax(p.votes));
    p.class_name = model.class_names[p.label];
    return p;
}

std::vector<std::uint32_t> predict_labels(const ForestModel& model, const FeatureMatrix& matrix,
                                          std::size_t threads) {
    if (model.width() != 0 && matrix.cols != model.width()) {
        throw DataError("predict: matrix has " + std::to_string(matrix.cols) + " features, model expects " +
                        std::to_string(model.width()));
    }
    std::vector<std::uint32_t> out(matrix.rows);
    constexpr std::size_t kChunk = 256;
    const std::size_t chunks = (matrix.rows + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](std::size_t c) {
        const auto end = std::min(matrix.rows, (c + 1) * kChunk);
        for (std::size_t r = c * kChunk; r < end; ++r) out[r] = predict(model, matrix.row(r)).label;
    });
    return out;
}

ForestModel extend(const ForestModel& model, const FeatureMatrix& batch, std::size_t trees_per_batch,
                   std::size_t threads) {
    if (trees_per_batch == 0) throw DataError("extend: trees_per_batch must be positive");
    if (batch.rows == 0) throw DataError("extend: empty batch");
    if (model.width() != 0 && batch.cols != model.width()) {
        throw DataError("extend: batch has " + std::to_string(batch.cols) + " features, model expects " +
                        std::to_string(model.width()));
    }
    batch.check();
    std::vector<std::uint32_t> remap(batch.class_names.size());
    for (std::size_t k = 0; k < batch.class_names.size(); ++k) {
        const auto it = std::find(model.class_names.begin(), model.class_names.end(), batch.class_names[k]);
        if (it == model.class_names.end()) {
            if (std::find(batch.labels.begin(), batch.labels.end(), k) == batch.labels.end()) continue;
            throw DataError("extend: class '" + batch.class_names[k] + "' is not a model class");
        }
        remap[k] = static_cast<std::uint32_t>(it - model.class_names.begin());
    }
    FeatureMatrix mapped = batch;
    for (auto& l : mapped.labels) l = remap[l];
    mapped.class_names = model.class_names;

    ForestModel out = model;
    const auto batch_id = model.trees.empty() ? 1U : model.max_batch_id() + 1;
    auto trees = grow_trees(mapped, model.config, trees_per_batch, batch_id, model.class_names.size(), threads);
    out.trees.insert(out.trees.end(), std::make_move_iterator(trees.begin()), std::make_move_iterator(trees.end()));
    return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> workers;
    for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    workers.clear();
    if (error) std::rethrow_exception(error);
}

nlohmann::json config_to_json(const ForestConfig& config) {
    return {{"n_trees", config.n_trees},
            {"max_depth", config.max_depth ? nlohmann::json(*config.max_depth) : nlohmann::json(nullptr)},
            {"min_samples_split", config.min_samples_split},
            {"features", config.features.to_string()},
            {"bootstrap", config.bootstrap},
            {"seed", config.seed}};
}

ForestConfig config_from_json(const nlohmann::json& doc) {
    try {
        ForestConfig c;
        c.n_trees = doc.at("n_trees").get<std::size_t>();
        const auto& depth = doc.at("max_depth");
        c.max_depth = depth.is_null() ? std::nullopt : std::optional<std::size_t>(depth.get<std::size_t>());
        c.min_samples_split = doc.at("min_samples_split").get<std::size_t>();
        c.features = FeatureChoice::parse(doc.at("features").get<std::string>());
        c.bootstrap = doc.at("bootstrap").get<bool>();
        c.seed = doc.at("seed").get<std::uint64_t>();
        c.validate(0);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("forest config: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("forest config: ") + e.what());
    }
}

nlohmann::json model_to_json(const ForestModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : model.trees) {
        nlohmann::json feature = nlohmann::json::array(), threshold = nlohmann::json::array(),
                       left = nlohmann::json::array(), right = nlohmann::json::array(),
                       counts = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            feature.push_back(n.feature);
            threshold.push_back(n.threshold);
            left.push_back(n.left);
            right.push_back(n.right);
            counts.push_back(n.counts);
        }
        trees.push_back({{"batch_id", t.batch_id},
                         {"feature", std::move(feature)},
                         {"threshold", std::move(threshold)},
                         {"left", std::move(left)},
                         {"right", std::move(right)},
                         {"counts", std::move(counts)}});
    }
    return {{"format", kModelFormat},
            {"version", kModelVersion},
            {"tool_version", kToolVersion},
            {"seed", model.config.seed},
            {"profile", model.profile},
            {"class_names", model.class_names},
            {"config", config_to_json(model.config)},
            {"encoding", encoding_to_json(model.encoding)},
            {"trees", std::move(trees)}};
}

ForestModel model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != kModelFormat) throw DataError("not a forest model file");
        if (doc.at("version").get<int>() != kModelVersion) {
            throw DataError("unsupported model version " + std::to_string(doc.at("version").get<int>()));
        }
        ForestModel m;
        m.profile = doc.at("profile").get<std::string>();
        m.class_names = doc.at("class_names").get<std::vector<std::string>>();
        m.config = config_from_json(doc.at("config"));
        m.encoding = encoding_from_json(doc.at("encoding"));
        const auto k = m.class_names.size();
        for (const auto& jt : doc.at("trees")) {
            Tree t;
            t.batch_id = jt.at("batch_id").get<std::uint32_t>();
            const auto feature = jt.at("feature").get<std::vector<std::int32_t>>();
            const auto threshold = jt.at("threshold").get<std::vector<double>>();
            const auto left = jt.at("left").get<std::vector<std::int32_t>>();
            const auto right = jt.at("right").get<std::vector<std::int32_t>>();
            const auto counts = jt.at("counts").get<std::vector<std::vector<std::uint32_t>>>();
            const auto n = feature.size();
            if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || counts.size() != n) {
                throw DataError("model: tree arrays have inconsistent lengths");
            }
            for (std::size_t i = 0; i < n; ++i) {
                TreeNode node{feature[i], threshold[i], left[i], right[i], counts[i]};
                if (node.is_leaf()) {
                    if (node.counts.size() != k) throw DataError("model: leaf class counts have the wrong length");
                } else {
                    const auto in_range = [&](std::int32_t c) {
                        return c > static_cast<std::int32_t>(i) && c < static_cast<std::int32_t>(n);
                    };
                    if (!in_range(node.left) || !in_range(node.right)) throw DataError("model: bad child index");
                    if (m.encoding.width() != 0 && static_cast<std::size_t>(node.feature) >= m.encoding.width()) {
                        throw DataError("model: split feature out of range");
                    }
                }
                t.nodes.push_back(std::move(node));
            }
            m.trees.push_back(std::move(t));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model: ") + e.what());
    }
}

std::string serialize_model(const ForestModel& model) { return model_to_json(model).dump() + "\n"; }

ForestModel parse_model(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("model: ") + e.what());
    }
    return model_from_json(doc);
}

void save_model(const ForestModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model '" + path.string() + "'");
    out << serialize_model(model);
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ForestModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

} // namespace hunt
