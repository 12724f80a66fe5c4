#include "hunt/balance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hunt/error.hpp"
#include "hunt/rng.hpp"

namespace hunt {

namespace {

// RNG stream tags per stage.
constexpr std::uint64_t kUnderStream = 1;
constexpr std::uint64_t kOverStream = 2;
constexpr std::uint64_t kSmoteStream = 3;

std::size_t class_index(const FeatureMatrix& m, const std::string& name, const char* stage) {
    const auto it = std::find(m.class_names.begin(), m.class_names.end(), name);
    if (it == m.class_names.end()) {
        throw DataError(std::string(stage) + ": target for unknown class '" + name + "'");
    }
    return static_cast<std::size_t>(it - m.class_names.begin());
}

std::vector<std::vector<std::size_t>> members_by_class(const FeatureMatrix& m) {
    std::vector<std::vector<std::size_t>> out(m.class_names.size());
    for (std::size_t r = 0; r < m.rows; ++r) out[m.labels[r]].push_back(r);
    return out;
}

void append_row(FeatureMatrix& m, std::span<const double> row, std::uint32_t label) {
    m.values.insert(m.values.end(), row.begin(), row.end());
    m.labels.push_back(label);
    ++m.rows;
}

TargetMap targets_from_json(const nlohmann::json& doc, const char* key) {
    TargetMap out;
    if (!doc.contains(key)) return out;
    const auto& obj = doc.at(key);
    if (!obj.is_object()) throw DataError(std::string("plan: '") + key + "' must be an object");
    for (const auto& [name, value] : obj.items()) {
        if (!value.is_number_unsigned()) {
            throw DataError(std::string("plan: ") + key + "." + name + " must be a non-negative integer");
        }
        out[name] = value.get<std::size_t>();
    }
    return out;
}

BalancePlan make_uwf_plan() {
    BalancePlan p;
    p.under_targets = {{"Benign traffic", 8874}, {"Reconnaissance", 9176}};
    p.over_targets = {{"Credential Access", 70},
                      {"Privilege Escalation", 130},
                      {"Exfiltration", 70},
                      {"Lateral Movement", 40},
                      {"Resource Development", 30}};
    p.smote_targets = {{"Privilege Escalation", 226},
                       {"Exfiltration", 166},
                       {"Lateral Movement", 136},
                       {"Resource Development", 126}};
    return p;
}

BalancePlan make_cic_plan() {
    BalancePlan p;
    p.under_targets = {{"Benign", 45426},     {"DoS Hulk", 23012},   {"PortScan", 15880},
                       {"DDoS", 12802},       {"FTP-Patator", 7935}, {"Bot", 1956}};
    p.over_targets = {{"Web Attack XSS", 1304},
                      {"Infiltration", 360},
                      {"Web Attack Sql Injection", 210},
                      {"Heartbleed", 110}};
    p.smote_targets = {{"FTP-Patator", 8149},       {"SSH-Patator", 6111},   {"DoS slowloris", 6010},
                       {"DoS Slowhttptest", 5713},  {"Bot", 2170},           {"Web Attack Brute Force", 1721},
                       {"Web Attack XSS", 1518},    {"Infiltration", 574},   {"Web Attack Sql Injection", 424},
                       {"Heartbleed", 324}};
    return p;
}

} // namespace

void BalancePlan::validate() const {
    if (min_class_size == 0) throw DataError("plan: min_class_size must be positive");
    if (smote_k == 0) throw DataError("plan: smote_k must be positive");
    for (const auto& [name, over] : over_targets) {
        const auto u = under_targets.find(name);
        if (u != under_targets.end() && over < u->second) {
            throw DataError("plan: over target below under target for '" + name + "'");
        }
    }
    for (const auto& [name, sm] : smote_targets) {
        const auto o = over_targets.find(name);
        if (o != over_targets.end() && sm < o->second) {
            throw DataError("plan: SMOTE target below over target for '" + name + "'");
        }
        const auto u = under_targets.find(name);
        if (u != under_targets.end() && sm < u->second) {
            throw DataError("plan: SMOTE target below under target for '" + name + "'");
        }
    }
}

bool BalancePlan::empty() const noexcept {
    return min_class_size <= 1 && under_targets.empty() && over_targets.empty() && smote_targets.empty();
}

nlohmann::json plan_to_json(const BalancePlan& plan) {
    nlohmann::ordered_json doc;
    doc["min_class_size"] = plan.min_class_size;
    doc["smote_k"] = plan.smote_k;
    doc["seed"] = plan.seed;
    auto targets = [](const TargetMap& m) {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& [k, v] : m) obj[k] = v;
        return obj;
    };
    doc["undersample"] = targets(plan.under_targets);
    doc["oversample"] = targets(plan.over_targets);
    doc["smote"] = targets(plan.smote_targets);
    return nlohmann::json::parse(doc.dump());
}

BalancePlan plan_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw DataError("plan: expected a JSON object");
    static const std::vector<std::string> known = {"min_class_size", "smote_k",   "seed",
                                                   "undersample",    "oversample", "smote"};
    for (const auto& [key, value] : doc.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw DataError("plan: unknown key '" + key + "'");
        }
    }
    BalancePlan plan;
    auto unsigned_field = [&](const char* key, auto& out) {
        if (!doc.contains(key)) return;
        if (!doc.at(key).is_number_unsigned()) throw DataError(std::string("plan: '") + key + "' must be a non-negative integer");
        out = doc.at(key).get<std::remove_reference_t<decltype(out)>>();
    };
    unsigned_field("min_class_size", plan.min_class_size);
    unsigned_field("smote_k", plan.smote_k);
    unsigned_field("seed", plan.seed);
    plan.under_targets = targets_from_json(doc, "undersample");
    plan.over_targets = targets_from_json(doc, "oversample");
    plan.smote_targets = targets_from_json(doc, "smote");
    plan.validate();
    return plan;
}

std::string serialize_plan(const BalancePlan& plan) {
    // Keep the stage keys in pipeline order for readability.
    nlohmann::ordered_json doc;
    doc["min_class_size"] = plan.min_class_size;
    doc["smote_k"] = plan.smote_k;
    doc["seed"] = plan.seed;
    for (const auto& [key, map] : {std::pair<const char*, const TargetMap*>{"undersample", &plan.under_targets},
                                   {"oversample", &plan.over_targets},
                                   {"smote", &plan.smote_targets}}) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (const auto& [k, v] : *map) obj[k] = v;
        doc[key] = obj;
    }
    return doc.dump(2) + "\n";
}

BalancePlan parse_plan(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(std::string("plan: ") + e.what());
    }
    return plan_from_json(doc);
}

BalancePlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open plan '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_plan(ss.str());
}

void save_plan(const BalancePlan& plan, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write plan '" + path.string() + "'");
    out << serialize_plan(plan);
}

const BalancePlan* golden_plan(std::string_view name) noexcept {
    static const BalancePlan uwf = make_uwf_plan();
    static const BalancePlan cic = make_cic_plan();
    if (name == "uwf2022") return &uwf;
    if (name == "cicids2017") return &cic;
    return nullptr;
}

Histogram histogram_of(const FeatureMatrix& matrix) {
    const auto counts = label_counts(matrix.labels, matrix.class_names.size());
    Histogram out;
    for (std::size_t k = 0; k < counts.size(); ++k) out.emplace_back(matrix.class_names[k], counts[k]);
    return out;
}

nlohmann::json trace_to_json(const BalanceTrace& trace) {
    auto hist = [](const Histogram& h) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [name, count] : h) arr.push_back({{"class", name}, {"count", count}});
        return arr;
    };
    return {{"initial", hist(trace.initial)},
            {"after_removal", hist(trace.after_removal)},
            {"after_undersample", hist(trace.after_under)},
            {"after_oversample", hist(trace.after_over)},
            {"after_smote", hist(trace.after_smote)},
            {"removed_classes", trace.removed_classes}};
}

namespace {

struct Compaction {
    std::vector<std::size_t> keep_rows;
    std::vector<std::uint32_t> new_label; // per old class; UINT32_MAX when dropped
    std::vector<std::string> class_names;
    std::vector<std::string> removed;
};

Compaction compact(const std::vector<std::uint32_t>& labels, const std::vector<std::string>& names,
                   std::size_t min_class_size) {
    if (min_class_size == 0) throw DataError("min_class_size must be positive");
    const auto counts = label_counts(labels, names.size());
    Compaction c;
    c.new_label.assign(names.size(), UINT32_MAX);
    for (std::size_t k = 0; k < names.size(); ++k) {
        if (counts[k] == 0) continue;
        if (counts[k] < min_class_size) {
            c.removed.push_back(names[k]);
            continue;
        }
        c.new_label[k] = static_cast<std::uint32_t>(c.class_names.size());
        c.class_names.push_back(names[k]);
    }
    if (c.class_names.empty()) throw DataError("every class has fewer than " + std::to_string(min_class_size) + " rows");
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (c.new_label[labels[r]] != UINT32_MAX) c.keep_rows.push_back(r);
    }
    return c;
}

} // namespace

std::pair<LogTable, std::vector<std::string>> remove_small_classes(const LogTable& table,
                                                                   std::size_t min_class_size) {
    auto c = compact(table.labels(), table.class_names(), min_class_size);
    const auto subset = table.select_rows(c.keep_rows);
    std::vector<std::uint32_t> labels;
    labels.reserve(subset.row_count());
    for (auto l : subset.labels()) labels.push_back(c.new_label[l]);
    return {LogTable(subset.columns(), std::move(labels), std::move(c.class_names)), std::move(c.removed)};
}

std::pair<FeatureMatrix, std::vector<std::string>> remove_small_classes(const FeatureMatrix& matrix,
                                                                        std::size_t min_class_size) {
    auto c = compact(matrix.labels, matrix.class_names, min_class_size);
    auto out = matrix.select_rows(c.keep_rows);
    for (auto& l : out.labels) l = c.new_label[l];
    out.class_names = std::move(c.class_names);
    return {std::move(out), std::move(c.removed)};
}

FeatureMatrix undersample(const FeatureMatrix& matrix, const TargetMap& targets, std::uint64_t seed) {
    auto members = members_by_class(matrix);
    std::vector<std::uint8_t> keep(matrix.rows, 1);
    for (const auto& [name, target] : targets) {
        const auto k = class_index(matrix, name, "undersample");
        auto& rows = members[k];
        if (target > rows.size()) {
            throw DataError("undersample: target " + std::to_string(target) + " exceeds the " +
                            std::to_string(rows.size()) + " rows of '" + name + "'");
        }
        Rng rng(derive_seed(seed, kUnderStream, k));
        for (std::size_t i = 0; i < target; ++i) std::swap(rows[i], rows[i + rng.index(rows.size() - i)]);
        for (std::size_t i = target; i < rows.size(); ++i) keep[rows[i]] = 0;
    }
    std::vector<std::size_t> kept;
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        if (keep[r]) kept.push_back(r);
    }
    return matrix.select_rows(kept);
}

FeatureMatrix random_oversample(const FeatureMatrix& matrix, const TargetMap& targets, std::uint64_t seed) {
    const auto members = members_by_class(matrix);
    std::vector<std::pair<std::size_t, std::size_t>> order; // (class, target)
    for (const auto& [name, target] : targets) {
        const auto k = class_index(matrix, name, "oversample");
        if (target < members[k].size()) {
            throw DataError("oversample: target " + std::to_string(target) + " is below the " +
                            std::to_string(members[k].size()) + " rows of '" + name + "'");
        }
        if (target > members[k].size() && members[k].empty()) {
            throw DataError("oversample: class '" + name + "' has no rows to replicate");
        }
        order.emplace_back(k, target);
    }
    std::sort(order.begin(), order.end());
    FeatureMatrix out = matrix;
    for (const auto& [k, target] : order) {
        const auto& rows = members[k];
        Rng rng(derive_seed(seed, kOverStream, k));
        for (std::size_t n = rows.size(); n < target; ++n) {
            const auto src = rows[rng.index(rows.size())];
            append_row(out, matrix.row(src), static_cast<std::uint32_t>(k));
        }
    }
    return out;
}

SmoteResult smote(const FeatureMatrix& matrix, const TargetMap& targets, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw DataError("smote: k must be positive");
    const auto members = members_by_class(matrix);
    std::vector<std::pair<std::size_t, std::size_t>> order;
    for (const auto& [name, target] : targets) {
        const auto c = class_index(matrix, name, "smote");
        const auto count = members[c].size();
        if (target < count) {
            throw DataError("smote: target " + std::to_string(target) + " is below the " + std::to_string(count) +
                            " rows of '" + name + "'");
        }
        if (target > count && count < 2) {
            throw DataError("smote: class '" + name + "' needs at least 2 rows, has " + std::to_string(count));
        }
        order.emplace_back(c, target);
    }
    std::sort(order.begin(), order.end());

    SmoteResult result{matrix, {}};
    const std::size_t d = matrix.cols;
    std::vector<double> synthetic(d);
    for (const auto& [c, target] : order) {
        const auto& rows = members[c];
        if (target == rows.size()) continue;
        const std::size_t k_eff = std::min(k, rows.size() - 1);
        Rng rng(derive_seed(seed, kSmoteStream, c));
        std::vector<std::vector<std::size_t>> neighbors(rows.size()); // positions within `rows`, cached
        std::vector<std::pair<double, std::size_t>> dist;
        for (std::size_t n = rows.size(); n < target; ++n) {
            const std::size_t base = rng.index(rows.size());
            auto& near = neighbors[base];
            if (near.empty()) {
                const auto x = matrix.row(rows[base]);
                dist.clear();
                for (std::size_t j = 0; j < rows.size(); ++j) {
                    if (j == base) continue;
                    const auto y = matrix.row(rows[j]);
                    double s = 0.0;
                    for (std::size_t f = 0; f < d; ++f) s += (x[f] - y[f]) * (x[f] - y[f]);
                    dist.emplace_back(s, j);
                }
                std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_eff), dist.end());
                for (std::size_t i = 0; i < k_eff; ++i) near.push_back(dist[i].second);
            }
            const std::size_t other = near[rng.index(near.size())];
            const double u = rng.unit();
            const auto x = matrix.row(rows[base]);
            const auto y = matrix.row(rows[other]);
            for (std::size_t f = 0; f < d; ++f) synthetic[f] = x[f] + u * (y[f] - x[f]);
            append_row(result.matrix, synthetic, static_cast<std::uint32_t>(c));
            result.origins.emplace_back(rows[base], rows[other]);
        }
    }
    return result;
}

std::pair<FeatureMatrix, BalanceTrace> apply_plan(const FeatureMatrix& matrix, const BalancePlan& plan) {
    plan.validate();
    BalanceTrace trace;
    trace.initial = histogram_of(matrix);
    auto [kept, removed] = remove_small_classes(matrix, plan.min_class_size);
    trace.removed_classes = std::move(removed);
    trace.after_removal = histogram_of(kept);
    for (const auto* targets : {&plan.under_targets, &plan.over_targets, &plan.smote_targets}) {
        for (const auto& [name, target] : *targets) {
            if (std::find(trace.removed_classes.begin(), trace.removed_classes.end(), name) !=
                trace.removed_classes.end()) {
                throw DataError("plan targets removed class '" + name + "'");
            }
        }
    }
    auto under = undersample(kept, plan.under_targets, plan.seed);
    trace.after_under = histogram_of(under);
    auto over = random_oversample(under, plan.over_targets, plan.seed);
    trace.after_over = histogram_of(over);
    auto synth = smote(over, plan.smote_targets, plan.smote_k, plan.seed);
    trace.after_smote = histogram_of(synth.matrix);
    return {std::move(synth.matrix), std::move(trace)};
}

BalancePlan adapt_plan(const BalancePlan& plan, const FeatureMatrix& matrix, double fraction) {
    if (!(fraction > 0.0)) throw DataError("plan fraction must be positive");
    const auto counts = label_counts(matrix.labels, matrix.class_names.size());
    auto count_of = [&](const std::string& name) -> std::optional<std::size_t> {
        const auto it = std::find(matrix.class_names.begin(), matrix.class_names.end(), name);
        if (it == matrix.class_names.end()) return std::nullopt;
        const auto n = counts[static_cast<std::size_t>(it - matrix.class_names.begin())];
        if (n == 0) return std::nullopt;
        return n;
    };
    auto scale = [&](std::size_t t) { return static_cast<std::size_t>(std::llround(static_cast<double>(t) * fraction)); };

    BalancePlan out;
    out.min_class_size = plan.min_class_size;
    out.smote_k = plan.smote_k;
    out.seed = plan.seed;
    std::map<std::string, std::size_t> current;
    for (const auto& [name, t] : plan.under_targets) {
        const auto n = count_of(name);
        if (!n || *n < plan.min_class_size) continue;
        out.under_targets[name] = std::min(scale(t), *n);
        current[name] = out.under_targets[name];
    }
    auto current_count = [&](const std::string& name, std::size_t n) {
        const auto it = current.find(name);
        return it == current.end() ? n : it->second;
    };
    for (const auto& [name, t] : plan.over_targets) {
        const auto n = count_of(name);
        if (!n || *n < plan.min_class_size) continue;
        out.over_targets[name] = std::max(scale(t), current_count(name, *n));
        current[name] = out.over_targets[name];
    }
    for (const auto& [name, t] : plan.smote_targets) {
        const auto n = count_of(name);
        if (!n || *n < plan.min_class_size) continue;
        const auto now = current_count(name, *n);
        if (now < 2) continue;
        out.smote_targets[name] = std::max(scale(t), now);
    }
    return out;
}

} // namespace hunt
