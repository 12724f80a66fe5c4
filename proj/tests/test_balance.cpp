#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <map>

#include "hunt/balance.hpp"
#include "hunt/error.hpp"
#include "hunt/pipeline.hpp"
#include "oracles.hpp"

using namespace hunt;

namespace {

FeatureMatrix matrix_of(const std::vector<std::vector<double>>& rows, const std::vector<std::uint32_t>& labels,
                        const std::vector<std::string>& names) {
    FeatureMatrix m;
    m.rows = rows.size();
    m.cols = rows.empty() ? 0 : rows[0].size();
    for (const auto& r : rows) m.values.insert(m.values.end(), r.begin(), r.end());
    m.labels = labels;
    m.class_names = names;
    return m;
}

// Each row tagged by a unique first coordinate so provenance is visible.
FeatureMatrix tagged(const std::vector<std::size_t>& counts) {
    FeatureMatrix m;
    m.cols = 2;
    std::size_t id = 0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        m.class_names.push_back(std::string(1, static_cast<char>('A' + k)));
        for (std::size_t i = 0; i < counts[k]; ++i, ++id) {
            m.values.push_back(static_cast<double>(id));
            m.values.push_back(static_cast<double>(k) * 10.0 + static_cast<double>(i % 3));
            m.labels.push_back(static_cast<std::uint32_t>(k));
        }
    }
    m.rows = m.labels.size();
    return m;
}

std::map<std::string, std::size_t> counts_of(const FeatureMatrix& m) {
    std::map<std::string, std::size_t> out;
    for (const auto& [name, n] : histogram_of(m)) out[name] = n;
    return out;
}

std::multiset<std::vector<double>> rows_of_class(const FeatureMatrix& m, std::uint32_t k) {
    std::multiset<std::vector<double>> out;
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (m.labels[r] == k) out.insert(oracle::row_of(m, r));
    }
    return out;
}

} // namespace

TEST(RemoveSmall, Examples) {
    const auto m = tagged({5, 1, 2});
    auto [kept, removed] = remove_small_classes(m, 2);
    EXPECT_EQ(removed, std::vector<std::string>{"B"});
    EXPECT_EQ(kept.rows, 7u);
    EXPECT_EQ(kept.class_names, (std::vector<std::string>{"A", "C"}));
    for (auto l : kept.labels) EXPECT_LT(l, 2u);

    auto [same, none] = remove_small_classes(m, 1);
    EXPECT_TRUE(none.empty());
    EXPECT_EQ(same, m);

    EXPECT_THROW(remove_small_classes(tagged({1, 1}), 2), DataError);
}

TEST(RemoveSmall, UwfSingletonsRemoved) {
    const auto recipe = synth_preset("uwf2022", 1);
    const auto table = synthesize(recipe.spec);
    auto [kept, removed] = remove_small_classes(table, golden_plan("uwf2022")->min_class_size);
    EXPECT_EQ(removed, (std::vector<std::string>{"Defense Evasion", "Initial Access", "Persistence"}));
    EXPECT_EQ(kept.class_names().size(), 8u);
}

TEST(Undersample, Examples) {
    const auto m = tagged({10, 3});
    const auto u = undersample(m, {{"A", 4}}, 1);
    EXPECT_EQ(counts_of(u), (std::map<std::string, std::size_t>{{"A", 4}, {"B", 3}}));
    const auto original = rows_of_class(m, 0);
    for (const auto& row : rows_of_class(u, 0)) EXPECT_EQ(original.count(row), 1u);
    EXPECT_EQ(rows_of_class(u, 1), rows_of_class(m, 1));

    EXPECT_EQ(rows_of_class(undersample(m, {{"A", 10}}, 1), 0), original);
    EXPECT_THROW(undersample(m, {{"A", 11}}, 1), DataError);
    EXPECT_THROW(undersample(m, {{"Z", 1}}, 1), DataError);
}

TEST(Undersample, SubsetProperty) {
    Rng rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<std::size_t> counts = {1 + rng.index(40), 1 + rng.index(40), 1 + rng.index(5)};
        const auto m = tagged(counts);
        TargetMap targets;
        if (rng.bernoulli(0.8)) targets["A"] = rng.index(counts[0] + 1);
        if (rng.bernoulli(0.5)) targets["B"] = rng.index(counts[1] + 1);
        const auto u = undersample(m, targets, rng.next());
        for (std::uint32_t k = 0; k < 3; ++k) {
            const auto name = m.class_names[k];
            const auto want = targets.count(name) ? targets[name] : counts[k];
            const auto got = rows_of_class(u, k);
            ASSERT_EQ(got.size(), want);
            const auto all = rows_of_class(m, k);
            std::set<std::vector<double>> distinct(got.begin(), got.end());
            ASSERT_EQ(distinct.size(), got.size()) << "sampling must be without replacement";
            for (const auto& row : got) ASSERT_EQ(all.count(row), 1u);
        }
        // Retained rows keep their relative order.
        for (std::size_t r = 1; r < u.rows; ++r) ASSERT_LT(u.at(r - 1, 0), u.at(r, 0));
    }
}

TEST(Oversample, Examples) {
    const auto m = matrix_of({{1.0, 2.0}, {5.0, 5.0}}, {0, 1}, {"x", "y"});
    const auto o = random_oversample(m, {{"x", 3}}, 4);
    EXPECT_EQ(o.rows, 4u);
    EXPECT_EQ(rows_of_class(o, 0), (std::multiset<std::vector<double>>{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}}));
    EXPECT_THROW(random_oversample(m, {{"x", 0}}, 4), DataError);
}

TEST(Oversample, DuplicationProperty) {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const std::vector<std::size_t> counts = {1 + rng.index(10), 1 + rng.index(10)};
        const auto m = tagged(counts);
        const TargetMap targets = {{"A", counts[0] + rng.index(30)}};
        const auto o = random_oversample(m, targets, rng.next());
        ASSERT_EQ(counts_of(o)["A"], targets.at("A"));
        ASSERT_EQ(counts_of(o)["B"], counts[1]);
        // The input is a prefix; every appended row duplicates an original of its class.
        for (std::size_t r = 0; r < m.rows; ++r) ASSERT_EQ(oracle::row_of(o, r), oracle::row_of(m, r));
        const auto originals = rows_of_class(m, 0);
        for (std::size_t r = m.rows; r < o.rows; ++r) {
            ASSERT_EQ(o.labels[r], 0u);
            ASSERT_EQ(originals.count(oracle::row_of(o, r)), 1u);
        }
    }
}

TEST(Smote, Examples) {
    const auto same = matrix_of({{3.0, 4.0}, {3.0, 4.0}}, {0, 0}, {"p"});
    const auto s = smote(same, {{"p", 3}}, 5, 1);
    ASSERT_EQ(s.matrix.rows, 3u);
    EXPECT_EQ(oracle::row_of(s.matrix, 2), (std::vector<double>{3.0, 4.0}));

    const auto seg = matrix_of({{0.0, 0.0}, {2.0, 2.0}}, {0, 0}, {"q"});
    const auto t = smote(seg, {{"q", 3}}, 1, 2);
    ASSERT_EQ(t.matrix.rows, 3u);
    const auto v = oracle::row_of(t.matrix, 2);
    EXPECT_EQ(v[0], v[1]);
    EXPECT_GE(v[0], 0.0);
    EXPECT_LE(v[0], 2.0);

    const auto lonely = matrix_of({{0.0}, {1.0}, {2.0}}, {0, 1, 1}, {"a", "b"});
    EXPECT_THROW(smote(lonely, {{"a", 4}}, 5, 1), DataError);
    EXPECT_THROW(smote(lonely, {{"b", 1}}, 5, 1), DataError);
}

TEST(Smote, SegmentIdentityAndNeighbourProperty) {
    Rng rng(33);
    for (int trial = 0; trial < 60; ++trial) {
        const auto m = oracle::random_matrix(rng, 10 + rng.index(40), 1 + rng.index(5), 2, 50);
        const auto counts = label_counts(m.labels, 2);
        if (counts[0] < 2 || counts[1] < 2) continue;
        const std::size_t k = 1 + rng.index(6);
        const TargetMap targets = {{"c0", counts[0] + rng.index(50)}, {"c1", counts[1] + rng.index(5)}};
        const auto s = smote(m, targets, k, rng.next());
        ASSERT_EQ(counts_of(s.matrix)["c0"], targets.at("c0"));
        ASSERT_EQ(counts_of(s.matrix)["c1"], targets.at("c1"));
        ASSERT_EQ(s.origins.size(), s.matrix.rows - m.rows);
        for (std::size_t i = 0; i < s.origins.size(); ++i) {
            const auto [a, b] = s.origins[i];
            const auto label = s.matrix.labels[m.rows + i];
            ASSERT_EQ(m.labels[a], label);
            ASSERT_EQ(m.labels[b], label);
            ASSERT_NE(a, b);
            const auto x = oracle::row_of(m, a), xp = oracle::row_of(m, b), sv = oracle::row_of(s.matrix, m.rows + i);
            ASSERT_LE(oracle::euclid(sv, x) + oracle::euclid(sv, xp) - oracle::euclid(x, xp), 1e-9);
            // x' is within the k nearest same-class rows of x.
            const auto d = oracle::euclid(x, xp);
            std::size_t closer = 0;
            for (std::size_t r = 0; r < m.rows; ++r) {
                if (r != a && m.labels[r] == label && oracle::euclid(x, oracle::row_of(m, r)) < d) ++closer;
            }
            ASSERT_LT(closer, std::min(k, counts[label] - 1));
        }
    }
}

TEST(ApplyPlan, EmptyPlanIsIdentity) {
    const auto m = tagged({4, 2, 1});
    BalancePlan plan;
    plan.min_class_size = 1;
    const auto [out, trace] = apply_plan(m, plan);
    EXPECT_EQ(out, m);
    EXPECT_TRUE(trace.removed_classes.empty());
    EXPECT_EQ(trace.initial, trace.after_smote);
}

TEST(ApplyPlan, StagesComposeProperty) {
    Rng rng(34);
    for (int trial = 0; trial < 30; ++trial) {
        const auto m = tagged({20 + rng.index(20), 2 + rng.index(5), 1 + rng.index(2), 5});
        BalancePlan plan;
        plan.seed = rng.next();
        plan.smote_k = 1 + rng.index(4);
        plan.under_targets = {{"A", 10 + rng.index(10)}};
        plan.over_targets = {{"B", 10}};
        plan.smote_targets = {{"B", 10 + rng.index(10)}, {"D", 5 + rng.index(10)}};
        const auto [out, trace] = apply_plan(m, plan);

        auto [kept, removed] = remove_small_classes(m, plan.min_class_size);
        const auto manual = smote(random_oversample(undersample(kept, plan.under_targets, plan.seed),
                                                    plan.over_targets, plan.seed),
                                  plan.smote_targets, plan.smote_k, plan.seed)
                                .matrix;
        ASSERT_EQ(out, manual);
        ASSERT_EQ(trace.removed_classes, removed);
        auto final_counts = counts_of(out);
        ASSERT_EQ(final_counts["A"], plan.under_targets["A"]);
        ASSERT_EQ(final_counts["B"], plan.smote_targets["B"]);
        ASSERT_EQ(final_counts["D"], plan.smote_targets["D"]);
        // Same seed, same bytes.
        ASSERT_EQ(apply_plan(m, plan).first, out);
    }
}

TEST(ApplyPlan, UwfGoldenPlanOnPresetTable) {
    const auto& plan = *golden_plan("uwf2022");
    const auto recipe = synth_preset("uwf2022", 5);
    const auto prepared = prepare(synthesize(recipe.spec), *find_builtin_profile("uwf2022"), false, 1);
    const auto [out, trace] = apply_plan(prepared.matrix, plan);
    const std::map<std::string, std::size_t> final_counts = {
        {"Benign traffic", 8874},     {"Reconnaissance", 9176}, {"Discovery", 2086},
        {"Credential Access", 70},    {"Privilege Escalation", 226}, {"Exfiltration", 166},
        {"Lateral Movement", 136},    {"Resource Development", 126}};
    EXPECT_EQ(counts_of(out), final_counts);
    EXPECT_EQ(trace.removed_classes, (std::vector<std::string>{"Defense Evasion", "Initial Access", "Persistence"}));
    std::map<std::string, std::size_t> after_over;
    for (const auto& [n, c] : trace.after_over) after_over[n] = c;
    EXPECT_EQ(after_over["Privilege Escalation"], 130u);
    EXPECT_EQ(after_over["Exfiltration"], 70u);
}

TEST(ApplyPlan, CicGoldenPlanOnPresetTable) {
    const auto& plan = *golden_plan("cicids2017");
    const auto recipe = synth_preset("cicids2017", 5);
    const auto prepared = prepare(synthesize(recipe.spec), *find_builtin_profile("cicids2017"), false, 1);
    const auto [out, trace] = apply_plan(prepared.matrix, plan);
    auto c = counts_of(out);
    EXPECT_EQ(c["Heartbleed"], 324u);
    EXPECT_EQ(c["Benign"], 45426u);
    EXPECT_EQ(c["DoS GoldenEye"], 10293u);
    EXPECT_EQ(c["Web Attack XSS"], 1518u);
    EXPECT_TRUE(trace.removed_classes.empty());
    EXPECT_EQ(c.size(), 15u);
}

TEST(ApplyPlan, RejectsTargetsForRemovedClasses) {
    BalancePlan plan;
    plan.over_targets = {{"B", 5}};
    EXPECT_THROW(apply_plan(tagged({5, 1}), plan), DataError);
}

TEST(Plan, ValidationAndFileFormat) {
    BalancePlan bad;
    bad.under_targets = {{"A", 10}};
    bad.over_targets = {{"A", 5}};
    EXPECT_THROW(bad.validate(), DataError);
    bad = {};
    bad.over_targets = {{"A", 10}};
    bad.smote_targets = {{"A", 5}};
    EXPECT_THROW(bad.validate(), DataError);

    for (const char* name : {"uwf2022", "cicids2017"}) {
        const auto& plan = *golden_plan(name);
        EXPECT_EQ(parse_plan(serialize_plan(plan)), plan);
        EXPECT_EQ(plan_from_json(plan_to_json(plan)), plan);
    }
    EXPECT_EQ(golden_plan("toniot"), nullptr);
    EXPECT_THROW(parse_plan(R"({"min_class_size": 2, "smote": {"A": -1}})"), DataError);
    EXPECT_THROW(parse_plan(R"({"minimum": 2})"), DataError);
    EXPECT_THROW(parse_plan("not json"), DataError);
}

TEST(Plan, ShippedFilesMatchBuiltins) {
    for (const char* name : {"uwf2022", "cicids2017"}) {
        const auto path = std::filesystem::path(HUNT_SOURCE_DIR) / "plans" / (std::string(name) + ".plan");
        EXPECT_EQ(load_plan(path), *golden_plan(name)) << path;
    }
}

TEST(Plan, GoldenTargetsMatchPublishedTables) {
    const auto& uwf = *golden_plan("uwf2022");
    EXPECT_EQ(uwf.under_targets.at("Benign traffic"), 8874u);
    EXPECT_EQ(uwf.under_targets.at("Reconnaissance"), 9176u);
    EXPECT_EQ(uwf.over_targets.at("Privilege Escalation"), 130u);
    EXPECT_EQ(uwf.over_targets.at("Exfiltration"), 70u);
    EXPECT_EQ(uwf.smote_targets.at("Resource Development"), 126u);
    EXPECT_EQ(uwf.min_class_size, 2u);
    const auto& cic = *golden_plan("cicids2017");
    EXPECT_EQ(cic.over_targets.at("Heartbleed"), 110u);
    EXPECT_EQ(cic.smote_targets.at("Heartbleed"), 324u);
    EXPECT_EQ(cic.under_targets.at("Bot"), 1956u);
    EXPECT_EQ(cic.smote_targets.at("Bot"), 2170u);
}

TEST(AdaptPlan, ScalesAndClamps) {
    const auto m = tagged({100, 10, 3, 1});
    BalancePlan plan;
    plan.min_class_size = 1;
    plan.under_targets = {{"A", 120}};
    plan.over_targets = {{"B", 20}, {"Z", 4}};
    plan.smote_targets = {{"B", 40}, {"C", 10}, {"D", 10}};
    const auto a = adapt_plan(plan, m, 0.5);
    EXPECT_EQ(a.under_targets.at("A"), 60u);
    EXPECT_EQ(a.over_targets.at("B"), 10u);
    EXPECT_EQ(a.over_targets.count("Z"), 0u);
    EXPECT_EQ(a.smote_targets.at("B"), 20u);
    EXPECT_EQ(a.smote_targets.at("C"), 5u);
    EXPECT_EQ(a.smote_targets.count("D"), 0u);
    EXPECT_NO_THROW(apply_plan(m, a));

    const auto full = adapt_plan(plan, m, 2.0);
    EXPECT_EQ(full.under_targets.at("A"), 100u);
}
