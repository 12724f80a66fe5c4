#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <regex>

#include "hunt/error.hpp"
#include "hunt/ingest.hpp"
#include "hunt/rng.hpp"
#include "hunt/schema.hpp"

using namespace hunt;

namespace {

const DatasetProfile& profile(const char* name) {
    const auto* p = find_builtin_profile(name);
    EXPECT_NE(p, nullptr) << name;
    return *p;
}

LogTable two_class_table(const std::vector<std::uint32_t>& labels) {
    Column c{{"x", ColumnKind::numeric, Storage::float64}, std::vector<double>(labels.size(), 1.0), {}};
    return LogTable({c}, labels, {"Benign", "DoS"});
}

} // namespace

TEST(Profiles, ThreeBuiltins) {
    const auto& all = builtin_profiles();
    ASSERT_EQ(all.size(), 3u);
    EXPECT_EQ(all[0].name, "uwf2022");
    EXPECT_EQ(all[1].name, "cicids2017");
    EXPECT_EQ(all[2].name, "toniot");
    for (const auto& p : all) EXPECT_NO_THROW(p.validate()) << p.name;
}

TEST(Profiles, UwfLabelAndWidth) {
    const auto& uwf = profile("uwf2022");
    EXPECT_EQ(uwf.label_column, "label_tactic");
    EXPECT_EQ(uwf.columns.size(), 19u);
    EXPECT_EQ(uwf.column("local_orig")->kind, ColumnKind::boolean);
    EXPECT_EQ(uwf.column("local_resp")->kind, ColumnKind::boolean);
    EXPECT_EQ(uwf.column("src_ip_zeek")->kind, ColumnKind::ipv4);
    EXPECT_EQ(uwf.classes.size(), 11u);
}

TEST(Profiles, TonProtoIsCategorical) {
    const auto& ton = profile("toniot");
    EXPECT_EQ(ton.columns.size(), 13u);
    EXPECT_EQ(ton.label_column, "label");
    ASSERT_NE(ton.column("proto"), nullptr);
    EXPECT_EQ(ton.column("proto")->kind, ColumnKind::categorical);
    EXPECT_EQ(ton.classes.entry("Mitm")->tactics, std::vector<std::string>{"T1557"});
}

TEST(Profiles, CicHeartbleedTactic) {
    const auto& cic = profile("cicids2017");
    const auto* e = cic.classes.entry("Heartbleed");
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->tactics, std::vector<std::string>{"T1504"});
    EXPECT_EQ(cic.classes.size(), 15u);
}

TEST(Profiles, RegistryInvariants) {
    const std::regex tactic(R"(T\d{4}(\.\d{3})?)");
    for (const auto& p : builtin_profiles()) {
        std::map<std::string, int> seen;
        for (const auto& e : p.classes.entries()) {
            EXPECT_EQ(++seen[e.name], 1) << p.name << " duplicates " << e.name;
            ASSERT_FALSE(e.tactics.empty()) << e.name;
            if (e.name == "Benign" || e.name == "Benign traffic") {
                EXPECT_EQ(e.tactics, std::vector<std::string>{std::string(kBenignTactic)});
                EXPECT_TRUE(e.is_benign());
                continue;
            }
            if (e.tactics.front() == kAmalgamatedTactic) continue;
            for (const auto& t : e.tactics) {
                EXPECT_TRUE(std::regex_match(t, tactic)) << e.name << " " << t;
                EXPECT_TRUE(is_tactic_id(t));
            }
        }
        EXPECT_EQ(p.column(p.label_column), nullptr) << "label must not be a feature in " << p.name;
    }
}

TEST(Profiles, TacticPattern) {
    EXPECT_TRUE(is_tactic_id("T1498"));
    EXPECT_TRUE(is_tactic_id("T1595.001"));
    EXPECT_FALSE(is_tactic_id("T149"));
    EXPECT_FALSE(is_tactic_id("T1595.01"));
    EXPECT_FALSE(is_tactic_id("t1498"));
    EXPECT_FALSE(is_tactic_id("T1498 "));
}

TEST(Profiles, RoundTripThroughConfigText) {
    for (const auto& p : builtin_profiles()) {
        EXPECT_EQ(parse_profile(serialize_profile(p)), p) << p.name;
    }
}

TEST(Profiles, LoadFromFile) {
    const auto path = std::filesystem::temp_directory_path() / "hunt_profile_test.json";
    DatasetProfile custom;
    custom.name = "custom";
    custom.columns = {{"bytes", ColumnKind::numeric, Storage::int64}, {"svc", ColumnKind::categorical, Storage::text}};
    custom.label_column = "y";
    custom.classes = ClassRegistry({{"Benign", {std::string(kBenignTactic)}}, {"Scan", {"T1046"}}});
    {
        std::ofstream out(path);
        out << serialize_profile(custom);
    }
    EXPECT_EQ(load_profile(path.string()), custom);
    std::filesystem::remove(path);
    EXPECT_THROW(load_profile("no-such-profile.json"), IoError);
}

TEST(Profiles, RejectsBrokenProfiles) {
    DatasetProfile p = profile("toniot");
    p.label_column = "proto";
    EXPECT_THROW(p.validate(), DataError);

    p = profile("toniot");
    p.columns.push_back(p.columns.front());
    EXPECT_THROW(p.validate(), DataError);

    p = profile("toniot");
    p.columns.clear();
    EXPECT_THROW(p.validate(), DataError);

    EXPECT_THROW((ColumnSpec{"ip", ColumnKind::ipv4, Storage::int64}.validate()), DataError);
    EXPECT_THROW((ColumnSpec{"t", ColumnKind::timestamp, Storage::int64}.validate()), DataError);
    EXPECT_NO_THROW((ColumnSpec{"t", ColumnKind::timestamp, Storage::float64}.validate()));
    EXPECT_THROW(parse_profile(R"({"name":"x","columns":[{"name":"a","kind":"colour","storage":"text"}],
                                   "label_column":"y","classes":[]})"),
                 DataError);
    EXPECT_THROW(ClassRegistry(std::vector<ClassEntry>{{"A", {"T1"}}}), DataError);
    EXPECT_THROW(ClassRegistry(std::vector<ClassEntry>{{"A", {"T1498"}}, {"A", {"T1498"}}}), DataError);
}

TEST(Validate, ConformingTableIsClean) {
    SynthSpec spec;
    spec.feature_columns = profile("toniot").columns;
    spec.classes = {{"Benign", 3, std::vector<double>(spec.numeric_dimension(), 0.0), 1.0}};
    const auto report = validate_table(synthesize(spec), profile("toniot"));
    EXPECT_TRUE(report.ok()) << report.summary();
}

TEST(Validate, MissingProtoColumn) {
    const auto& ton = profile("toniot");
    SynthSpec spec;
    for (const auto& c : ton.columns) {
        if (c.name != "proto") spec.feature_columns.push_back(c);
    }
    spec.classes = {{"Benign", 3, std::vector<double>(spec.numeric_dimension(), 0.0), 1.0}};
    const auto report = validate_table(synthesize(spec), ton);
    ASSERT_EQ(report.issues.size(), 1u);
    EXPECT_EQ(report.count(ValidationIssue::Kind::missing_column), 1u);
    EXPECT_EQ(report.issues[0].subject, "proto");
}

TEST(Validate, UnknownClassAndTypeMismatch) {
    const auto& ton = profile("toniot");
    SynthSpec spec;
    spec.feature_columns = ton.columns;
    spec.feature_columns[1].storage = Storage::float64; // src_port
    spec.classes = {{"Worm", 2, std::vector<double>(spec.numeric_dimension(), 0.0), 1.0}};
    const auto report = validate_table(synthesize(spec), ton);
    EXPECT_EQ(report.count(ValidationIssue::Kind::unknown_class), 1u);
    EXPECT_EQ(report.count(ValidationIssue::Kind::type_mismatch), 1u);
    EXPECT_EQ(report.issues.size(), 2u);
}

TEST(Histogram, Examples) {
    using H = std::vector<std::pair<std::string, std::size_t>>;
    EXPECT_EQ(class_histogram(two_class_table({0, 0, 1})), (H{{"Benign", 2}, {"DoS", 1}}));
    EXPECT_EQ(class_histogram(two_class_table({1, 0, 1})), (H{{"DoS", 2}, {"Benign", 1}}));
    EXPECT_EQ(class_histogram(two_class_table({0, 1})), (H{{"Benign", 1}, {"DoS", 1}}));

    std::size_t sum = 0;
    for (const auto& [_, n] : class_histogram(LogTable())) sum += n;
    EXPECT_EQ(sum, 0u);

    SynthSpec spec;
    spec.feature_columns = {{"x", ColumnKind::numeric, Storage::float64}};
    spec.classes = {{"A", 7, {0.0}, 1.0}, {"B", 3, {5.0}, 1.0}};
    spec.seed = 42;
    EXPECT_EQ(class_histogram(synthesize(spec)), (H{{"A", 7}, {"B", 3}}));
}

TEST(Histogram, SumsToRowCountProperty) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto classes = 1 + rng.index(6);
        std::vector<std::uint32_t> labels(rng.index(60));
        for (auto& l : labels) l = static_cast<std::uint32_t>(rng.index(classes));
        std::vector<std::string> names;
        for (std::size_t k = 0; k < classes; ++k) names.push_back("k" + std::to_string(k));
        Column c{{"x", ColumnKind::numeric, Storage::int64}, std::vector<std::int64_t>(labels.size(), 0), {}};
        const LogTable t({c}, labels, names);
        const auto h = class_histogram(t);
        std::size_t sum = 0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            sum += h[i].second;
            if (i) EXPECT_TRUE(h[i - 1].second > h[i].second ||
                               (h[i - 1].second == h[i].second && h[i - 1].first < h[i].first));
        }
        EXPECT_EQ(sum, t.row_count());
    }
}

TEST(LogTableInvariants, RejectsInconsistentShapes) {
    Column c{{"x", ColumnKind::numeric, Storage::float64}, std::vector<double>{1.0, 2.0}, {}};
    EXPECT_THROW(LogTable({c}, {0}, {"A"}), DataError);
    EXPECT_THROW(LogTable({c}, {0, 2}, {"A", "B"}), DataError);
    Column wrong{{"x", ColumnKind::numeric, Storage::int64}, std::vector<double>{1.0, 2.0}, {}};
    EXPECT_THROW(LogTable({wrong}, {0, 0}, {"A"}), DataError);
    EXPECT_NO_THROW(LogTable({c}, {0, 1}, {"A", "B"}));
}

TEST(LogTableInvariants, SelectRows) {
    const auto t = two_class_table({0, 1, 1});
    const auto s = t.select_rows({2, 0, 2});
    EXPECT_EQ(s.labels(), (std::vector<std::uint32_t>{1, 0, 1}));
    EXPECT_EQ(s.class_names(), t.class_names());
}
