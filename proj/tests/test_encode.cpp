#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hunt/encode.hpp"
#include "hunt/error.hpp"
#include "hunt/ingest.hpp"
#include "oracles.hpp"

using namespace hunt;

namespace {

Column text_col(const std::string& name, ColumnKind kind, std::vector<std::string> v) {
    return {{name, kind, Storage::text}, std::move(v), {}};
}
Column float_col(const std::string& name, std::vector<double> v) {
    return {{name, ColumnKind::numeric, Storage::float64}, std::move(v), {}};
}

DatasetProfile profile_for(const std::vector<Column>& cols) {
    DatasetProfile p;
    p.name = "t";
    for (const auto& c : cols) p.columns.push_back(c.spec);
    p.label_column = "y";
    p.classes = ClassRegistry({{"Benign", {std::string(kBenignTactic)}}, {"A", {"T1046"}}, {"B", {"T1498"}}});
    return p;
}

} // namespace

TEST(Ipv4, Examples) {
    EXPECT_EQ(ipv4_to_u32("0.0.0.0"), 0u);
    EXPECT_EQ(ipv4_to_u32("255.255.255.255"), 4294967295u);
    EXPECT_EQ(ipv4_to_u32("192.168.1.1"), 3232235777u);
    EXPECT_EQ(ipv4_to_u32("192.168.1.1"), oracle::ipv4(192, 168, 1, 1));
    EXPECT_EQ(u32_to_ipv4(3232235777u), "192.168.1.1");
}

TEST(Ipv4, RejectsMalformed) {
    for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "256.0.0.1", "1.2.3.-4", "a.b.c.d", "1..2.3", "1.2.3.4 ",
                            " 1.2.3.4", "1.2.3.1000", "01234.1.1.1"}) {
        EXPECT_THROW(ipv4_to_u32(bad), DataError) << '"' << bad << '"';
    }
}

TEST(Ipv4, RoundTripProperty) {
    Rng rng(2024);
    std::set<std::uint32_t> seen;
    for (int i = 0; i < 20000; ++i) {
        const unsigned o[4] = {static_cast<unsigned>(rng.index(256)), static_cast<unsigned>(rng.index(256)),
                               static_cast<unsigned>(rng.index(256)), static_cast<unsigned>(rng.index(256))};
        const auto text = std::to_string(o[0]) + "." + std::to_string(o[1]) + "." + std::to_string(o[2]) + "." +
                          std::to_string(o[3]);
        const auto v = ipv4_to_u32(text);
        ASSERT_EQ(v, oracle::ipv4(o[0], o[1], o[2], o[3])) << text;
        ASSERT_EQ(oracle::octets(v), (std::vector<unsigned>{o[0], o[1], o[2], o[3]}));
        ASSERT_EQ(u32_to_ipv4(v), text);
        seen.insert(v);
    }
    EXPECT_GT(seen.size(), 19900u);
}

TEST(OneHot, Examples) {
    const std::vector<std::string> cats3 = {"icmp", "tcp", "udp"};
    auto r = one_hot(std::vector<std::string>{"udp"}, cats3);
    ASSERT_EQ(r.groups.size(), 3u);
    EXPECT_EQ(r.groups[0][0] + r.groups[1][0], 0.0);
    EXPECT_EQ(r.groups[2][0], 1.0);

    r = one_hot(std::vector<std::string>{"tcp", "tcp"}, std::vector<std::string>{"tcp"});
    EXPECT_EQ(r.groups, (std::vector<std::vector<double>>{{1.0, 1.0}}));

    r = one_hot(std::vector<std::string>{"sctp"}, std::vector<std::string>{"tcp", "udp"});
    EXPECT_EQ(r.groups, (std::vector<std::vector<double>>{{0.0}, {0.0}}));
    EXPECT_EQ(r.unknown, 1u);
}

TEST(OneHot, GroupSumProperty) {
    Rng rng(5);
    const std::vector<std::string> pool = {"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 300; ++trial) {
        std::set<std::string> cat_set;
        const auto k = 1 + rng.index(pool.size());
        while (cat_set.size() < k) cat_set.insert(pool[rng.index(pool.size())]);
        const std::vector<std::string> cats(cat_set.begin(), cat_set.end());
        std::vector<std::string> values(rng.index(30));
        for (auto& v : values) v = pool[rng.index(pool.size())];
        const auto r = one_hot(values, cats);
        std::size_t unknown = 0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double sum = 0;
            for (const auto& g : r.groups) sum += g[i];
            const bool known = cat_set.count(values[i]) > 0;
            ASSERT_EQ(sum, known ? 1.0 : 0.0);
            unknown += known ? 0 : 1;
        }
        EXPECT_EQ(r.unknown, unknown);
    }
}

TEST(Epoch, Examples) {
    EXPECT_EQ(to_epoch("1970-01-01T00:00:00Z"), 0.0);
    EXPECT_EQ(to_epoch("1970-01-02T00:00:00Z"), 86400.0);
    EXPECT_EQ(to_epoch(1234.5), 1234.5);
    EXPECT_EQ(to_epoch("1234.5"), 1234.5);
    EXPECT_EQ(to_epoch("2000-03-01T00:00:00Z"), 951868800.0);
    EXPECT_EQ(to_epoch("1970-01-01T00:00:01.25Z"), 1.25);
    EXPECT_EQ(to_epoch("1970-01-01T01:00:00+01:00"), 0.0);
    EXPECT_EQ(to_epoch("1970-01-01 00:01:00"), 60.0);
    EXPECT_EQ(to_epoch("1970-01-03"), 172800.0);
    for (const char* bad : {"", "yesterday", "1970-13-01T00:00:00Z", "1970-02-30T00:00:00Z", "1970-01-01T25:00:00Z"}) {
        EXPECT_THROW(to_epoch(bad), DataError) << bad;
    }
}

TEST(Epoch, DayCountOracle) {
    // Days since 1970 counted one calendar day at a time.
    auto leap = [](int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; };
    const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    long days = 0;
    Rng rng(9);
    for (int y = 1970; y < 2040; ++y) {
        for (int m = 0; m < 12; ++m) {
            const int len = mdays[m] + (m == 1 && leap(y) ? 1 : 0);
            for (int d = 1; d <= len; ++d, ++days) {
                if (rng.index(40) != 0) continue;
                char buf[32];
                std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT00:00:00Z", y, m + 1, d);
                ASSERT_EQ(to_epoch(buf), static_cast<double>(days) * 86400.0) << buf;
            }
        }
    }
}

TEST(EncodeTable, WidthAndOrder) {
    const std::vector<Column> cols = {float_col("a", {1.0, 2.0, 3.0}),
                                      text_col("proto", ColumnKind::categorical, {"udp", "tcp", "icmp"}),
                                      float_col("b", {4.0, 5.0, 6.0})};
    const LogTable t(cols, {0, 1, 2}, {"Benign", "A", "B"});
    const auto enc = encode_table(t, profile_for(cols));
    EXPECT_EQ(enc.matrix.cols, 5u);
    EXPECT_EQ(enc.map.width(), enc.matrix.cols);
    EXPECT_EQ(enc.map.feature_names,
              (std::vector<std::string>{"a", "proto=icmp", "proto=tcp", "proto=udp", "b"}));
    EXPECT_EQ(enc.matrix.row(0)[0], 1.0);
    EXPECT_EQ(enc.matrix.row(0)[3], 1.0);
    EXPECT_EQ(enc.matrix.row(2)[1], 1.0);
    EXPECT_EQ(enc.matrix.row(2)[4], 6.0);
    EXPECT_EQ(enc.matrix.labels, (std::vector<std::uint32_t>{0, 1, 2}));
}

TEST(EncodeTable, AllNumericIsIdentity) {
    const std::vector<Column> cols = {float_col("a", {1.5, -2.0}), float_col("b", {0.0, 1e9}),
                                      {{"c", ColumnKind::numeric, Storage::int64}, std::vector<std::int64_t>{7, -8}, {}}};
    const LogTable t(cols, {0, 1}, {"Benign", "A"});
    const auto enc = encode_table(t, profile_for(cols));
    EXPECT_EQ(enc.matrix.values, (std::vector<double>{1.5, 0.0, 7.0, -2.0, 1e9, -8.0}));
}

TEST(EncodeTable, IpTimestampBooleanAndMissing) {
    std::vector<Column> cols = {
        text_col("ip", ColumnKind::ipv4, {"10.0.0.1", "192.168.1.1"}),
        text_col("when", ColumnKind::timestamp, {"1970-01-02T00:00:00Z", "1970-01-01T00:00:10Z"}),
        {{"flag", ColumnKind::boolean, Storage::boolean}, std::vector<std::uint8_t>{1, 0}, {}},
        float_col("x", {3.0, 0.0}),
    };
    cols[3].missing = {0, 1};
    const LogTable t(cols, {0, 1}, {"Benign", "A"});
    const auto enc = encode_table(t, profile_for(cols));
    EXPECT_EQ(enc.matrix.values, (std::vector<double>{167772161.0, 86400.0, 1.0, 3.0, 3232235777.0, 10.0, 0.0, 0.0}));
    EXPECT_EQ(enc.stats.missing_values, 1u);
}

TEST(EncodeTable, FrozenMapHandlesUnseenCategory) {
    const std::vector<Column> train = {text_col("proto", ColumnKind::categorical, {"tcp", "udp"})};
    const auto enc = encode_table(LogTable(train, {0, 1}, {"Benign", "A"}), profile_for(train));
    const std::vector<Column> later = {text_col("proto", ColumnKind::categorical, {"sctp", "udp"})};
    EncodeStats stats;
    const auto m = apply_encoding(LogTable(later, {0, 1}, {"Benign", "A"}), enc.map, &stats);
    EXPECT_EQ(m.values, (std::vector<double>{0.0, 0.0, 0.0, 1.0}));
    EXPECT_EQ(stats.unknown_categories, 1u);
}

TEST(EncodeTable, RejectsBadValues) {
    const std::vector<Column> cols = {text_col("ip", ColumnKind::ipv4, {"10.0.0.1", "10.0.0.300"})};
    EXPECT_THROW(encode_table(LogTable(cols, {0, 1}, {"Benign", "A"}), profile_for(cols)), DataError);
    const std::vector<Column> inf = {float_col("x", {1.0, INFINITY})};
    EXPECT_THROW(encode_table(LogTable(inf, {0, 1}, {"Benign", "A"}), profile_for(inf)), DataError);
}

TEST(EncodeTable, EncodingMapJsonRoundTrip) {
    const std::vector<Column> cols = {float_col("a", {1.0, 2.0}),
                                      text_col("proto", ColumnKind::categorical, {"udp", "tcp"})};
    const auto enc = encode_table(LogTable(cols, {0, 1}, {"Benign", "A"}), profile_for(cols));
    EXPECT_EQ(encoding_from_json(encoding_to_json(enc.map)), enc.map);
}

TEST(EncodeTable, SynthesizedProfilesAreFinite) {
    for (const auto& p : builtin_profiles()) {
        SynthSpec spec;
        spec.feature_columns = p.columns;
        spec.seed = 3;
        for (std::size_t k = 0; k < 3; ++k) {
            spec.classes.push_back({p.classes.entries()[k].name, 20, std::vector<double>(spec.numeric_dimension(), 5.0 * k), 1.0});
        }
        const auto enc = encode_table(synthesize(spec), p);
        for (double v : enc.matrix.values) ASSERT_TRUE(std::isfinite(v)) << p.name;
        EXPECT_EQ(enc.map.width(), enc.matrix.cols);
        EXPECT_NO_THROW(enc.matrix.check());
    }
}

TEST(Amalgamate, Examples) {
    using H = std::vector<std::pair<std::string, std::size_t>>;
    const std::vector<Column> cols = {float_col("x", std::vector<double>(10, 0.0))};
    const LogTable t(cols, {0, 0, 0, 0, 0, 1, 1, 2, 2, 2}, {"Benign", "A", "B"});
    const auto b = amalgamate_binary(t, std::vector<std::string>{"Benign"});
    EXPECT_EQ(b.class_names(), (std::vector<std::string>{kBinaryBenign, kBinaryMalicious}));
    EXPECT_EQ(class_histogram(b), (H{{"Benign", 5}, {"Malicious", 5}}));

    const LogTable only(std::vector<Column>{float_col("x", std::vector<double>(5, 0.0))}, {0, 0, 0, 0, 0},
                        {"Benign"});
    EXPECT_EQ(class_histogram(amalgamate_binary(only, std::vector<std::string>{"Benign"})),
              (H{{"Benign", 5}, {"Malicious", 0}}));

    EXPECT_THROW(amalgamate_binary(t, std::vector<std::string>{"Nope"}), DataError);
    EXPECT_THROW(amalgamate_binary(t, std::vector<std::string>{}), DataError);
}

TEST(Amalgamate, PreservesRowsAndBenignProperty) {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const auto k = 1 + rng.index(8);
        std::vector<std::string> names = {"Benign"};
        for (std::size_t i = 1; i < k; ++i) names.push_back("attack" + std::to_string(i));
        std::vector<std::uint32_t> labels(rng.index(200));
        std::size_t benign = 0;
        for (auto& l : labels) {
            l = static_cast<std::uint32_t>(rng.index(k));
            benign += l == 0;
        }
        const LogTable t(std::vector<Column>{float_col("x", std::vector<double>(labels.size(), 1.0))}, labels, names);
        const auto b = amalgamate_binary(t, std::vector<std::string>{"Benign"});
        ASSERT_EQ(b.row_count(), t.row_count());
        ASSERT_EQ(b.class_names().size(), 2u);
        ASSERT_EQ(label_counts(b.labels(), 2)[0], benign);
        for (std::size_t r = 0; r < labels.size(); ++r) ASSERT_EQ(b.labels()[r], labels[r] == 0 ? 0u : 1u);
    }
}
