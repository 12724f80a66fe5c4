#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hunt/error.hpp"
#include "hunt/ingest.hpp"
#include "hunt/rng.hpp"

using namespace hunt;
namespace fs = std::filesystem;

namespace {

const DatasetProfile& ton() { return *find_builtin_profile("toniot"); }

const char* kTonHeader =
    "src_ip,src_port,dst_ip,dst_port,proto,duration,src_bytes,dst_bytes,conn_state,src_pkts,src_ip_bytes,dst_pkts,"
    "dst_ip_bytes,label";

Ingested read(const std::string& text, const DatasetProfile& p = ton()) {
    std::istringstream in(text);
    return read_csv(in, p);
}

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("hunt_ingest_" + name); }

SynthSpec ton_spec(std::vector<std::pair<std::string, std::size_t>> counts, std::uint64_t seed) {
    SynthSpec spec;
    spec.feature_columns = ton().columns;
    spec.seed = seed;
    double c = 0;
    for (auto& [name, n] : counts) {
        spec.classes.push_back({name, n, std::vector<double>(spec.numeric_dimension(), c), 1.0});
        c += 4;
    }
    return spec;
}

std::vector<std::string> row_strings(const LogTable& t) {
    std::ostringstream out;
    write_csv(t, ton(), out);
    std::vector<std::string> rows;
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) rows.push_back(line);
    return rows;
}

} // namespace

TEST(ReadCsv, ThreeRows) {
    const auto r = read(std::string(kTonHeader) + "\n"
                        "10.0.0.1,1234,10.0.0.2,80,tcp,0.5,100,200,SF,3,160,2,120,Benign\n"
                        "10.0.0.3,5555,10.0.0.2,22,tcp,1.5,10,0,S0,1,40,0,0,Scanning\n"
                        "10.0.0.4,53,8.8.8.8,53,udp,0,60,120,SF,1,88,1,148,Benign\n");
    EXPECT_EQ(r.table.row_count(), 3u);
    EXPECT_EQ(r.skips.skipped_rows, 0u);
    EXPECT_EQ(r.table.columns().size(), 13u);
    EXPECT_EQ(r.table.column("proto")->texts(), (std::vector<std::string>{"tcp", "tcp", "udp"}));
    EXPECT_EQ(r.table.column("src_port")->int64s(), (std::vector<std::int64_t>{1234, 5555, 53}));
    const auto& names = r.table.class_names();
    EXPECT_EQ(names[r.table.labels()[0]], "Benign");
    EXPECT_EQ(names[r.table.labels()[1]], "Scanning");
}

TEST(ReadCsv, ExtraColumnsDropped) {
    const auto r = read("ts,src_ip,src_port,dst_ip,dst_port,proto,service,duration,src_bytes,dst_bytes,conn_state,"
                        "src_pkts,src_ip_bytes,dst_pkts,dst_ip_bytes,label,type\n"
                        "1,10.0.0.1,1,10.0.0.2,2,tcp,-,0.1,1,2,SF,1,2,3,4,Benign,normal\n");
    EXPECT_EQ(r.table.row_count(), 1u);
    EXPECT_EQ(r.table.column("service"), nullptr);
    EXPECT_EQ(r.table.column("ts"), nullptr);
    EXPECT_EQ(r.table.columns().size(), 13u);
}

TEST(ReadCsv, NonIntegerRowSkipped) {
    const auto r = read(std::string(kTonHeader) + "\n"
                        "10.0.0.1,12x,10.0.0.2,80,tcp,0.5,100,200,SF,3,160,2,120,Benign\n"
                        "10.0.0.1,12,10.0.0.2,80,tcp,0.5,100,200,SF,3,160,2,120,Benign\n");
    EXPECT_EQ(r.table.row_count(), 1u);
    EXPECT_EQ(r.skips.skipped_rows, 1u);
    ASSERT_EQ(r.skips.samples.size(), 1u);
}

TEST(ReadCsv, UnknownLabelAndWrongArityAreSkipped) {
    const auto r = read(std::string(kTonHeader) + "\n"
                        "10.0.0.1,1,10.0.0.2,80,tcp,0.5,100,200,SF,3,160,2,120,Worm\n"
                        "10.0.0.1,1,10.0.0.2,80,tcp\n"
                        "10.0.0.1,1,10.0.0.2,80,tcp,0.5,100,200,SF,3,160,2,120,DoS\n");
    EXPECT_EQ(r.table.row_count(), 1u);
    EXPECT_EQ(r.skips.skipped_rows, 2u);
}

TEST(ReadCsv, IntegerLabelCodesAndQuoting) {
    const auto* uwf = find_builtin_profile("uwf2022");
    std::string header, row;
    for (const auto& c : uwf->columns) {
        header += "\"" + c.name + "\",";
        switch (c.kind) {
        case ColumnKind::ipv4: row += "1.2.3.4,"; break;
        case ColumnKind::categorical: row += "\"a,\"\"b\"\"\","; break;
        case ColumnKind::boolean: row += "true,"; break;
        case ColumnKind::timestamp: row += c.storage == Storage::text ? "2022-02-10T14:03:27Z," : "1644501807.5,"; break;
        default: row += "7,";
        }
    }
    const auto r = read(header + "label_tactic\r\n" + row + "1\r\n" + row + "Discovery\r\n", *uwf);
    ASSERT_EQ(r.table.row_count(), 2u) << (r.skips.samples.empty() ? "" : r.skips.samples[0]);
    EXPECT_EQ(r.table.class_names()[r.table.labels()[0]], "Reconnaissance");
    EXPECT_EQ(r.table.class_names()[r.table.labels()[1]], "Discovery");
    EXPECT_EQ(r.table.column("service")->texts()[0], "a,\"b\"");
    EXPECT_EQ(r.table.column("local_orig")->bools()[0], 1);
}

TEST(ReadCsv, Errors) {
    EXPECT_THROW(read_csv(temp("does-not-exist.csv"), ton()), IoError);
    EXPECT_THROW(read("src_ip,src_port\n1.2.3.4,5\n"), DataError);
    EXPECT_THROW(read(std::string(kTonHeader) + "\n"), DataError);
    EXPECT_THROW(read(std::string(kTonHeader) + "\nx,x,x,x,x,x,x,x,x,x,x,x,x,Benign\n"), DataError);
    EXPECT_THROW(read(""), DataError);
}

TEST(ReadCsv, MissingCellsKeepTheRow) {
    const auto r = read(std::string(kTonHeader) + "\n"
                        "10.0.0.1,1,10.0.0.2,80,tcp,,100,200,SF,3,160,2,120,Benign\n");
    ASSERT_EQ(r.table.row_count(), 1u);
    EXPECT_TRUE(r.table.column("duration")->is_missing(0));
}

TEST(CsvRoundTrip, SynthesizedTablesProperty) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto t = synthesize(ton_spec({{"Benign", 1 + rng.index(20)}, {"DoS", 1 + rng.index(20)},
                                            {"Xss", 1 + rng.index(5)}},
                                           rng.next()));
        std::ostringstream out;
        write_csv(t, ton(), out);
        std::istringstream in(out.str());
        const auto back = read_csv(in, ton());
        ASSERT_EQ(back.skips.skipped_rows, 0u);
        // Class names come back as the full registry; compare by name per row.
        ASSERT_EQ(back.table.row_count(), t.row_count());
        ASSERT_EQ(back.table.columns(), t.columns());
        for (std::size_t r = 0; r < t.row_count(); ++r) {
            ASSERT_EQ(back.table.class_names()[back.table.labels()[r]], t.class_names()[t.labels()[r]]);
        }
    }
}

TEST(CsvRoundTrip, FileApi) {
    const auto t = read(std::string(kTonHeader) + "\n"
                        "10.0.0.1,1,10.0.0.2,80,tcp,0.25,100,200,SF,3,160,2,120,Benign\n"
                        "10.0.0.9,2,10.0.0.2,81,\"u,dp\",,100,200,SF,3,160,2,120,Mitm\n")
                       .table;
    const auto path = temp("roundtrip.csv");
    write_csv(t, ton(), path);
    EXPECT_EQ(read_csv(path, ton()).table, t);
    fs::remove(path);
}

TEST(Collate, Examples) {
    const auto a = synthesize(ton_spec({{"Benign", 2}}, 1));
    const auto b = synthesize(ton_spec({{"Benign", 3}}, 2));
    const std::vector<LogTable> ab = {a, b};
    const auto c = collate(ab);
    EXPECT_EQ(c.row_count(), 5u);
    EXPECT_EQ(c.select_rows({0, 1}), a);
    EXPECT_EQ(c.select_rows({2, 3, 4}), b);

    const std::vector<LogTable> single = {a};
    EXPECT_EQ(collate(single), a);

    auto spec = ton_spec({{"Benign", 2}}, 1);
    std::swap(spec.feature_columns[0], spec.feature_columns[1]);
    const std::vector<LogTable> mismatched = {a, synthesize(spec)};
    EXPECT_THROW(collate(mismatched), DataError);

    const std::vector<LogTable> other_classes = {a, synthesize(ton_spec({{"DoS", 2}}, 1))};
    EXPECT_THROW(collate(other_classes), DataError);
}

TEST(Collate, AssociativeProperty) {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<LogTable> parts;
        for (int i = 0; i < 3; ++i) parts.push_back(synthesize(ton_spec({{"Benign", 1 + rng.index(6)}}, rng.next())));
        const std::vector<LogTable> bc = {parts[1], parts[2]};
        const std::vector<LogTable> nested = {parts[0], collate(bc)};
        auto lhs = row_strings(collate(nested));
        auto rhs = row_strings(collate(parts));
        std::sort(lhs.begin(), lhs.end());
        std::sort(rhs.begin(), rhs.end());
        ASSERT_EQ(lhs, rhs);
    }
}

TEST(Synthesize, CountsAndDeterminism) {
    using H = std::vector<std::pair<std::string, std::size_t>>;
    const auto spec = ton_spec({{"Benign", 7}, {"DoS", 3}}, 42);
    const auto t = synthesize(spec);
    EXPECT_EQ(class_histogram(t), (H{{"Benign", 7}, {"DoS", 3}}));
    EXPECT_EQ(synthesize(spec), t);
    EXPECT_EQ(row_strings(synthesize(spec)), row_strings(t));

    auto other = spec;
    other.seed = 43;
    EXPECT_NE(synthesize(other), t);

    const auto skewed = synthesize(ton_spec({{"Benign", 1000}, {"Scanning", 1000}, {"Backdoor", 7}}, 1));
    EXPECT_EQ(class_histogram(skewed), (H{{"Benign", 1000}, {"Scanning", 1000}, {"Backdoor", 7}}));
}

TEST(Synthesize, CentersAndSpread) {
    SynthSpec spec;
    spec.feature_columns = {{"x", ColumnKind::numeric, Storage::float64}, {"y", ColumnKind::numeric, Storage::float64}};
    spec.classes = {{"A", 4000, {10.0, -5.0}, 2.0}};
    spec.seed = 1;
    const auto t = synthesize(spec);
    for (const auto& [name, center] : {std::pair<const char*, double>{"x", 10.0}, {"y", -5.0}}) {
        const auto& v = t.column(name)->float64s();
        double mean = 0, var = 0;
        for (double d : v) mean += d;
        mean /= v.size();
        for (double d : v) var += (d - mean) * (d - mean);
        var /= v.size();
        EXPECT_NEAR(mean, center, 0.15) << name;
        EXPECT_NEAR(std::sqrt(var), 2.0, 0.15) << name;
    }
}

TEST(Synthesize, RejectsBadSpecs) {
    auto spec = ton_spec({{"Benign", 3}}, 1);
    spec.classes[0].center.pop_back();
    EXPECT_THROW(synthesize(spec), DataError);
    spec = ton_spec({{"Benign", 0}}, 1);
    EXPECT_THROW(synthesize(spec), DataError);
    spec = ton_spec({{"Benign", 3}}, 1);
    spec.classes[0].spread = 0;
    EXPECT_THROW(synthesize(spec), DataError);
}

TEST(ReadTable, DispatchesOnExtension) {
    const auto t = synthesize(ton_spec({{"Benign", 4}, {"DoS", 2}}, 5));
    const auto csv = temp("dispatch.csv");
    write_table(t, ton(), csv);
    EXPECT_EQ(read_table(csv, ton()).table.row_count(), 6u);
    fs::remove(csv);
}
