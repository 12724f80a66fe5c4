#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hunt/error.hpp"
#include "hunt/ingest.hpp"

using namespace hunt;
namespace fs = std::filesystem;

namespace {

const DatasetProfile& ton() { return *find_builtin_profile("toniot"); }
const DatasetProfile& uwf() { return *find_builtin_profile("uwf2022"); }

fs::path temp(const std::string& name) { return fs::temp_directory_path() / ("hunt_parquet_" + name); }

LogTable synth(const DatasetProfile& p, std::vector<std::pair<std::string, std::size_t>> counts, std::uint64_t seed) {
    SynthSpec spec;
    spec.feature_columns = p.columns;
    spec.seed = seed;
    double c = 0;
    for (auto& [name, n] : counts) {
        spec.classes.push_back({name, n, std::vector<double>(spec.numeric_dimension(), c), 1.0});
        c += 3;
    }
    return synthesize(spec);
}

// Labels compared by name: the reader's class list is the full registry.
void expect_same_rows(const LogTable& got, const LogTable& want) {
    ASSERT_EQ(got.row_count(), want.row_count());
    ASSERT_EQ(got.columns(), want.columns());
    for (std::size_t r = 0; r < want.row_count(); ++r) {
        ASSERT_EQ(got.class_names()[got.labels()[r]], want.class_names()[want.labels()[r]]) << r;
    }
}

bool python_with_pyarrow() {
    static const bool ok = std::system("python3 -c 'import pyarrow' >/dev/null 2>&1") == 0;
    return ok;
}

} // namespace

TEST(Parquet, CompiledIn) { EXPECT_TRUE(parquet_supported()); }

TEST(Parquet, RoundTripAllProfiles) {
    for (const auto& p : builtin_profiles()) {
        const auto& names = p.classes.entries();
        const auto t = synth(p, {{names[0].name, 40}, {names[1].name, 25}, {names[2].name, 3}}, 17);
        const auto path = temp(p.name + ".parquet");
        write_parquet(t, p, path);
        expect_same_rows(read_parquet(path, p).table, t);
        expect_same_rows(read_table(path, p).table, t);
        fs::remove(path);
    }
}

TEST(Parquet, MissingValuesSurvive) {
    std::ostringstream csv;
    csv << "src_ip,src_port,dst_ip,dst_port,proto,duration,src_bytes,dst_bytes,conn_state,src_pkts,src_ip_bytes,"
           "dst_pkts,dst_ip_bytes,label\n"
           "10.0.0.1,1,10.0.0.2,80,tcp,,100,200,SF,3,160,2,120,Benign\n"
           "10.0.0.1,,10.0.0.2,80,,0.5,100,200,SF,3,160,2,120,DoS\n";
    std::istringstream in(csv.str());
    const auto t = read_csv(in, ton()).table;
    const auto path = temp("missing.parquet");
    write_parquet(t, ton(), path);
    const auto back = read_parquet(path, ton()).table;
    EXPECT_EQ(back, t);
    EXPECT_TRUE(back.column("duration")->is_missing(0));
    // Categorical text is kept verbatim; an empty cell is the category "".
    EXPECT_EQ(back.column("proto")->texts()[1], "");
    EXPECT_TRUE(back.column("src_port")->is_missing(1));
    fs::remove(path);
}

TEST(Parquet, RejectsNonParquetBytes) {
    const auto path = temp("junk.parquet");
    {
        std::ofstream out(path, std::ios::binary);
        out << "this is not a parquet file at all";
    }
    EXPECT_THROW(read_parquet(path, ton()), DataError);
    {
        std::ofstream out(path, std::ios::binary);
        out << "PAR1";
    }
    EXPECT_THROW(read_parquet(path, ton()), DataError);
    fs::remove(path);
    EXPECT_THROW(read_parquet(temp("absent.parquet"), ton()), IoError);
}

TEST(Parquet, TruncatedFileIsRejected) {
    const auto t = synth(ton(), {{"Benign", 20}}, 3);
    const auto path = temp("trunc.parquet");
    write_parquet(t, ton(), path);
    const auto size = fs::file_size(path);
    std::string bytes(size, '\0');
    {
        std::ifstream in(path, std::ios::binary);
        in.read(bytes.data(), static_cast<std::streamsize>(size));
    }
    for (std::size_t cut : {size / 3, size / 2, size - 9}) {
        {
            std::ofstream out(path, std::ios::binary | std::ios::trunc);
            out.write(bytes.data(), static_cast<std::streamsize>(cut));
            out.write(bytes.data() + size - 4, 4); // keep the magic trailer
        }
        EXPECT_THROW(read_parquet(path, ton()), Error) << cut;
    }
    fs::remove(path);
}

TEST(Parquet, ProfileSubsetColumns) {
    // Write a two-feature file with the artifact's own writer, re-read it.
    DatasetProfile small;
    small.name = "small";
    small.columns = {{"src_port", ColumnKind::numeric, Storage::int64}, {"proto", ColumnKind::categorical, Storage::text}};
    small.label_column = "label";
    small.classes = ton().classes;
    const auto t = synth(small, {{"Benign", 5}, {"Xss", 4}}, 9);
    const auto path = temp("subset.parquet");
    write_parquet(t, small, path);
    const auto back = read_parquet(path, small).table;
    expect_same_rows(back, t);
    EXPECT_EQ(back.columns().size(), 2u);
    // Read against the full profile: the columns present are materialized and
    // validation reports the rest.
    const auto partial = read_parquet(path, ton()).table;
    expect_same_rows(partial, t);
    EXPECT_EQ(validate_table(partial, ton()).count(ValidationIssue::Kind::missing_column), 11u);
    fs::remove(path);
}

TEST(Parquet, ReadsPyarrowFiles) {
    if (!python_with_pyarrow()) GTEST_SKIP() << "python3 with pyarrow not available";
    const auto path = temp("pyarrow.parquet");
    const auto script = temp("make.py");
    {
        std::ofstream py(script);
        py << R"(import sys, pyarrow as pa, pyarrow.parquet as pq
n = 300
tbl = pa.table({
  "src_ip": ["10.0.%d.%d" % (i // 256, i % 256) for i in range(n)],
  "src_port": pa.array([i * 7 for i in range(n)], pa.int64()),
  "dst_ip": ["192.168.1.1"] * n,
  "dst_port": pa.array([80 if i % 2 else 443 for i in range(n)], pa.int32()),
  "proto": [["tcp", "udp", "icmp"][i % 3] for i in range(n)],
  "duration": [None if i % 10 == 0 else i / 4 for i in range(n)],
  "src_bytes": pa.array([i for i in range(n)], pa.int64()),
  "dst_bytes": pa.array([2 * i for i in range(n)], pa.int64()),
  "conn_state": [["SF", "S0"][i % 2] for i in range(n)],
  "src_pkts": pa.array([1] * n, pa.int64()),
  "src_ip_bytes": pa.array([40] * n, pa.int64()),
  "dst_pkts": pa.array([0] * n, pa.int64()),
  "dst_ip_bytes": pa.array([0] * n, pa.int64()),
  "extra": [1.5] * n,
  "label": [["Benign", "DoS", "Xss"][i % 3] for i in range(n)],
})
pq.write_table(tbl, sys.argv[1], compression=sys.argv[2], use_dictionary=True, data_page_version=sys.argv[3],
               row_group_size=128)
)";
    }
    for (const char* codec : {"snappy", "none"}) {
        for (const char* version : {"1.0", "2.0"}) {
            const auto cmd = "python3 " + script.string() + " " + path.string() + " " + codec + " " + version;
            ASSERT_EQ(std::system(cmd.c_str()), 0) << cmd;
            const auto r = read_parquet(path, ton());
            const auto& t = r.table;
            ASSERT_EQ(t.row_count(), 300u) << codec << " " << version;
            EXPECT_EQ(t.column("src_port")->int64s()[299], 299 * 7);
            EXPECT_EQ(t.column("dst_port")->int64s()[1], 80);
            EXPECT_EQ(t.column("src_ip")->texts()[257], "10.0.1.1");
            EXPECT_EQ(t.column("proto")->texts()[5], "icmp");
            EXPECT_TRUE(t.column("duration")->is_missing(20));
            EXPECT_DOUBLE_EQ(t.column("duration")->float64s()[21], 21 / 4.0);
            EXPECT_EQ(t.class_names()[t.labels()[4]], "DoS");
            EXPECT_EQ(t.column("extra"), nullptr);
        }
    }
    fs::remove(path);
    fs::remove(script);
}

TEST(Parquet, PyarrowReadsOurFiles) {
    if (!python_with_pyarrow()) GTEST_SKIP() << "python3 with pyarrow not available";
    const auto t = synth(uwf(), {{"Benign traffic", 30}, {"Discovery", 12}}, 4);
    const auto path = temp("ours.parquet");
    write_parquet(t, uwf(), path);
    const auto cmd = "python3 -c \"import pyarrow.parquet as pq, sys; t = pq.read_table(sys.argv[1]); "
                     "assert t.num_rows == 42, t.num_rows; assert t.num_columns == 20; "
                     "assert t.column('label_tactic')[41].as_py() == 'Discovery'\" " +
                     path.string();
    EXPECT_EQ(std::system(cmd.c_str()), 0);
    fs::remove(path);
}
