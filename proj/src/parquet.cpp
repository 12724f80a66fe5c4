// Minimal Parquet support: flat schemas only.
//
// Writer: one row group, one PLAIN-encoded v1 data page per column,
// uncompressed. Reader: v1 and v2 data pages, PLAIN and dictionary encodings,
// UNCOMPRESSED or SNAPPY codecs, BOOLEAN/INT32/INT64/FLOAT/DOUBLE/BYTE_ARRAY
// physical types.

#include "hunt/ingest.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

#include "hunt/error.hpp"

namespace hunt {

#ifndef HUNT_WITH_PARQUET

bool parquet_supported() noexcept { return false; }

Ingested read_parquet(const std::filesystem::path&, const DatasetProfile&) {
    throw UnsupportedFormat("format unsupported: this build excludes Parquet");
}

void write_parquet(const LogTable&, const DatasetProfile&, const std::filesystem::path&) {
    throw UnsupportedFormat("format unsupported: this build excludes Parquet");
}

#else

bool parquet_supported() noexcept { return true; }

namespace {

using Bytes = std::vector<std::uint8_t>;

constexpr char kMagic[4] = {'P', 'A', 'R', '1'};

// Thrift compact protocol type ids.
enum : std::uint8_t {
    kStop = 0,
    kTrue = 1,
    kFalse = 2,
    kByte = 3,
    kI16 = 4,
    kI32 = 5,
    kI64 = 6,
    kDouble = 7,
    kBinary = 8,
    kList = 9,
    kSet = 10,
    kMap = 11,
    kStruct = 12,
};

// Parquet enums.
enum PhysicalType : std::int32_t { kBoolean = 0, kInt32 = 1, kInt64 = 2, kInt96 = 3, kFloat = 4, kDoubleType = 5, kByteArray = 6, kFixed = 7 };
enum Repetition : std::int32_t { kRequired = 0, kOptional = 1, kRepeated = 2 };
enum Encoding : std::int32_t { kPlain = 0, kPlainDictionary = 2, kRle = 3, kBitPacked = 4, kRleDictionary = 8 };
enum PageType : std::int32_t { kDataPage = 0, kDictionaryPage = 2, kDataPageV2 = 3 };
enum Codec : std::int32_t { kUncompressed = 0, kSnappy = 1 };
constexpr std::int32_t kConvertedUtf8 = 0;
constexpr std::int32_t kConvertedTimestampMillis = 9;
constexpr std::int32_t kConvertedTimestampMicros = 10;

class ThriftWriter {
public:
    Bytes& bytes() { return out_; }

    void i32(std::int16_t id, std::int32_t v) {
        field(kI32, id);
        varint(zigzag(v));
    }
    void i64(std::int16_t id, std::int64_t v) {
        field(kI64, id);
        varint(zigzag(v));
    }
    void str(std::int16_t id, const std::string& s) {
        field(kBinary, id);
        raw_string(s);
    }
    void begin_struct(std::int16_t id) {
        field(kStruct, id);
        push();
    }
    void end_struct() {
        out_.push_back(kStop);
        pop();
    }
    void begin_list(std::int16_t id, std::uint8_t elem_type, std::size_t size) {
        field(kList, id);
        if (size < 15) {
            out_.push_back(static_cast<std::uint8_t>((size << 4) | elem_type));
        } else {
            out_.push_back(static_cast<std::uint8_t>(0xf0 | elem_type));
            varint(size);
        }
    }
    // Struct element inside a list.
    void begin_element() { push(); }
    void end_element() { end_struct(); }
    void list_i32(std::int32_t v) { varint(zigzag(v)); }
    void raw_string(const std::string& s) {
        varint(s.size());
        out_.insert(out_.end(), s.begin(), s.end());
    }
    void end_message() { out_.push_back(kStop); }

private:
    static std::uint64_t zigzag(std::int64_t v) {
        return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
    }
    void varint(std::uint64_t v) {
        while (v >= 0x80) {
            out_.push_back(static_cast<std::uint8_t>(v | 0x80));
            v >>= 7;
        }
        out_.push_back(static_cast<std::uint8_t>(v));
    }
    void field(std::uint8_t type, std::int16_t id) {
        const int delta = id - last_;
        if (delta > 0 && delta <= 15) {
            out_.push_back(static_cast<std::uint8_t>((delta << 4) | type));
        } else {
            out_.push_back(type);
            varint(zigzag(id));
        }
        last_ = id;
    }
    void push() {
        stack_.push_back(last_);
        last_ = 0;
    }
    void pop() {
        last_ = stack_.back();
        stack_.pop_back();
    }

    Bytes out_;
    std::int16_t last_ = 0;
    std::vector<std::int16_t> stack_;
};

class ThriftReader {
public:
    ThriftReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

    std::size_t position() const noexcept { return pos_; }

    std::uint8_t byte() {
        need(1);
        return data_[pos_++];
    }
    std::uint64_t varint() {
        std::uint64_t v = 0;
        for (int shift = 0; shift < 64; shift += 7) {
            const auto b = byte();
            v |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) return v;
        }
        throw DataError("parquet: malformed varint in metadata");
    }
    std::int64_t zigzag() {
        const auto v = varint();
        return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
    }
    std::int32_t i32() { return static_cast<std::int32_t>(zigzag()); }
    std::int64_t i64() { return zigzag(); }
    std::string string() {
        const auto n = varint();
        need(n);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    std::pair<std::uint8_t, std::size_t> list_header() {
        const auto b = byte();
        std::size_t size = b >> 4;
        if (size == 15) size = varint();
        return {static_cast<std::uint8_t>(b & 0x0f), size};
    }

    /// Calls on_field(id, type) for each field; unhandled fields (false) are skipped.
    template <typename F>
    void read_struct(F&& on_field) {
        if (++depth_ > 64) throw DataError("parquet: metadata nested too deeply");
        std::int16_t last = 0;
        for (;;) {
            const auto b = byte();
            if (b == kStop) break;
            const std::uint8_t type = b & 0x0f;
            const int delta = b >> 4;
            const auto id = static_cast<std::int16_t>(delta ? last + delta : zigzag());
            last = id;
            if (!on_field(id, type)) skip(type);
        }
        --depth_;
    }

    template <typename F>
    void read_list(F&& on_element) {
        const auto [type, size] = list_header();
        for (std::size_t i = 0; i < size; ++i) on_element(type);
    }

    void skip(std::uint8_t type, bool in_collection = false) {
        switch (type) {
        case kTrue:
        case kFalse:
            if (in_collection) byte();
            break;
        case kByte: byte(); break;
        case kI16:
        case kI32:
        case kI64: varint(); break;
        case kDouble:
            need(8);
            pos_ += 8;
            break;
        case kBinary: {
            const auto n = varint();
            need(n);
            pos_ += n;
            break;
        }
        case kList:
        case kSet: {
            const auto [elem, size] = list_header();
            for (std::size_t i = 0; i < size; ++i) skip(elem, true);
            break;
        }
        case kMap: {
            const auto size = varint();
            if (size == 0) break;
            const auto kv = byte();
            for (std::size_t i = 0; i < size; ++i) {
                skip(kv >> 4, true);
                skip(kv & 0x0f, true);
            }
            break;
        }
        case kStruct:
            read_struct([](std::int16_t, std::uint8_t) { return false; });
            break;
        default: throw DataError("parquet: unknown thrift type in metadata");
        }
    }

private:
    void need(std::size_t n) const {
        if (n > size_ - pos_) throw DataError("parquet: truncated metadata");
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

void put_u32(Bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename T>
void put_le(Bytes& out, T v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    out.insert(out.end(), raw, raw + sizeof(T));
}

// RLE runs of definition levels, bit width 1.
Bytes encode_levels(const std::vector<std::uint8_t>& levels) {
    Bytes out;
    std::size_t i = 0;
    while (i < levels.size()) {
        std::size_t j = i;
        while (j < levels.size() && levels[j] == levels[i]) ++j;
        std::uint64_t header = static_cast<std::uint64_t>(j - i) << 1;
        while (header >= 0x80) {
            out.push_back(static_cast<std::uint8_t>(header | 0x80));
            header >>= 7;
        }
        out.push_back(static_cast<std::uint8_t>(header));
        out.push_back(levels[i]);
        i = j;
    }
    return out;
}

struct ColumnOut {
    std::string name;
    PhysicalType type;
    bool optional;
    bool utf8;
    Bytes page;
    std::size_t values;
};

ColumnOut encode_column(const Column& c) {
    ColumnOut out{c.spec.name, kByteArray, !c.missing.empty(), false, {}, c.size()};
    Bytes values;
    const std::size_t n = c.size();
    switch (c.spec.storage) {
    case Storage::int64:
        out.type = kInt64;
        for (std::size_t r = 0; r < n; ++r) {
            if (!c.is_missing(r)) put_le<std::int64_t>(values, c.int64s()[r]);
        }
        break;
    case Storage::float64:
        out.type = kDoubleType;
        for (std::size_t r = 0; r < n; ++r) {
            if (!c.is_missing(r)) put_le<double>(values, c.float64s()[r]);
        }
        break;
    case Storage::text:
        out.type = kByteArray;
        out.utf8 = true;
        for (std::size_t r = 0; r < n; ++r) {
            if (c.is_missing(r)) continue;
            const auto& s = c.texts()[r];
            put_u32(values, static_cast<std::uint32_t>(s.size()));
            values.insert(values.end(), s.begin(), s.end());
        }
        break;
    case Storage::boolean: {
        out.type = kBoolean;
        std::size_t bit = 0;
        for (std::size_t r = 0; r < n; ++r) {
            if (c.is_missing(r)) continue;
            if (bit % 8 == 0) values.push_back(0);
            if (c.bools()[r]) values.back() |= static_cast<std::uint8_t>(1U << (bit % 8));
            ++bit;
        }
        break;
    }
    }
    if (out.optional) {
        std::vector<std::uint8_t> levels(n);
        for (std::size_t r = 0; r < n; ++r) levels[r] = c.is_missing(r) ? 0 : 1;
        const auto encoded = encode_levels(levels);
        put_u32(out.page, static_cast<std::uint32_t>(encoded.size()));
        out.page.insert(out.page.end(), encoded.begin(), encoded.end());
    }
    out.page.insert(out.page.end(), values.begin(), values.end());
    return out;
}

} // namespace

void write_parquet(const LogTable& table, const DatasetProfile& profile, const std::filesystem::path& path) {
    std::vector<ColumnOut> columns;
    for (const auto& spec : profile.columns) {
        if (const auto* c = table.column(spec.name)) columns.push_back(encode_column(*c));
    }
    {
        std::vector<std::string> labels;
        labels.reserve(table.row_count());
        for (auto l : table.labels()) labels.push_back(table.class_names()[l]);
        Column label{{profile.label_column, ColumnKind::categorical, Storage::text}, std::move(labels), {}};
        columns.push_back(encode_column(label));
    }

    Bytes file(kMagic, kMagic + 4);
    struct Chunk {
        std::int64_t offset;
        std::int64_t size;
    };
    std::vector<Chunk> chunks;
    for (const auto& col : columns) {
        ThriftWriter header;
        header.i32(1, kDataPage);
        header.i32(2, static_cast<std::int32_t>(col.page.size()));
        header.i32(3, static_cast<std::int32_t>(col.page.size()));
        header.begin_struct(5);
        header.i32(1, static_cast<std::int32_t>(col.values));
        header.i32(2, kPlain);
        header.i32(3, kRle);
        header.i32(4, kRle);
        header.end_struct();
        header.end_message();
        const auto offset = static_cast<std::int64_t>(file.size());
        file.insert(file.end(), header.bytes().begin(), header.bytes().end());
        file.insert(file.end(), col.page.begin(), col.page.end());
        chunks.push_back({offset, static_cast<std::int64_t>(file.size()) - offset});
    }

    ThriftWriter meta;
    meta.i32(1, 1);
    meta.begin_list(2, kStruct, columns.size() + 1);
    meta.begin_element();
    meta.str(4, "schema");
    meta.i32(5, static_cast<std::int32_t>(columns.size()));
    meta.end_element();
    for (const auto& col : columns) {
        meta.begin_element();
        meta.i32(1, col.type);
        meta.i32(3, col.optional ? kOptional : kRequired);
        meta.str(4, col.name);
        if (col.utf8) meta.i32(6, kConvertedUtf8);
        meta.end_element();
    }
    meta.i64(3, static_cast<std::int64_t>(table.row_count()));
    meta.begin_list(4, kStruct, 1);
    meta.begin_element();
    meta.begin_list(1, kStruct, columns.size());
    std::int64_t total = 0;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        const auto& col = columns[i];
        meta.begin_element();
        meta.i64(2, chunks[i].offset);
        meta.begin_struct(3);
        meta.i32(1, col.type);
        meta.begin_list(2, kI32, 2);
        meta.list_i32(kPlain);
        meta.list_i32(kRle);
        meta.begin_list(3, kBinary, 1);
        meta.raw_string(col.name);
        meta.i32(4, kUncompressed);
        meta.i64(5, static_cast<std::int64_t>(col.values));
        meta.i64(6, chunks[i].size);
        meta.i64(7, chunks[i].size);
        meta.i64(9, chunks[i].offset);
        meta.end_struct();
        meta.end_element();
        total += chunks[i].size;
    }
    meta.i64(2, total);
    meta.i64(3, static_cast<std::int64_t>(table.row_count()));
    meta.end_element();
    meta.str(6, "hunt parquet writer");
    meta.end_message();

    file.insert(file.end(), meta.bytes().begin(), meta.bytes().end());
    put_u32(file, static_cast<std::uint32_t>(meta.bytes().size()));
    file.insert(file.end(), kMagic, kMagic + 4);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(file.data()), static_cast<std::streamsize>(file.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

namespace {

struct SchemaLeaf {
    std::string name;
    std::int32_t type = -1;
    std::int32_t repetition = kRequired;
    std::int32_t converted = -1;
    std::int32_t num_children = 0;
    double time_scale = 0.0; // seconds per unit for timestamp logical types
};

struct ChunkMeta {
    std::int32_t type = -1;
    std::vector<std::string> path;
    std::int32_t codec = kUncompressed;
    std::int64_t num_values = 0;
    std::int64_t data_page_offset = -1;
    std::int64_t dictionary_page_offset = -1;
};

struct RowGroupMeta {
    std::vector<ChunkMeta> chunks;
    std::int64_t num_rows = 0;
};

struct FileMeta {
    std::vector<SchemaLeaf> schema;
    std::int64_t num_rows = 0;
    std::vector<RowGroupMeta> row_groups;
};

double read_time_unit(ThriftReader& r) {
    // TimeUnit union: 1 MILLIS, 2 MICROS, 3 NANOS
    double scale = 0.0;
    r.read_struct([&](std::int16_t id, std::uint8_t type) {
        if (type != kStruct) return false;
        if (id == 1) scale = 1e-3;
        if (id == 2) scale = 1e-6;
        if (id == 3) scale = 1e-9;
        r.skip(kStruct);
        return true;
    });
    return scale;
}

SchemaLeaf read_schema_element(ThriftReader& r) {
    SchemaLeaf e;
    r.read_struct([&](std::int16_t id, std::uint8_t type) {
        switch (id) {
        case 1: e.type = r.i32(); return true;
        case 3: e.repetition = r.i32(); return true;
        case 4: e.name = r.string(); return true;
        case 5: e.num_children = r.i32(); return true;
        case 6: e.converted = r.i32(); return true;
        case 10:
            if (type != kStruct) return false;
            // LogicalType union; field 8 is TIMESTAMP {1: isAdjustedToUTC, 2: unit}
            r.read_struct([&](std::int16_t lid, std::uint8_t ltype) {
                if (lid != 8 || ltype != kStruct) return false;
                r.read_struct([&](std::int16_t tid, std::uint8_t ttype) {
                    if (tid != 2 || ttype != kStruct) return false;
                    e.time_scale = read_time_unit(r);
                    return true;
                });
                return true;
            });
            return true;
        default: return false;
        }
    });
    if (e.time_scale == 0.0 && e.converted == kConvertedTimestampMillis) e.time_scale = 1e-3;
    if (e.time_scale == 0.0 && e.converted == kConvertedTimestampMicros) e.time_scale = 1e-6;
    return e;
}

ChunkMeta read_column_chunk(ThriftReader& r) {
    ChunkMeta m;
    r.read_struct([&](std::int16_t id, std::uint8_t type) {
        if (id == 1 && type == kBinary) throw UnsupportedFormat("parquet: external column chunk files");
        if (id != 3 || type != kStruct) return false;
        r.read_struct([&](std::int16_t mid, std::uint8_t) {
            switch (mid) {
            case 1: m.type = r.i32(); return true;
            case 3: r.read_list([&](std::uint8_t) { m.path.push_back(r.string()); }); return true;
            case 4: m.codec = r.i32(); return true;
            case 5: m.num_values = r.i64(); return true;
            case 9: m.data_page_offset = r.i64(); return true;
            case 11: m.dictionary_page_offset = r.i64(); return true;
            default: return false;
            }
        });
        return true;
    });
    return m;
}

FileMeta read_file_meta(ThriftReader& r) {
    FileMeta meta;
    r.read_struct([&](std::int16_t id, std::uint8_t) {
        switch (id) {
        case 2: r.read_list([&](std::uint8_t) { meta.schema.push_back(read_schema_element(r)); }); return true;
        case 3: meta.num_rows = r.i64(); return true;
        case 4:
            r.read_list([&](std::uint8_t) {
                RowGroupMeta rg;
                r.read_struct([&](std::int16_t gid, std::uint8_t) {
                    if (gid == 1) {
                        r.read_list([&](std::uint8_t) { rg.chunks.push_back(read_column_chunk(r)); });
                        return true;
                    }
                    if (gid == 3) {
                        rg.num_rows = r.i64();
                        return true;
                    }
                    return false;
                });
                meta.row_groups.push_back(std::move(rg));
            });
            return true;
        default: return false;
        }
    });
    return meta;
}

struct PageHeader {
    std::int32_t type = -1;
    std::int32_t uncompressed_size = 0;
    std::int32_t compressed_size = 0;
    std::int32_t num_values = 0;
    std::int32_t encoding = kPlain;
    // v2 only
    std::int32_t num_nulls = 0;
    std::int32_t def_length = 0;
    std::int32_t rep_length = 0;
    bool is_compressed = true;
};

PageHeader read_page_header(ThriftReader& r) {
    PageHeader h;
    r.read_struct([&](std::int16_t id, std::uint8_t type) {
        switch (id) {
        case 1: h.type = r.i32(); return true;
        case 2: h.uncompressed_size = r.i32(); return true;
        case 3: h.compressed_size = r.i32(); return true;
        case 5:
        case 7:
            if (type != kStruct) return false;
            r.read_struct([&](std::int16_t did, std::uint8_t) {
                if (did == 1) {
                    h.num_values = r.i32();
                    return true;
                }
                if (did == 2) {
                    h.encoding = r.i32();
                    return true;
                }
                return false;
            });
            return true;
        case 8:
            if (type != kStruct) return false;
            r.read_struct([&](std::int16_t vid, std::uint8_t vtype) {
                switch (vid) {
                case 1: h.num_values = r.i32(); return true;
                case 2: h.num_nulls = r.i32(); return true;
                case 4: h.encoding = r.i32(); return true;
                case 5: h.def_length = r.i32(); return true;
                case 6: h.rep_length = r.i32(); return true;
                case 7:
                    if (vtype == kTrue || vtype == kFalse) {
                        h.is_compressed = vtype == kTrue;
                        return true;
                    }
                    return false;
                default: return false;
                }
            });
            return true;
        default: return false;
        }
    });
    if (h.compressed_size < 0 || h.uncompressed_size < 0 || h.num_values < 0) {
        throw DataError("parquet: negative page size");
    }
    return h;
}

Bytes snappy_decompress(const std::uint8_t* data, std::size_t size) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (n > size - pos) throw DataError("parquet: truncated snappy block");
    };
    std::uint64_t length = 0;
    for (int shift = 0;; shift += 7) {
        need(1);
        const auto b = data[pos++];
        length |= static_cast<std::uint64_t>(b & 0x7f) << shift;
        if (!(b & 0x80)) break;
        if (shift > 28) throw DataError("parquet: bad snappy length");
    }
    Bytes out;
    out.reserve(length);
    while (pos < size) {
        const auto tag = data[pos++];
        std::size_t len = 0;
        std::size_t offset = 0;
        switch (tag & 3) {
        case 0: {
            len = tag >> 2;
            if (len >= 60) {
                const std::size_t extra = len - 59;
                need(extra);
                len = 0;
                for (std::size_t i = 0; i < extra; ++i) len |= static_cast<std::size_t>(data[pos + i]) << (8 * i);
                pos += extra;
            }
            ++len;
            need(len);
            out.insert(out.end(), data + pos, data + pos + len);
            pos += len;
            continue;
        }
        case 1:
            need(1);
            len = ((tag >> 2) & 7) + 4;
            offset = (static_cast<std::size_t>(tag >> 5) << 8) | data[pos++];
            break;
        case 2:
            need(2);
            len = (tag >> 2) + 1;
            offset = data[pos] | (static_cast<std::size_t>(data[pos + 1]) << 8);
            pos += 2;
            break;
        default:
            need(4);
            len = (tag >> 2) + 1;
            offset = 0;
            for (int i = 0; i < 4; ++i) offset |= static_cast<std::size_t>(data[pos + i]) << (8 * i);
            pos += 4;
            break;
        }
        if (offset == 0 || offset > out.size()) throw DataError("parquet: bad snappy back-reference");
        const std::size_t start = out.size() - offset;
        for (std::size_t i = 0; i < len; ++i) out.push_back(out[start + i]);
    }
    if (out.size() != length) throw DataError("parquet: snappy length mismatch");
    return out;
}

Bytes decompress(std::int32_t codec, const std::uint8_t* data, std::size_t size, std::size_t expected) {
    Bytes out;
    if (codec == kUncompressed) {
        out.assign(data, data + size);
    } else if (codec == kSnappy) {
        out = snappy_decompress(data, size);
    } else {
        throw UnsupportedFormat("parquet: compression codec " + std::to_string(codec) + " is not supported");
    }
    if (out.size() != expected) throw DataError("parquet: page size mismatch after decompression");
    return out;
}

// RLE / bit-packed hybrid.
std::vector<std::uint32_t> decode_hybrid(const std::uint8_t* data, std::size_t size, int bit_width,
                                         std::size_t count) {
    std::vector<std::uint32_t> out;
    out.reserve(count);
    std::size_t pos = 0;
    if (bit_width < 0 || bit_width > 32) throw DataError("parquet: bad bit width");
    const std::size_t value_bytes = (static_cast<std::size_t>(bit_width) + 7) / 8;
    while (out.size() < count) {
        std::uint64_t header = 0;
        for (int shift = 0;; shift += 7) {
            if (pos >= size) throw DataError("parquet: truncated level data");
            const auto b = data[pos++];
            header |= static_cast<std::uint64_t>(b & 0x7f) << shift;
            if (!(b & 0x80)) break;
            if (shift > 56) throw DataError("parquet: bad run header");
        }
        if (header & 1) {
            const std::size_t groups = header >> 1;
            const std::size_t bytes = groups * static_cast<std::size_t>(bit_width);
            if (bytes > size - pos) throw DataError("parquet: truncated bit-packed run");
            const std::size_t n = groups * 8;
            for (std::size_t i = 0; i < n && out.size() < count; ++i) {
                std::uint32_t v = 0;
                for (int b = 0; b < bit_width; ++b) {
                    const std::size_t bit = i * static_cast<std::size_t>(bit_width) + static_cast<std::size_t>(b);
                    if ((data[pos + bit / 8] >> (bit % 8)) & 1) v |= 1U << b;
                }
                out.push_back(v);
            }
            pos += bytes;
        } else {
            const std::size_t run = header >> 1;
            if (value_bytes > size - pos) throw DataError("parquet: truncated RLE run");
            std::uint32_t v = 0;
            for (std::size_t i = 0; i < value_bytes; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
            pos += value_bytes;
            for (std::size_t i = 0; i < run && out.size() < count; ++i) out.push_back(v);
        }
    }
    return out;
}

class PlainDecoder {
public:
    PlainDecoder(const std::uint8_t* data, std::size_t size, std::int32_t type, double time_scale)
        : data_(data), size_(size), type_(type), time_scale_(time_scale) {}

    Cell next() {
        switch (type_) {
        case kBoolean: {
            if (bit_ / 8 >= size_) throw DataError("parquet: truncated boolean values");
            const bool v = (data_[bit_ / 8] >> (bit_ % 8)) & 1;
            ++bit_;
            return v;
        }
        case kInt32: return scale(static_cast<std::int64_t>(read<std::int32_t>()));
        case kInt64: return scale(read<std::int64_t>());
        case kFloat: return static_cast<double>(read<float>());
        case kDoubleType: return read<double>();
        case kByteArray: {
            const auto n = read<std::uint32_t>();
            if (n > size_ - pos_) throw DataError("parquet: truncated byte array");
            std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
            pos_ += n;
            return s;
        }
        default: throw UnsupportedFormat("parquet: physical type " + std::to_string(type_) + " is not supported");
        }
    }

private:
    template <typename T>
    T read() {
        if (sizeof(T) > size_ - pos_) throw DataError("parquet: truncated values");
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    Cell scale(std::int64_t v) const {
        if (time_scale_ > 0.0) return static_cast<double>(v) * time_scale_;
        return v;
    }

    const std::uint8_t* data_;
    std::size_t size_;
    std::int32_t type_;
    double time_scale_;
    std::size_t pos_ = 0;
    std::size_t bit_ = 0;
};

std::vector<Cell> read_column(const Bytes& file, const ChunkMeta& chunk, const SchemaLeaf& leaf) {
    if (chunk.codec != kUncompressed && chunk.codec != kSnappy) {
        throw UnsupportedFormat("parquet: compression codec " + std::to_string(chunk.codec) + " is not supported");
    }
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(std::max<std::int64_t>(chunk.num_values, 0)));
    std::vector<Cell> dictionary;
    const bool optional = leaf.repetition == kOptional;

    std::int64_t pos = chunk.dictionary_page_offset >= 0 && chunk.dictionary_page_offset < chunk.data_page_offset
                           ? chunk.dictionary_page_offset
                           : chunk.data_page_offset;
    while (static_cast<std::int64_t>(cells.size()) < chunk.num_values) {
        if (pos < 0 || static_cast<std::size_t>(pos) >= file.size()) throw DataError("parquet: page offset out of range");
        ThriftReader hr(file.data() + pos, file.size() - static_cast<std::size_t>(pos));
        const auto header = read_page_header(hr);
        const std::size_t body = static_cast<std::size_t>(pos) + hr.position();
        if (static_cast<std::size_t>(header.compressed_size) > file.size() - body) {
            throw DataError("parquet: page extends past end of file");
        }
        pos = static_cast<std::int64_t>(body) + header.compressed_size;
        const auto* raw = file.data() + body;

        if (header.type == kDictionaryPage) {
            const auto page = decompress(chunk.codec, raw, static_cast<std::size_t>(header.compressed_size),
                                         static_cast<std::size_t>(header.uncompressed_size));
            PlainDecoder dec(page.data(), page.size(), chunk.type, leaf.time_scale);
            dictionary.clear();
            for (std::int32_t i = 0; i < header.num_values; ++i) dictionary.push_back(dec.next());
            continue;
        }
        if (header.type != kDataPage && header.type != kDataPageV2) continue;

        Bytes page;
        std::vector<std::uint32_t> levels;
        const std::size_t n = static_cast<std::size_t>(header.num_values);
        std::size_t values_at = 0;
        if (header.type == kDataPage) {
            page = decompress(chunk.codec, raw, static_cast<std::size_t>(header.compressed_size),
                              static_cast<std::size_t>(header.uncompressed_size));
            if (optional) {
                if (page.size() < 4) throw DataError("parquet: truncated definition levels");
                std::uint32_t len = 0;
                std::memcpy(&len, page.data(), 4);
                if (len > page.size() - 4) throw DataError("parquet: truncated definition levels");
                levels = decode_hybrid(page.data() + 4, len, 1, n);
                values_at = 4 + len;
            }
        } else {
            const auto level_bytes = static_cast<std::size_t>(header.def_length) + static_cast<std::size_t>(header.rep_length);
            if (level_bytes > static_cast<std::size_t>(header.compressed_size)) throw DataError("parquet: bad v2 levels");
            if (header.rep_length > 0) throw UnsupportedFormat("parquet: repeated fields are not supported");
            if (optional) levels = decode_hybrid(raw, static_cast<std::size_t>(header.def_length), 1, n);
            Bytes rest;
            const auto comp = static_cast<std::size_t>(header.compressed_size) - level_bytes;
            const auto uncomp = static_cast<std::size_t>(header.uncompressed_size) - level_bytes;
            rest = header.is_compressed ? decompress(chunk.codec, raw + level_bytes, comp, uncomp)
                                        : Bytes(raw + level_bytes, raw + level_bytes + comp);
            page = std::move(rest);
        }

        std::size_t present = n;
        if (optional) present = static_cast<std::size_t>(std::count(levels.begin(), levels.end(), 1U));
        std::vector<Cell> values;
        values.reserve(present);
        const auto* vdata = page.data() + values_at;
        const std::size_t vsize = page.size() - values_at;
        if (header.encoding == kPlain) {
            PlainDecoder dec(vdata, vsize, chunk.type, leaf.time_scale);
            for (std::size_t i = 0; i < present; ++i) values.push_back(dec.next());
        } else if (header.encoding == kPlainDictionary || header.encoding == kRleDictionary) {
            if (vsize < 1) throw DataError("parquet: truncated dictionary indices");
            const auto idx = decode_hybrid(vdata + 1, vsize - 1, vdata[0], present);
            for (auto i : idx) {
                if (i >= dictionary.size()) throw DataError("parquet: dictionary index out of range");
                values.push_back(dictionary[i]);
            }
        } else if (header.encoding == kRle && chunk.type == kBoolean) {
            if (vsize < 4) throw DataError("parquet: truncated boolean RLE data");
            std::uint32_t len = 0;
            std::memcpy(&len, vdata, 4);
            if (len > vsize - 4) throw DataError("parquet: truncated boolean RLE data");
            for (auto v : decode_hybrid(vdata + 4, len, 1, present)) values.push_back(v != 0);
        } else {
            throw UnsupportedFormat("parquet: value encoding " + std::to_string(header.encoding) +
                                    " is not supported");
        }

        if (optional) {
            std::size_t next = 0;
            for (auto l : levels) cells.push_back(l ? std::move(values[next++]) : Cell{});
        } else {
            for (auto& v : values) cells.push_back(std::move(v));
        }
    }
    return cells;
}

} // namespace

Ingested read_parquet(const std::filesystem::path& path, const DatasetProfile& profile) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    const Bytes file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto name = path.string();

    if (file.size() < 12 || std::memcmp(file.data(), kMagic, 4) != 0 ||
        std::memcmp(file.data() + file.size() - 4, kMagic, 4) != 0) {
        throw DataError(name + ": not a Parquet file");
    }
    std::uint32_t meta_len = 0;
    std::memcpy(&meta_len, file.data() + file.size() - 8, 4);
    if (meta_len > file.size() - 12) throw DataError(name + ": corrupt Parquet footer");
    ThriftReader reader(file.data() + file.size() - 8 - meta_len, meta_len);
    const auto meta = read_file_meta(reader);

    if (meta.schema.empty()) throw DataError(name + ": Parquet schema is empty");
    std::map<std::string, std::size_t> leaf_index;
    for (std::size_t i = 1; i < meta.schema.size(); ++i) {
        const auto& leaf = meta.schema[i];
        if (leaf.num_children > 0 || leaf.repetition == kRepeated) {
            throw UnsupportedFormat(name + ": nested Parquet schemas are not supported");
        }
        leaf_index[leaf.name] = i;
    }
    if (!leaf_index.count(profile.label_column)) {
        throw DataError(name + ": schema lacks label column '" + profile.label_column + "'");
    }

    std::vector<std::string> present;
    for (const auto& spec : profile.columns) {
        if (leaf_index.count(spec.name)) present.push_back(spec.name);
    }
    TableBuilder builder(profile, present);
    std::vector<std::string> wanted;
    for (const auto& spec : builder.columns()) wanted.push_back(spec.name);
    wanted.push_back(profile.label_column);

    Ingested result;
    std::size_t row_base = 0;
    for (const auto& rg : meta.row_groups) {
        std::vector<std::vector<Cell>> columns;
        for (const auto& col : wanted) {
            const ChunkMeta* chunk = nullptr;
            for (const auto& c : rg.chunks) {
                if (c.path.size() == 1 && c.path.front() == col) chunk = &c;
            }
            if (!chunk) throw DataError(name + ": row group lacks column '" + col + "'");
            auto cells = read_column(file, *chunk, meta.schema[leaf_index.at(col)]);
            if (static_cast<std::int64_t>(cells.size()) != rg.num_rows) {
                throw DataError(name + ": column '" + col + "' has an unexpected value count");
            }
            columns.push_back(std::move(cells));
        }
        std::vector<Cell> row(builder.columns().size());
        for (std::size_t r = 0; r < static_cast<std::size_t>(rg.num_rows); ++r) {
            for (std::size_t c = 0; c < row.size(); ++c) row[c] = std::move(columns[c][r]);
            if (auto reason = builder.append(row, columns.back()[r])) result.skips.note(row_base + r + 1, *reason);
        }
        row_base += static_cast<std::size_t>(rg.num_rows);
    }
    if (builder.rows() == 0) throw DataError(name + ": zero parseable rows");
    result.table = builder.build();
    return result;
}

#endif

} // namespace hunt
