#include "hunt/schema.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "hunt/error.hpp"

namespace hunt {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::data: return "data";
    case ErrorKind::io: return "io";
    case ErrorKind::unsupported: return "unsupported";
    }
    return "unknown";
}

const char* to_string(ColumnKind kind) noexcept {
    switch (kind) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::ipv4: return "ipv4";
    case ColumnKind::timestamp: return "timestamp";
    case ColumnKind::boolean: return "boolean";
    }
    return "?";
}

const char* to_string(Storage storage) noexcept {
    switch (storage) {
    case Storage::int64: return "int64";
    case Storage::float64: return "float64";
    case Storage::text: return "text";
    case Storage::boolean: return "bool";
    }
    return "?";
}

ColumnKind parse_column_kind(std::string_view text) {
    if (text == "numeric") return ColumnKind::numeric;
    if (text == "categorical") return ColumnKind::categorical;
    if (text == "ipv4") return ColumnKind::ipv4;
    if (text == "timestamp") return ColumnKind::timestamp;
    if (text == "boolean" || text == "bool") return ColumnKind::boolean;
    throw DataError("unknown column kind '" + std::string(text) + "'");
}

Storage parse_storage(std::string_view text) {
    if (text == "int64") return Storage::int64;
    if (text == "float64") return Storage::float64;
    if (text == "text") return Storage::text;
    if (text == "bool" || text == "boolean") return Storage::boolean;
    throw DataError("unknown storage '" + std::string(text) + "'");
}

void ColumnSpec::validate() const {
    if (name.empty()) throw DataError("column with empty name");
    bool ok = false;
    switch (kind) {
    case ColumnKind::numeric: ok = storage == Storage::int64 || storage == Storage::float64; break;
    case ColumnKind::categorical: ok = storage == Storage::text; break;
    case ColumnKind::ipv4: ok = storage == Storage::text; break;
    case ColumnKind::timestamp: ok = storage == Storage::text || storage == Storage::float64; break;
    case ColumnKind::boolean: ok = storage == Storage::boolean; break;
    }
    if (!ok) {
        throw DataError("column '" + name + "': kind " + to_string(kind) +
                        " cannot use storage " + to_string(storage));
    }
}

bool is_tactic_id(std::string_view label) noexcept {
    auto digits = [&](std::size_t from, std::size_t n) {
        for (std::size_t i = from; i < from + n; ++i) {
            if (label[i] < '0' || label[i] > '9') return false;
        }
        return true;
    };
    if (label.size() == 5) return label[0] == 'T' && digits(1, 4);
    if (label.size() == 9) return label[0] == 'T' && digits(1, 4) && label[5] == '.' && digits(6, 3);
    return false;
}

bool ClassEntry::is_benign() const noexcept {
    return tactics.size() == 1 && tactics.front() == kBenignTactic;
}

ClassRegistry::ClassRegistry(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
    std::set<std::string> seen;
    for (const auto& e : entries_) {
        if (e.name.empty()) throw DataError("class registry: empty class name");
        if (!seen.insert(e.name).second) throw DataError("class registry: duplicate class '" + e.name + "'");
        if (e.tactics.empty()) throw DataError("class '" + e.name + "' has no tactic label");
        const bool sentinel = e.tactics.size() == 1 &&
                              (e.tactics.front() == kBenignTactic || e.tactics.front() == kAmalgamatedTactic);
        if (!sentinel) {
            for (const auto& t : e.tactics) {
                if (!is_tactic_id(t)) throw DataError("class '" + e.name + "': bad tactic label '" + t + "'");
            }
        }
    }
}

std::optional<std::size_t> ClassRegistry::find(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].name == name) return i;
    }
    return std::nullopt;
}

const ClassEntry* ClassRegistry::entry(std::string_view name) const noexcept {
    auto i = find(name);
    return i ? &entries_[*i] : nullptr;
}

std::vector<std::string> ClassRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
}

std::vector<std::string> ClassRegistry::benign_names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) {
        if (e.is_benign()) out.push_back(e.name);
    }
    return out;
}

void DatasetProfile::validate() const {
    if (name.empty()) throw DataError("profile without a name");
    if (columns.empty()) throw DataError("profile '" + name + "' has no feature columns");
    if (label_column.empty()) throw DataError("profile '" + name + "' has no label column");
    std::set<std::string> seen;
    for (const auto& c : columns) {
        c.validate();
        if (!seen.insert(c.name).second) throw DataError("profile '" + name + "': duplicate column '" + c.name + "'");
    }
    if (seen.count(label_column)) {
        throw DataError("profile '" + name + "': label column '" + label_column + "' is also a feature");
    }
    if (classes.size() == 0) throw DataError("profile '" + name + "' has an empty class registry");
}

const ColumnSpec* DatasetProfile::column(std::string_view column_name) const noexcept {
    for (const auto& c : columns) {
        if (c.name == column_name) return &c;
    }
    return nullptr;
}

namespace {

ColumnSpec num_i(std::string name) { return {std::move(name), ColumnKind::numeric, Storage::int64}; }
ColumnSpec num_f(std::string name) { return {std::move(name), ColumnKind::numeric, Storage::float64}; }
ColumnSpec cat(std::string name) { return {std::move(name), ColumnKind::categorical, Storage::text}; }
ColumnSpec ip(std::string name) { return {std::move(name), ColumnKind::ipv4, Storage::text}; }
ColumnSpec flag(std::string name) { return {std::move(name), ColumnKind::boolean, Storage::boolean}; }

const std::string kBenign(kBenignTactic);

DatasetProfile make_uwf2022() {
    DatasetProfile p;
    p.name = "uwf2022";
    // Attribute order as published by the dataset authors.
    p.columns = {
        num_i("resp_pkts"),
        cat("service"),
        num_i("orig_ip_bytes"),
        flag("local_resp"),
        num_i("missed_bytes"),
        cat("proto"),
        num_f("duration"),
        cat("conn_state"),
        ip("dest_ip_zeek"),
        num_i("orig_pkts"),
        num_i("resp_ip_bytes"),
        num_i("dest_port_zeek"),
        num_f("orig_bytes"),
        flag("local_orig"),
        {"datetime", ColumnKind::timestamp, Storage::text},
        num_f("resp_bytes"),
        num_i("src_port_zeek"),
        {"ts", ColumnKind::timestamp, Storage::float64},
        ip("src_ip_zeek"),
    };
    p.label_column = "label_tactic";
    p.classes = ClassRegistry({
        {"Benign traffic", {kBenign}},
        {"Reconnaissance", {"T1590", "T1592", "T1595", "T1595.001", "T1595.002"}},
        {"Discovery", {"T1046", "T1135"}},
        {"Credential Access", {"T1003.002", "T1003.008", "T1110", "T1552"}},
        {"Privilege Escalation", {"T1068"}},
        {"Exfiltration", {"T1048.001"}},
        {"Lateral Movement", {"T1021", "T1021.004"}},
        {"Resource Development", {"T1587.004", "T1588.002"}},
        {"Defense Evasion", {"T1070", "T1070.002", "T1070.003", "T1564"}},
        {"Initial Access", {"T1189", "T1190"}},
        {"Persistence", {"T1098", "T1136", "T1136.001"}},
    });
    return p;
}

DatasetProfile make_cicids2017() {
    DatasetProfile p;
    p.name = "cicids2017";
    p.columns = {
        num_i("Destination Port"),
        num_i("Flow Duration"),
        num_i("Total Fwd Packets"),
        num_i("Total Backward Packets"),
        num_i("Total Length Of Fwd Packets"),
        num_i("Total Length Of Bwd Packets"),
        num_f("Flow Bytes/s"),
        num_f("Flow Packets/s"),
        num_i("Fwd Header Length"),
        num_i("Bwd Header Length"),
        num_f("Fwd Packets/s"),
        num_f("Bwd Packets/s"),
        num_i("Min Packet Length"),
        num_i("Max Packet Length"),
        num_f("Avg Fwd Segment Size"),
        num_f("Avg Bwd Segment Size"),
        num_i("Init Win Bytes Forward"),
        num_i("Init Win Bytes Backward"),
        num_i("Act Data Pkt Fwd"),
        num_i("Min Seg Size Forward"),
    };
    p.label_column = "Label";
    p.classes = ClassRegistry({
        {"Benign", {kBenign}},
        {"DoS Hulk", {"T1498"}},
        {"PortScan", {"T1046"}},
        {"DDoS", {"T1498", "T1498.002"}},
        {"DoS GoldenEye", {"T1498"}},
        {"FTP-Patator", {"T1110", "T1114"}},
        {"SSH-Patator", {"T1110", "T1114"}},
        {"DoS slowloris", {"T1498"}},
        {"DoS Slowhttptest", {"T1498"}},
        {"Bot", {"T1508"}},
        {"Web Attack Brute Force", {"T1110"}},
        {"Web Attack XSS", {"T1059"}},
        {"Infiltration", {"T1566"}},
        {"Web Attack Sql Injection", {"T1110"}},
        {"Heartbleed", {"T1504"}},
    });
    return p;
}

DatasetProfile make_toniot() {
    DatasetProfile p;
    p.name = "toniot";
    p.columns = {
        ip("src_ip"),
        num_i("src_port"),
        ip("dst_ip"),
        num_i("dst_port"),
        cat("proto"),
        num_f("duration"),
        num_i("src_bytes"),
        num_i("dst_bytes"),
        cat("conn_state"),
        num_i("src_pkts"),
        num_i("src_ip_bytes"),
        num_i("dst_pkts"),
        num_i("dst_ip_bytes"),
    };
    p.label_column = "label";
    // Fine-grained classes followed by the twofold "Malicious" class.
    p.classes = ClassRegistry({
        {"Benign", {kBenign}},
        {"Scanning", {"T1595"}},
        {"DoS", {"T1498"}},
        {"Injection", {"T1203"}},
        {"Ddos", {"T1498", "T1498.002"}},
        {"Password", {"T1110"}},
        {"Xss", {"T1189"}},
        {"Ransomware", {"T1486"}},
        {"Backdoor", {"T1098"}},
        {"Mitm", {"T1557"}},
        {"Malicious", {std::string(kAmalgamatedTactic)}},
    });
    return p;
}

} // namespace

const std::vector<DatasetProfile>& builtin_profiles() {
    static const std::vector<DatasetProfile> profiles = {make_uwf2022(), make_cicids2017(), make_toniot()};
    return profiles;
}

const DatasetProfile* find_builtin_profile(std::string_view name) noexcept {
    for (const auto& p : builtin_profiles()) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

nlohmann::json profile_to_json(const DatasetProfile& profile) {
    nlohmann::json doc;
    doc["name"] = profile.name;
    auto& cols = doc["columns"] = nlohmann::json::array();
    for (const auto& c : profile.columns) {
        cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}, {"storage", to_string(c.storage)}});
    }
    doc["label_column"] = profile.label_column;
    auto& classes = doc["classes"] = nlohmann::json::array();
    for (const auto& e : profile.classes.entries()) {
        classes.push_back({{"name", e.name}, {"tactics", e.tactics}});
    }
    return doc;
}

DatasetProfile profile_from_json(const nlohmann::json& doc) {
    try {
        DatasetProfile p;
        p.name = doc.at("name").get<std::string>();
        for (const auto& c : doc.at("columns")) {
            p.columns.push_back({c.at("name").get<std::string>(),
                                 parse_column_kind(c.at("kind").get<std::string>()),
                                 parse_storage(c.at("storage").get<std::string>())});
        }
        p.label_column = doc.at("label_column").get<std::string>();
        std::vector<ClassEntry> entries;
        for (const auto& e : doc.at("classes")) {
            entries.push_back({e.at("name").get<std::string>(), e.at("tactics").get<std::vector<std::string>>()});
        }
        p.classes = ClassRegistry(std::move(entries));
        p.validate();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("profile config: ") + e.what());
    }
}

std::string serialize_profile(const DatasetProfile& profile) {
    return profile_to_json(profile).dump(2) + "\n";
}

DatasetProfile parse_profile(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("profile config: ") + e.what());
    }
    return profile_from_json(doc);
}

DatasetProfile load_profile(const std::string& name_or_path) {
    if (const auto* p = find_builtin_profile(name_or_path)) return *p;
    std::ifstream in(name_or_path);
    if (!in) throw IoError("cannot open profile '" + name_or_path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_profile(buf.str());
}

std::size_t Column::size() const noexcept {
    return std::visit([](const auto& v) { return v.size(); }, values);
}

std::size_t Column::missing_count() const noexcept {
    return static_cast<std::size_t>(std::count(missing.begin(), missing.end(), std::uint8_t{1}));
}

Column::Values Column::empty_values(Storage storage) {
    switch (storage) {
    case Storage::int64: return std::vector<std::int64_t>{};
    case Storage::float64: return std::vector<double>{};
    case Storage::text: return std::vector<std::string>{};
    case Storage::boolean: return std::vector<std::uint8_t>{};
    }
    return std::vector<double>{};
}

namespace {

bool storage_matches(const Column& c) {
    switch (c.spec.storage) {
    case Storage::int64: return std::holds_alternative<std::vector<std::int64_t>>(c.values);
    case Storage::float64: return std::holds_alternative<std::vector<double>>(c.values);
    case Storage::text: return std::holds_alternative<std::vector<std::string>>(c.values);
    case Storage::boolean: return std::holds_alternative<std::vector<std::uint8_t>>(c.values);
    }
    return false;
}

} // namespace

LogTable::LogTable(std::vector<Column> columns, std::vector<std::uint32_t> labels,
                   std::vector<std::string> class_names)
    : columns_(std::move(columns)), labels_(std::move(labels)), class_names_(std::move(class_names)) {
    std::set<std::string> names;
    for (const auto& c : columns_) {
        if (!names.insert(c.spec.name).second) throw DataError("duplicate column '" + c.spec.name + "'");
        if (!storage_matches(c)) throw DataError("column '" + c.spec.name + "': values do not match storage");
        if (c.size() != labels_.size()) {
            throw DataError("column '" + c.spec.name + "' has " + std::to_string(c.size()) + " values, expected " +
                            std::to_string(labels_.size()));
        }
        if (!c.missing.empty() && c.missing.size() != labels_.size()) {
            throw DataError("column '" + c.spec.name + "': missing-mask length mismatch");
        }
    }
    std::set<std::string> classes(class_names_.begin(), class_names_.end());
    if (classes.size() != class_names_.size()) throw DataError("duplicate class names in table");
    for (auto l : labels_) {
        if (l >= class_names_.size()) throw DataError("label index " + std::to_string(l) + " out of range");
    }
}

const Column* LogTable::column(std::string_view name) const noexcept {
    for (const auto& c : columns_) {
        if (c.spec.name == name) return &c;
    }
    return nullptr;
}

LogTable LogTable::select_rows(const std::vector<std::size_t>& indices) const {
    std::vector<Column> cols;
    cols.reserve(columns_.size());
    for (const auto& c : columns_) {
        Column out{c.spec, Column::empty_values(c.spec.storage), {}};
        std::visit(
            [&](const auto& src) {
                auto& dst = std::get<std::decay_t<decltype(src)>>(out.values);
                dst.reserve(indices.size());
                for (auto i : indices) dst.push_back(src.at(i));
            },
            c.values);
        if (!c.missing.empty()) {
            out.missing.reserve(indices.size());
            for (auto i : indices) out.missing.push_back(c.missing[i]);
        }
        cols.push_back(std::move(out));
    }
    std::vector<std::uint32_t> labels;
    labels.reserve(indices.size());
    for (auto i : indices) labels.push_back(labels_.at(i));
    return LogTable(std::move(cols), std::move(labels), class_names_);
}

std::size_t ValidationReport::count(ValidationIssue::Kind kind) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(issues.begin(), issues.end(), [&](const auto& i) { return i.kind == kind; }));
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& i : issues) {
        if (!out.empty()) out += "; ";
        switch (i.kind) {
        case ValidationIssue::Kind::missing_column: out += "missing column '"; break;
        case ValidationIssue::Kind::type_mismatch: out += "type mismatch in '"; break;
        case ValidationIssue::Kind::unknown_class: out += "unknown class '"; break;
        }
        out += i.subject + "'";
        if (!i.detail.empty()) out += " (" + i.detail + ")";
    }
    return out;
}

ValidationReport validate_table(const LogTable& table, const DatasetProfile& profile) {
    ValidationReport report;
    for (const auto& spec : profile.columns) {
        const Column* c = table.column(spec.name);
        if (!c) {
            report.issues.push_back({ValidationIssue::Kind::missing_column, spec.name, {}});
            continue;
        }
        if (c->spec.kind != spec.kind || c->spec.storage != spec.storage) {
            report.issues.push_back({ValidationIssue::Kind::type_mismatch, spec.name,
                                     std::string("expected ") + to_string(spec.kind) + "/" + to_string(spec.storage) +
                                         ", found " + to_string(c->spec.kind) + "/" + to_string(c->spec.storage)});
        }
    }
    auto counts = label_counts(table.labels(), table.class_names().size());
    for (std::size_t i = 0; i < table.class_names().size(); ++i) {
        const auto& name = table.class_names()[i];
        if (counts[i] > 0 && !profile.classes.find(name)) {
            report.issues.push_back({ValidationIssue::Kind::unknown_class, name, {}});
        }
    }
    return report;
}

std::vector<std::size_t> label_counts(const std::vector<std::uint32_t>& labels, std::size_t class_count) {
    std::vector<std::size_t> counts(class_count, 0);
    for (auto l : labels) ++counts.at(l);
    return counts;
}

std::vector<std::pair<std::string, std::size_t>> class_histogram(const LogTable& table) {
    auto counts = label_counts(table.labels(), table.class_names().size());
    std::vector<std::pair<std::string, std::size_t>> hist;
    hist.reserve(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) hist.emplace_back(table.class_names()[i], counts[i]);
    std::sort(hist.begin(), hist.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return hist;
}

} // namespace hunt
