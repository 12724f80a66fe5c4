#include "hunt/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hunt/error.hpp"
#include "text.hpp"

namespace hunt {

namespace {

constexpr double kPresetSeparation = 6.0;

using Counts = std::vector<std::pair<std::string, std::size_t>>;

// Published UWF-2022 counts shrunk so the largest class has 10,000 rows;
// classes at or below that size keep their exact count.
const Counts& uwf_counts() {
    static const Counts counts = [] {
        const Counts published = {{"Benign traffic", 9281599},     {"Reconnaissance", 9278722},
                                  {"Discovery", 2086},             {"Credential Access", 31},
                                  {"Privilege Escalation", 13},    {"Exfiltration", 7},
                                  {"Lateral Movement", 4},         {"Resource Development", 3},
                                  {"Defense Evasion", 1},          {"Initial Access", 1},
                                  {"Persistence", 1}};
        constexpr double kLargest = 9281599.0;
        constexpr std::size_t kCap = 10000;
        Counts out;
        for (const auto& [name, n] : published) {
            const auto scaled = n <= kCap ? n
                                          : static_cast<std::size_t>(std::llround(static_cast<double>(n) * kCap / kLargest));
            out.emplace_back(name, scaled);
        }
        return out;
    }();
    return counts;
}

// Published CIC-IDS2017 counts; classes the golden plan undersamples keep
// only 5% headroom over their target.
const Counts& cic_counts() {
    static const Counts counts = [] {
        const Counts published = {{"Benign", 2273097},
                                  {"DoS Hulk", 231073},
                                  {"PortScan", 158930},
                                  {"DDoS", 128027},
                                  {"DoS GoldenEye", 10293},
                                  {"FTP-Patator", 7938},
                                  {"SSH-Patator", 5897},
                                  {"DoS slowloris", 5796},
                                  {"DoS Slowhttptest", 5499},
                                  {"Bot", 1966},
                                  {"Web Attack Brute Force", 1507},
                                  {"Web Attack XSS", 652},
                                  {"Infiltration", 36},
                                  {"Web Attack Sql Injection", 21},
                                  {"Heartbleed", 11}};
        const auto& plan = *golden_plan("cicids2017");
        Counts out;
        for (const auto& [name, n] : published) {
            std::size_t count = n;
            if (const auto it = plan.under_targets.find(name); it != plan.under_targets.end()) {
                count = std::min(n, static_cast<std::size_t>(std::ceil(1.05 * static_cast<double>(it->second))));
            }
            out.emplace_back(name, count);
        }
        return out;
    }();
    return counts;
}

// TON_IoT experiment counts divided by ten.
const Counts& ton_counts() {
    static const Counts counts = {{"Benign", 30000},   {"Scanning", 2000}, {"DoS", 2000},
                                  {"Injection", 2000}, {"Ddos", 2000},     {"Password", 2000},
                                  {"Xss", 2000},       {"Ransomware", 2000}, {"Backdoor", 2000},
                                  {"Mitm", 104}};
    return counts;
}

const Counts& demo_counts() {
    static const Counts counts = {{"Benign", 1200}, {"Scanning", 400}, {"DoS", 300},     {"Password", 150},
                                  {"Xss", 60},      {"Mitm", 8},       {"Backdoor", 1}};
    return counts;
}

const char* preset_profile(const std::string& name) {
    if (name == "uwf2022") return "uwf2022";
    if (name == "cicids2017") return "cicids2017";
    return "toniot";
}

SynthSpec spec_for(const DatasetProfile& profile, const Counts& counts, std::uint64_t seed, double separation,
                   double spread) {
    SynthSpec spec;
    spec.feature_columns = profile.columns;
    spec.seed = seed;
    const auto dim = spec.numeric_dimension();
    for (std::size_t k = 0; k < counts.size(); ++k) {
        spec.classes.push_back({counts[k].first, counts[k].second, default_center(k, dim, separation), spread});
    }
    return spec;
}

} // namespace

std::vector<std::pair<std::string, std::size_t>> preset_counts(const std::string& name) {
    if (name == "uwf2022") return uwf_counts();
    if (name == "cicids2017") return cic_counts();
    if (name == "toniot") return ton_counts();
    if (name == "demo") return demo_counts();
    throw UsageError("unknown synth preset '" + name + "'");
}

std::vector<double> default_center(std::size_t class_index, std::size_t dimension, double separation) {
    std::vector<double> c(dimension);
    for (std::size_t d = 0; d < dimension; ++d) {
        c[d] = separation * static_cast<double>((class_index * (d + 1)) % (class_index + d + 2));
    }
    if (dimension > 0) c[0] = separation * static_cast<double>(class_index);
    return c;
}

bool is_synth_preset(const std::string& name) noexcept {
    return name == "uwf2022" || name == "cicids2017" || name == "toniot" || name == "demo";
}

SynthRecipe synth_preset(const std::string& name, std::uint64_t seed) {
    const auto counts = preset_counts(name);
    const auto& profile = *find_builtin_profile(preset_profile(name));
    return {profile.name, spec_for(profile, counts, seed, kPresetSeparation, 1.0)};
}

SynthRecipe parse_synth_recipe(std::string_view text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw DataError("synth recipe: expected a JSON object");
    try {
        SynthRecipe recipe;
        recipe.profile = doc.value("profile", std::string("toniot"));
        const auto profile = load_profile(recipe.profile);
        const double separation = doc.value("separation", kPresetSeparation);
        const double spread = doc.value("spread", 1.0);
        Counts counts;
        for (const auto& c : doc.at("classes")) counts.emplace_back(c.at("name").get<std::string>(), c.at("count").get<std::size_t>());
        recipe.spec = spec_for(profile, counts, doc.value("seed", std::uint64_t{0}), separation, spread);
        const auto& classes = doc.at("classes");
        for (std::size_t k = 0; k < classes.size(); ++k) {
            auto& cls = recipe.spec.classes[k];
            if (!profile.classes.find(cls.name)) {
                throw DataError("synth recipe: class '" + cls.name + "' is not in profile '" + profile.name + "'");
            }
            if (classes[k].contains("center")) cls.center = classes[k].at("center").get<std::vector<double>>();
            if (classes[k].contains("spread")) cls.spread = classes[k].at("spread").get<double>();
        }
        recipe.spec.validate();
        return recipe;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("synth recipe: ") + e.what());
    }
}

SynthRecipe load_synth_recipe(const std::string& name_or_path, std::uint64_t seed) {
    if (is_synth_preset(name_or_path) && !std::filesystem::exists(name_or_path)) {
        return synth_preset(name_or_path, seed);
    }
    std::ifstream in(name_or_path);
    if (!in) throw IoError("cannot open synth recipe '" + name_or_path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    auto recipe = parse_synth_recipe(ss.str());
    recipe.spec.seed = seed;
    return recipe;
}

LogTable conform_to_profile(const LogTable& table, const DatasetProfile& profile) {
    std::vector<std::uint32_t> remap(table.class_names().size());
    for (std::size_t k = 0; k < remap.size(); ++k) {
        const auto idx = profile.classes.find(table.class_names()[k]);
        if (!idx) {
            throw DataError("class '" + table.class_names()[k] + "' is not in profile '" + profile.name + "'");
        }
        remap[k] = static_cast<std::uint32_t>(*idx);
    }
    std::vector<std::uint32_t> labels;
    labels.reserve(table.row_count());
    for (auto l : table.labels()) labels.push_back(remap[l]);
    return LogTable(table.columns(), std::move(labels), profile.classes.names());
}

Prepared prepare(const LogTable& table, const DatasetProfile& profile, bool binary, std::size_t min_class_size) {
    Prepared out;
    LogTable source = binary ? amalgamate_binary(table, profile.classes.benign_names()) : table;
    auto [kept, removed] = remove_small_classes(source, min_class_size);
    out.removed_classes = std::move(removed);
    auto encoded = encode_table(kept, profile);
    out.matrix = std::move(encoded.matrix);
    out.encoding = std::move(encoded.map);
    out.stats = encoded.stats;
    return out;
}

Ingested read_inputs(const std::vector<std::filesystem::path>& inputs, const DatasetProfile& profile) {
    if (inputs.empty()) throw UsageError("at least one --input is required");
    std::vector<LogTable> tables;
    Ingested out;
    for (const auto& path : inputs) {
        auto part = read_table(path, profile);
        out.skips.skipped_rows += part.skips.skipped_rows;
        for (auto& s : part.skips.samples) {
            if (out.skips.samples.size() < 10) out.skips.samples.push_back(path.string() + ": " + s);
        }
        tables.push_back(std::move(part.table));
    }
    out.table = tables.size() == 1 ? std::move(tables.front()) : collate(tables);
    return out;
}

void write_matrix_csv(const FeatureMatrix& matrix, const EncodingMap& encoding, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    std::vector<std::string> fields = encoding.feature_names;
    if (fields.size() != matrix.cols) throw DataError("matrix width does not match the encoding");
    fields.push_back("label");
    write_csv_record(out, fields);
    for (std::size_t r = 0; r < matrix.rows; ++r) {
        for (std::size_t c = 0; c < matrix.cols; ++c) fields[c] = text::format_double(matrix.at(r, c));
        fields.back() = matrix.class_names[matrix.labels[r]];
        write_csv_record(out, fields);
    }
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace hunt
