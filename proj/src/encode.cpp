#include "hunt/encode.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <set>

#include "hunt/error.hpp"

namespace hunt {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

int fixed_int(std::string_view s) {
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

} // namespace

std::uint32_t ipv4_to_u32(std::string_view text) {
    const auto original = text;
    auto fail = [&](const char* why) -> std::uint32_t {
        throw DataError("invalid IPv4 address '" + std::string(original) + "': " + why);
    };
    std::uint32_t result = 0;
    for (int octet = 0; octet < 4; ++octet) {
        const auto dot = text.find('.');
        const auto part = octet < 3 ? text.substr(0, dot) : text;
        if (octet < 3 && dot == std::string_view::npos) return fail("expected four octets");
        if (part.empty() || part.size() > 3 || !all_digits(part)) return fail("octet is not a decimal number");
        const int value = fixed_int(part);
        if (value > 255) return fail("octet out of range");
        result = (result << 8) | static_cast<std::uint32_t>(value);
        if (octet < 3) text.remove_prefix(dot + 1);
    }
    return result;
}

std::string u32_to_ipv4(std::uint32_t value) {
    return std::to_string(value >> 24) + "." + std::to_string((value >> 16) & 0xff) + "." +
           std::to_string((value >> 8) & 0xff) + "." + std::to_string(value & 0xff);
}

double to_epoch(std::string_view text) {
    const auto original = text;
    auto fail = [&]() -> double { throw DataError("unparseable timestamp '" + std::string(original) + "'"); };
    text = trim(text);
    if (text.empty()) return fail();

    double numeric = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), numeric);
    if (ec == std::errc() && end == text.data() + text.size()) {
        if (!std::isfinite(numeric)) return fail();
        return numeric;
    }

    // YYYY-MM-DD
    if (text.size() < 10 || text[4] != '-' || text[7] != '-') return fail();
    if (!all_digits(text.substr(0, 4)) || !all_digits(text.substr(5, 2)) || !all_digits(text.substr(8, 2))) {
        return fail();
    }
    namespace chr = std::chrono;
    const chr::year_month_day date{chr::year{fixed_int(text.substr(0, 4))},
                                   chr::month{static_cast<unsigned>(fixed_int(text.substr(5, 2)))},
                                   chr::day{static_cast<unsigned>(fixed_int(text.substr(8, 2)))}};
    if (!date.ok()) return fail();
    const std::int64_t days = chr::sys_days{date}.time_since_epoch().count();
    text.remove_prefix(10);

    std::int64_t seconds = 0;
    double fraction = 0.0;
    if (!text.empty() && (text.front() == 'T' || text.front() == 't' || text.front() == ' ')) {
        text.remove_prefix(1);
        if (text.size() < 5 || text[2] != ':' || !all_digits(text.substr(0, 2)) || !all_digits(text.substr(3, 2))) {
            return fail();
        }
        const int hh = fixed_int(text.substr(0, 2));
        const int mm = fixed_int(text.substr(3, 2));
        int ss = 0;
        text.remove_prefix(5);
        if (!text.empty() && text.front() == ':') {
            if (text.size() < 3 || !all_digits(text.substr(1, 2))) return fail();
            ss = fixed_int(text.substr(1, 2));
            text.remove_prefix(3);
            if (!text.empty() && (text.front() == '.' || text.front() == ',')) {
                std::size_t n = 1;
                while (n < text.size() && text[n] >= '0' && text[n] <= '9') ++n;
                if (n == 1) return fail();
                const std::string digits = "0." + std::string(text.substr(1, n - 1));
                std::from_chars(digits.data(), digits.data() + digits.size(), fraction);
                text.remove_prefix(n);
            }
        }
        if (hh > 23 || mm > 59 || ss > 59) return fail();
        seconds = hh * 3600 + mm * 60 + ss;
    }

    std::int64_t offset = 0;
    if (!text.empty()) {
        if (text == "Z" || text == "z") {
            text = {};
        } else if (text.front() == '+' || text.front() == '-') {
            const int sign = text.front() == '-' ? -1 : 1;
            auto rest = text.substr(1);
            std::string_view hh;
            std::string_view mm = "00";
            if (rest.size() == 2) {
                hh = rest;
            } else if (rest.size() == 4) {
                hh = rest.substr(0, 2);
                mm = rest.substr(2, 2);
            } else if (rest.size() == 5 && rest[2] == ':') {
                hh = rest.substr(0, 2);
                mm = rest.substr(3, 2);
            } else {
                return fail();
            }
            if (!all_digits(hh) || !all_digits(mm) || fixed_int(hh) > 23 || fixed_int(mm) > 59) return fail();
            offset = sign * (fixed_int(hh) * 3600 + fixed_int(mm) * 60);
            text = {};
        } else {
            return fail();
        }
    }
    return static_cast<double>(days * 86400 + seconds - offset) + fraction;
}

OneHot one_hot(std::span<const std::string> values, std::span<const std::string> categories) {
    OneHot out;
    out.groups.assign(categories.size(), std::vector<double>(values.size(), 0.0));
    for (std::size_t r = 0; r < values.size(); ++r) {
        const auto it = std::find(categories.begin(), categories.end(), values[r]);
        if (it == categories.end()) {
            ++out.unknown;
            continue;
        }
        out.groups[static_cast<std::size_t>(it - categories.begin())][r] = 1.0;
    }
    return out;
}

const char* to_string(ColumnPlan::Kind kind) noexcept {
    switch (kind) {
    case ColumnPlan::Kind::pass_float: return "pass_float";
    case ColumnPlan::Kind::ipv4_pack: return "ipv4_pack";
    case ColumnPlan::Kind::epoch: return "epoch";
    case ColumnPlan::Kind::one_hot: return "one_hot";
    case ColumnPlan::Kind::bool_to_float: return "bool_to_float";
    }
    return "?";
}

namespace {

ColumnPlan::Kind parse_plan_kind(const std::string& text) {
    for (auto k : {ColumnPlan::Kind::pass_float, ColumnPlan::Kind::ipv4_pack, ColumnPlan::Kind::epoch,
                   ColumnPlan::Kind::one_hot, ColumnPlan::Kind::bool_to_float}) {
        if (text == to_string(k)) return k;
    }
    throw DataError("unknown encoding plan '" + text + "'");
}

std::vector<std::string> feature_names_for(const std::vector<ColumnPlan>& plans) {
    std::vector<std::string> names;
    for (const auto& p : plans) {
        if (p.kind == ColumnPlan::Kind::one_hot) {
            for (const auto& c : p.categories) names.push_back(p.source + "=" + c);
        } else {
            names.push_back(p.source);
        }
    }
    return names;
}

} // namespace

nlohmann::json encoding_to_json(const EncodingMap& map) {
    nlohmann::json doc;
    auto& plans = doc["columns"] = nlohmann::json::array();
    for (const auto& p : map.plans) {
        nlohmann::json entry{{"source", p.source}, {"plan", to_string(p.kind)}};
        if (p.kind == ColumnPlan::Kind::one_hot) entry["categories"] = p.categories;
        plans.push_back(std::move(entry));
    }
    doc["features"] = map.feature_names;
    return doc;
}

EncodingMap encoding_from_json(const nlohmann::json& doc) {
    try {
        EncodingMap map;
        for (const auto& entry : doc.at("columns")) {
            ColumnPlan p;
            p.source = entry.at("source").get<std::string>();
            p.kind = parse_plan_kind(entry.at("plan").get<std::string>());
            if (p.kind == ColumnPlan::Kind::one_hot) {
                p.categories = entry.at("categories").get<std::vector<std::string>>();
                if (!std::is_sorted(p.categories.begin(), p.categories.end()) ||
                    std::adjacent_find(p.categories.begin(), p.categories.end()) != p.categories.end()) {
                    throw DataError("encoding: categories of '" + p.source + "' are not sorted and unique");
                }
            }
            map.plans.push_back(std::move(p));
        }
        map.feature_names = doc.at("features").get<std::vector<std::string>>();
        if (map.feature_names != feature_names_for(map.plans)) {
            throw DataError("encoding: feature names do not match column plans");
        }
        return map;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("encoding: ") + e.what());
    }
}

void FeatureMatrix::check() const {
    if (values.size() != rows * cols) throw DataError("feature matrix: value count does not match shape");
    if (labels.size() != rows) throw DataError("feature matrix: label count does not match rows");
    for (auto l : labels) {
        if (l >= class_names.size()) throw DataError("feature matrix: label index out of range");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            throw DataError("feature matrix: non-finite value at row " + std::to_string(i / cols));
        }
    }
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> indices) const {
    FeatureMatrix out;
    out.rows = indices.size();
    out.cols = cols;
    out.class_names = class_names;
    out.values.reserve(indices.size() * cols);
    out.labels.reserve(indices.size());
    for (auto i : indices) {
        const auto r = row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        out.labels.push_back(labels.at(i));
    }
    return out;
}

EncodingMap fit_encoding(const LogTable& table, const DatasetProfile& profile) {
    auto report = validate_table(table, profile);
    report.issues.erase(std::remove_if(report.issues.begin(), report.issues.end(),
                                       [](const auto& i) { return i.kind == ValidationIssue::Kind::unknown_class; }),
                        report.issues.end());
    if (!report.ok()) throw DataError("table does not match profile '" + profile.name + "': " + report.summary());

    EncodingMap map;
    for (const auto& spec : profile.columns) {
        ColumnPlan plan;
        plan.source = spec.name;
        switch (spec.kind) {
        case ColumnKind::numeric: plan.kind = ColumnPlan::Kind::pass_float; break;
        case ColumnKind::ipv4: plan.kind = ColumnPlan::Kind::ipv4_pack; break;
        case ColumnKind::timestamp: plan.kind = ColumnPlan::Kind::epoch; break;
        case ColumnKind::boolean: plan.kind = ColumnPlan::Kind::bool_to_float; break;
        case ColumnKind::categorical: {
            plan.kind = ColumnPlan::Kind::one_hot;
            const auto& texts = table.column(spec.name)->texts();
            std::set<std::string> unique(texts.begin(), texts.end());
            plan.categories.assign(unique.begin(), unique.end());
            break;
        }
        }
        map.plans.push_back(std::move(plan));
    }
    map.feature_names = feature_names_for(map.plans);
    return map;
}

FeatureMatrix apply_encoding(const LogTable& table, const EncodingMap& map, EncodeStats* stats) {
    FeatureMatrix m;
    m.rows = table.row_count();
    m.cols = map.width();
    m.values.assign(m.rows * m.cols, 0.0);
    m.labels = table.labels();
    m.class_names = table.class_names();
    EncodeStats local;

    std::size_t out_col = 0;
    auto put = [&](std::size_t r, double v) { m.values[r * m.cols + out_col] = v; };
    auto mismatch = [](const ColumnPlan& p, const Column& c) {
        return DataError(std::string("column '") + p.source + "': storage " + to_string(c.spec.storage) +
                         " cannot be encoded with " + to_string(p.kind));
    };

    for (const auto& plan : map.plans) {
        const Column* col = table.column(plan.source);
        if (!col) throw DataError("encoding needs column '" + plan.source + "', which the table lacks");
        for (std::size_t r = 0; r < m.rows && plan.kind != ColumnPlan::Kind::one_hot; ++r) {
            if (col->is_missing(r)) ++local.missing_values;
        }
        switch (plan.kind) {
        case ColumnPlan::Kind::pass_float:
            if (col->spec.storage == Storage::int64) {
                const auto& v = col->int64s();
                for (std::size_t r = 0; r < m.rows; ++r) put(r, col->is_missing(r) ? 0.0 : static_cast<double>(v[r]));
            } else if (col->spec.storage == Storage::float64) {
                const auto& v = col->float64s();
                for (std::size_t r = 0; r < m.rows; ++r) put(r, col->is_missing(r) ? 0.0 : v[r]);
            } else {
                throw mismatch(plan, *col);
            }
            ++out_col;
            break;
        case ColumnPlan::Kind::ipv4_pack: {
            if (col->spec.storage != Storage::text) throw mismatch(plan, *col);
            const auto& v = col->texts();
            for (std::size_t r = 0; r < m.rows; ++r) {
                put(r, col->is_missing(r) ? 0.0 : static_cast<double>(ipv4_to_u32(v[r])));
            }
            ++out_col;
            break;
        }
        case ColumnPlan::Kind::epoch:
            if (col->spec.storage == Storage::text) {
                const auto& v = col->texts();
                for (std::size_t r = 0; r < m.rows; ++r) put(r, col->is_missing(r) ? 0.0 : to_epoch(v[r]));
            } else if (col->spec.storage == Storage::float64) {
                const auto& v = col->float64s();
                for (std::size_t r = 0; r < m.rows; ++r) put(r, col->is_missing(r) ? 0.0 : to_epoch(v[r]));
            } else if (col->spec.storage == Storage::int64) {
                const auto& v = col->int64s();
                for (std::size_t r = 0; r < m.rows; ++r) put(r, col->is_missing(r) ? 0.0 : static_cast<double>(v[r]));
            } else {
                throw mismatch(plan, *col);
            }
            ++out_col;
            break;
        case ColumnPlan::Kind::bool_to_float: {
            if (col->spec.storage != Storage::boolean) throw mismatch(plan, *col);
            const auto& v = col->bools();
            for (std::size_t r = 0; r < m.rows; ++r) put(r, (!col->is_missing(r) && v[r]) ? 1.0 : 0.0);
            ++out_col;
            break;
        }
        case ColumnPlan::Kind::one_hot: {
            if (col->spec.storage != Storage::text) throw mismatch(plan, *col);
            const auto encoded = one_hot(col->texts(), plan.categories);
            local.unknown_categories += encoded.unknown;
            for (const auto& group : encoded.groups) {
                for (std::size_t r = 0; r < m.rows; ++r) put(r, group[r]);
                ++out_col;
            }
            break;
        }
        }
    }

    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (!std::isfinite(m.values[i])) {
            throw DataError("row " + std::to_string(i / m.cols) + " produced a non-finite value in feature '" +
                            map.feature_names[i % m.cols] + "'");
        }
    }
    if (stats) *stats = local;
    return m;
}

Encoded encode_table(const LogTable& table, const DatasetProfile& profile) {
    Encoded out;
    out.map = fit_encoding(table, profile);
    out.matrix = apply_encoding(table, out.map, &out.stats);
    return out;
}

LogTable amalgamate_binary(const LogTable& table, std::span<const std::string> benign_names) {
    if (benign_names.empty()) throw DataError("amalgamation needs at least one benign class name");
    std::vector<std::uint8_t> benign(table.class_names().size(), 0);
    for (const auto& name : benign_names) {
        const auto& names = table.class_names();
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw DataError("benign class '" + name + "' is not a class of the table");
        benign[static_cast<std::size_t>(it - names.begin())] = 1;
    }
    std::vector<std::uint32_t> labels;
    labels.reserve(table.row_count());
    for (auto l : table.labels()) labels.push_back(benign[l] ? 0U : 1U);
    return LogTable(table.columns(), std::move(labels), {kBinaryBenign, kBinaryMalicious});
}

} // namespace hunt
