#include <charconv>
#include <map>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/eval.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::eval {

namespace {

struct RawRow {
    std::string where;  // "line N" or "element N"
    std::string video_id;
    std::string dtype;
    std::optional<int> errors, covered, total;
    int rater = 1;
};

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::LabelSchemaError, fmt::format("{}: {}", where, what));
}

std::optional<int> parse_count(const std::string& where, const std::string& field, std::string_view raw) {
    const auto s = util::trim(raw);
    if (s.empty()) return std::nullopt;
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) schema_error(where, fmt::format("{} '{}' is not an integer", field, s));
    if (v < 0) schema_error(where, fmt::format("{} must be >= 0", field));
    return v;
}

/// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(std::string_view line, const std::string& where) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) schema_error(where, "unterminated quote");
    out.push_back(std::move(cur));
    return out;
}

std::vector<VideoLabels> merge(const std::vector<RawRow>& rows) {
    std::map<std::pair<std::string, DescriptionType>, std::size_t> slot;
    std::set<std::tuple<std::string, DescriptionType, int>> seen;
    std::vector<VideoLabels> out;
    for (const auto& r : rows) {
        if (r.video_id.empty()) schema_error(r.where, "video_id is empty");
        const auto type = parse_description_type(r.dtype);
        if (!type) schema_error(r.where, fmt::format("unknown dtype '{}'", r.dtype));
        if (r.rater != 1 && r.rater != 2) schema_error(r.where, fmt::format("rater must be 1 or 2, got {}", r.rater));
        if (r.covered.has_value() != r.total.has_value()) schema_error(r.where, "covered and total must be given together");
        if (r.total && *r.total < 1) schema_error(r.where, "total must be >= 1");
        if (r.covered && *r.covered > *r.total) schema_error(r.where, "covered exceeds total");
        if (!seen.insert({r.video_id, *type, r.rater}).second)
            schema_error(r.where, fmt::format("duplicate row for {} / {} / rater {}", r.video_id, r.dtype, r.rater));

        const auto key = std::make_pair(r.video_id, *type);
        auto it = slot.find(key);
        if (it == slot.end()) {
            it = slot.emplace(key, out.size()).first;
            VideoLabels l;
            l.video_id = r.video_id;
            l.type = *type;
            out.push_back(l);
        }
        auto& l = out[it->second];
        if (r.rater == 1) {
            l.errors = r.errors;
            l.covered = r.covered;
            l.total = r.total;
        } else {
            if (!r.errors) schema_error(r.where, "second-rater row needs an error count");
            l.second_rater_errors = r.errors;
        }
    }
    return out;
}

}  // namespace

std::vector<VideoLabels> parse_labels_csv(std::string_view text) {
    std::vector<RawRow> rows;
    std::map<std::string, std::size_t> col;
    std::size_t start = 0;
    int line_no = 0;
    bool have_header = false;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        ++line_no;
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (util::trim(line).empty() || util::trim(line).front() == '#') continue;
        const std::string where = fmt::format("line {}", line_no);
        auto fields = split_csv(line, where);
        if (!have_header) {
            for (std::size_t i = 0; i < fields.size(); ++i) col[util::to_lower(util::trim(fields[i]))] = i;
            for (const char* required : {"video_id", "dtype", "errors", "covered", "total"})
                if (!col.count(required)) schema_error(where, fmt::format("header lacks column '{}'", required));
            have_header = true;
            continue;
        }
        if (fields.size() != col.size())
            schema_error(where, fmt::format("expected {} fields, found {}", col.size(), fields.size()));
        RawRow r;
        r.where = where;
        r.video_id = util::trim(fields[col["video_id"]]);
        r.dtype = util::trim(fields[col["dtype"]]);
        r.errors = parse_count(where, "errors", fields[col["errors"]]);
        r.covered = parse_count(where, "covered", fields[col["covered"]]);
        r.total = parse_count(where, "total", fields[col["total"]]);
        if (col.count("rater")) r.rater = parse_count(where, "rater", fields[col["rater"]]).value_or(1);
        rows.push_back(std::move(r));
    }
    return merge(rows);
}

std::vector<VideoLabels> parse_labels_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        schema_error("json", e.what());
    }
    if (j.is_object() && j.contains("labels")) j = j.at("labels");
    if (!j.is_array()) schema_error("json", "expected an array of label rows");
    std::vector<RawRow> rows;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        RawRow r;
        r.where = fmt::format("element {}", i);
        if (!e.is_object()) schema_error(r.where, "expected an object");
        auto str = [&](const char* key) -> std::string {
            if (!e.contains(key) || !e.at(key).is_string()) schema_error(r.where, fmt::format("'{}' must be a string", key));
            return e.at(key).get<std::string>();
        };
        auto count = [&](const char* key) -> std::optional<int> {
            if (!e.contains(key) || e.at(key).is_null()) return std::nullopt;
            if (!e.at(key).is_number_integer()) schema_error(r.where, fmt::format("'{}' must be an integer", key));
            const int v = e.at(key).get<int>();
            if (v < 0) schema_error(r.where, fmt::format("'{}' must be >= 0", key));
            return v;
        };
        r.video_id = str("video_id");
        r.dtype = str("dtype");
        r.errors = count("errors");
        r.covered = count("covered");
        r.total = count("total");
        r.rater = count("rater").value_or(1);
        rows.push_back(std::move(r));
    }
    return merge(rows);
}

std::vector<VideoLabels> load_labels(const std::filesystem::path& path) {
    std::string text;
    try {
        text = util::read_file(path);
    } catch (const Error&) {
        throw Error(ErrorCode::LabelSchemaError, "cannot read labels file " + path.string());
    }
    const auto first = util::trim(text);
    if (util::to_lower(path.extension().string()) == ".json" || (!first.empty() && (first[0] == '[' || first[0] == '{')))
        return parse_labels_json(text);
    return parse_labels_csv(text);
}

}  // namespace shortscribe::eval
