#include "cbd/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "cbd/random.hpp"

namespace cbd {

namespace {

using nlohmann::json;

[[noreturn]] void row_error(std::size_t row, std::string_view field, const std::string& why) {
    std::ostringstream os;
    os << "row " << row;
    if (!field.empty()) os << ", field '" << field << "'";
    os << ": " << why;
    throw DataError(os.str());
}

std::optional<std::uint64_t> parse_count_text(std::string_view text) {
    std::uint64_t v = 0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || text.empty()) return std::nullopt;
    return v;
}

std::uint64_t count_from_text(std::string_view text, std::size_t row, std::string_view field) {
    if (text.empty()) row_error(row, field, "missing value");
    if (text.front() == '-') row_error(row, field, "negative count '" + std::string(text) + "'");
    auto v = parse_count_text(text);
    if (!v) row_error(row, field, "not a non-negative integer: '" + std::string(text) + "'");
    return *v;
}

std::uint64_t count_from_json(const json& j, std::size_t row, std::string_view field) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        row_error(row, field, "negative count " + std::to_string(j.get<std::int64_t>()));
    }
    if (j.is_number_float()) {
        const double d = j.get<double>();
        if (!std::isfinite(d) || d < 0 || d != std::floor(d) || d > 1.8e19) {
            row_error(row, field, "not a non-negative integer: " + j.dump());
        }
        return static_cast<std::uint64_t>(d);
    }
    if (j.is_string()) return count_from_text(j.get<std::string>(), row, field);
    row_error(row, field, "expected a count, got " + std::string(j.type_name()));
}

Label label_from_text(std::string_view text, std::size_t row) {
    if (text == "1" || text == "clickbait") return Label::Clickbait;
    if (text == "0" || text == "non_clickbait" || text == "non-clickbait") return Label::NonClickbait;
    row_error(row, "label", "expected 0 or 1, got '" + std::string(text) + "'");
}

Label label_from_json(const json& j, std::size_t row) {
    if (j.is_number_integer() || j.is_number_unsigned()) {
        const auto v = j.get<std::int64_t>();
        if (v == 0) return Label::NonClickbait;
        if (v == 1) return Label::Clickbait;
    }
    if (j.is_string()) return label_from_text(j.get<std::string>(), row);
    row_error(row, "label", "expected 0 or 1, got " + j.dump());
}

void validate(const VideoRecord& r, std::size_t row) {
    if (r.video_id.empty()) row_error(row, "video_id", "empty video id");
    if (r.title.empty()) row_error(row, "title", "empty title");
}

std::string string_field(const json& obj, std::string_view key, std::size_t row, bool required) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) row_error(row, key, "missing");
        return {};
    }
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number()) return it->dump();
    row_error(row, key, "expected a string");
}

VideoMetadata metadata_from_json(const json& obj, std::size_t row) {
    if (!obj.is_object()) row_error(row, "", "expected a JSON object");
    VideoMetadata m;
    m.video_id = string_field(obj, "video_id", row, true);
    m.title = string_field(obj, "title", row, true);
    m.description = string_field(obj, "description", row, false);
    auto count = [&](std::string_view key) -> std::uint64_t {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) row_error(row, key, "missing");
        return count_from_json(*it, row, key);
    };
    m.view_count = count("view_count");
    m.like_count = count("like_count");
    m.dislike_count = count("dislike_count");
    m.subscriber_count = count("subscriber_count");
    if (auto it = obj.find("comment_count"); it != obj.end() && !it->is_null() &&
                                             !(it->is_string() && it->get<std::string>().empty())) {
        m.comment_count = count_from_json(*it, row, "comment_count");
    }
    return m;
}

VideoRecord record_from_json(const json& obj, std::size_t row) {
    VideoRecord r;
    static_cast<VideoMetadata&>(r) = metadata_from_json(obj, row);
    auto it = obj.find("label");
    if (it == obj.end() || it->is_null()) row_error(row, "label", "missing");
    r.label = label_from_json(*it, row);
    validate(r, row);
    return r;
}

// RFC 4180 reader: quoted fields may contain separators, quotes ("") and newlines.
std::vector<std::vector<std::string>> read_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_row = [&] {
        end_field();
        const bool blank = row.size() == 1 && row[0].empty();
        if (!blank) rows.push_back(std::move(row));
        row.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field_started && !field.empty()) {
                    throw DataError("csv line " + std::to_string(line) + ": stray quote");
                }
                quoted = true;
                field_started = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                ++line;
                end_row();
                break;
            default:
                field.push_back(c);
                field_started = true;
        }
    }
    if (quoted) throw DataError("csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

std::string csv_escape(std::string_view s) {
    const bool needs = s.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs) return std::string(s);
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

Dataset parse_jsonl(std::string_view content) {
    Dataset d;
    std::size_t row = 0;
    std::size_t pos = 0;
    while (pos <= content.size()) {
        auto nl = content.find('\n', pos);
        if (nl == std::string_view::npos) nl = content.size();
        std::string_view line = content.substr(pos, nl - pos);
        pos = nl + 1;
        ++row;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            row_error(row, "", std::string("malformed JSON: ") + e.what());
        }
        d.records.push_back(record_from_json(obj, row));
    }
    return d;
}

Dataset parse_csv(std::string_view content) {
    auto rows = read_csv(content);
    if (rows.empty()) throw DataError("empty dataset");
    const auto& header = rows.front();
    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(header[i], i);
    for (auto name : kRecordFields) {
        if (name == "comment_count" || name == "description") continue;
        if (!column.contains(name)) {
            throw DataError("csv header: missing column '" + std::string(name) + "'");
        }
    }

    Dataset d;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        const std::size_t row = r;
        if (cells.size() != header.size()) {
            row_error(row, "", "expected " + std::to_string(header.size()) + " cells, got " +
                                   std::to_string(cells.size()));
        }
        auto cell = [&](std::string_view name) -> std::optional<std::string_view> {
            auto it = column.find(name);
            if (it == column.end()) return std::nullopt;
            return std::string_view(cells[it->second]);
        };
        VideoRecord rec;
        rec.video_id = std::string(*cell("video_id"));
        rec.title = std::string(*cell("title"));
        rec.description = std::string(cell("description").value_or(""));
        rec.view_count = count_from_text(*cell("view_count"), row, "view_count");
        rec.like_count = count_from_text(*cell("like_count"), row, "like_count");
        rec.dislike_count = count_from_text(*cell("dislike_count"), row, "dislike_count");
        rec.subscriber_count = count_from_text(*cell("subscriber_count"), row, "subscriber_count");
        if (auto c = cell("comment_count"); c && !c->empty()) {
            rec.comment_count = count_from_text(*c, row, "comment_count");
        }
        rec.label = label_from_text(*cell("label"), row);
        validate(rec, row);
        d.records.push_back(std::move(rec));
    }
    return d;
}

}  // namespace

DataFormat parse_format(std::string_view name) {
    if (name == "csv") return DataFormat::Csv;
    if (name == "jsonl" || name == "json") return DataFormat::Jsonl;
    throw UsageError("unknown format '" + std::string(name) + "' (expected csv or jsonl)");
}

DataFormat format_from_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? DataFormat::Csv : DataFormat::Jsonl;
}

Dataset parse_dataset(std::string_view content, DataFormat format, std::string source) {
    Dataset d = format == DataFormat::Csv ? parse_csv(content) : parse_jsonl(content);
    if (d.empty()) throw DataError("empty dataset" + (source.empty() ? "" : ": " + source));
    std::unordered_set<std::string_view> seen;
    for (std::size_t i = 0; i < d.records.size(); ++i) {
        if (!seen.insert(d.records[i].video_id).second) {
            throw DataError("duplicate video_id '" + d.records[i].video_id + "' (record " +
                            std::to_string(i + 1) + ")");
        }
    }
    d.source_path = std::move(source);
    return d;
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_dataset(buf.str(), format, path.string());
}

std::string serialize_dataset(const Dataset& d, DataFormat format) {
    std::ostringstream os;
    if (format == DataFormat::Jsonl) {
        for (const auto& r : d.records) {
            json obj = json::object();
            obj["video_id"] = r.video_id;
            obj["title"] = r.title;
            obj["description"] = r.description;
            obj["view_count"] = r.view_count;
            obj["like_count"] = r.like_count;
            obj["dislike_count"] = r.dislike_count;
            obj["comment_count"] = r.comment_count ? json(*r.comment_count) : json(nullptr);
            obj["subscriber_count"] = r.subscriber_count;
            obj["label"] = to_int(r.label);
            os << obj.dump() << '\n';
        }
        return os.str();
    }
    for (std::size_t i = 0; i < kRecordFields.size(); ++i) {
        os << (i ? "," : "") << kRecordFields[i];
    }
    os << '\n';
    for (const auto& r : d.records) {
        os << csv_escape(r.video_id) << ',' << csv_escape(r.title) << ','
           << csv_escape(r.description) << ',' << r.view_count << ',' << r.like_count << ','
           << r.dislike_count << ',';
        if (r.comment_count) os << *r.comment_count;
        os << ',' << r.subscriber_count << ',' << to_int(r.label) << '\n';
    }
    return os.str();
}

void save_dataset(const Dataset& d, const std::filesystem::path& path, DataFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << serialize_dataset(d, format);
}

// ---------------------------------------------------------------------------

std::size_t utf8_length(std::string_view s) noexcept {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

StatsTable dataset_stats(const Dataset& d) {
    if (d.empty()) throw DataError("dataset_stats: empty dataset");

    using Getter = double (*)(const VideoRecord&);
    const std::pair<const char*, Getter> items[] = {
        {"Title length", [](const VideoRecord& r) { return double(utf8_length(r.title)); }},
        {"Description length",
         [](const VideoRecord& r) { return double(utf8_length(r.description)); }},
        {"View count", [](const VideoRecord& r) { return double(r.view_count); }},
        {"Comment count", [](const VideoRecord& r) { return double(r.comment_count.value_or(0)); }},
        {"Like count", [](const VideoRecord& r) { return double(r.like_count); }},
        {"Subscriber count", [](const VideoRecord& r) { return double(r.subscriber_count); }},
        {"Dislike count", [](const VideoRecord& r) { return double(r.dislike_count); }},
    };

    StatsTable t;
    t.records = d.size();
    for (const auto& [name, get] : items) {
        StatsRow row{name, std::numeric_limits<double>::infinity(), 0.0,
                     -std::numeric_limits<double>::infinity()};
        // Exact integer sums; counts fit comfortably in 128 bits.
        unsigned __int128 sum = 0;
        for (const auto& r : d.records) {
            const double v = get(r);
            row.min = std::min(row.min, v);
            row.max = std::max(row.max, v);
            sum += static_cast<unsigned __int128>(v);
        }
        const auto n = static_cast<unsigned __int128>(d.size());
        const auto whole = sum / n;
        const auto rem = sum % n;
        row.mean = static_cast<double>(whole) +
                   static_cast<double>(rem) / static_cast<double>(d.size());
        t.rows.push_back(std::move(row));
    }
    return t;
}

namespace {

std::string with_thousands(double v) {
    char buf[64];
    if (v == std::floor(v) && std::fabs(v) < 1e18) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.2f", v);
    }
    std::string s = buf;
    auto dot = s.find('.');
    std::string intpart = s.substr(0, dot);
    std::string frac = dot == std::string::npos ? "" : s.substr(dot);
    std::string out;
    const int len = static_cast<int>(intpart.size());
    for (int i = 0; i < len; ++i) {
        out.push_back(intpart[i]);
        const int left = len - i - 1;
        if (left > 0 && left % 3 == 0 && intpart[i] != '-') out.push_back(',');
    }
    return out + frac;
}

}  // namespace

std::string render_stats(const StatsTable& t) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-20s %16s %20s %18s\n", "Data Item", "Min", "Mean", "Max");
    os << line;
    for (const auto& r : t.rows) {
        std::snprintf(line, sizeof line, "%-20s %16s %20s %18s\n", r.item.c_str(),
                      with_thousands(r.min).c_str(), with_thousands(r.mean).c_str(),
                      with_thousands(r.max).c_str());
        os << line;
    }
    return os.str();
}

// ---------------------------------------------------------------------------

std::size_t round_half_up(double x) noexcept {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

Split split_dataset(const Dataset& d, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw UsageError("test fraction must lie in (0, 1)");
    }
    const std::size_t n = d.size();
    const std::size_t test_total = round_half_up(spec.test_fraction * static_cast<double>(n));
    Rng rng(spec.seed);

    std::vector<bool> in_test(n, false);
    if (!spec.stratified) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(std::span(idx));
        for (std::size_t i = 0; i < test_total; ++i) in_test[idx[i]] = true;
    } else {
        std::array<std::vector<std::size_t>, 2> by_class;
        for (std::size_t i = 0; i < n; ++i) by_class[to_int(d.records[i].label)].push_back(i);
        if (by_class[0].empty() || by_class[1].empty()) {
            throw DataError("stratified split needs both classes present");
        }
        // Largest remainder; ties go to the lower class id.
        std::array<std::size_t, 2> quota{};
        std::array<double, 2> remainder{};
        std::size_t assigned = 0;
        for (int c = 0; c < 2; ++c) {
            const double exact = spec.test_fraction * static_cast<double>(by_class[c].size());
            quota[c] = static_cast<std::size_t>(std::floor(exact));
            remainder[c] = exact - std::floor(exact);
            assigned += quota[c];
        }
        std::size_t extra = test_total > assigned ? test_total - assigned : 0;
        std::array<int, 2> order = {0, 1};
        if (remainder[1] > remainder[0]) order = {1, 0};
        for (int c : order) {
            if (extra == 0) break;
            if (quota[c] < by_class[c].size()) {
                ++quota[c];
                --extra;
            }
        }
        for (int c = 0; c < 2; ++c) {
            rng.shuffle(std::span(by_class[c]));
            for (std::size_t i = 0; i < quota[c]; ++i) in_test[by_class[c][i]] = true;
        }
    }

    Split s;
    s.train.source_path = d.source_path;
    s.test.source_path = d.source_path;
    for (std::size_t i = 0; i < n; ++i) {
        (in_test[i] ? s.test : s.train).records.push_back(d.records[i]);
    }
    return s;
}

// ---------------------------------------------------------------------------

TransportError::TransportError(std::string video_id, const std::string& what)
    : Error("fetch '" + video_id + "': " + what), video_id_(std::move(video_id)) {}

FixtureTransport::FixtureTransport(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) {
        throw DataError("fixture directory not found: " + dir_.string());
    }
}

std::optional<VideoMetadata> FixtureTransport::fetch(const std::string& video_id) {
    if (video_id.empty() || video_id.find_first_of("/\\") != std::string::npos ||
        video_id == "." || video_id == "..") {
        throw TransportError(video_id, "invalid video id");
    }
    const auto file = dir_ / (video_id + ".json");
    if (!std::filesystem::exists(file)) return std::nullopt;
    std::ifstream in(file, std::ios::binary);
    if (!in) throw TransportError(video_id, "cannot read " + file.string());
    try {
        json obj = json::parse(in);
        VideoMetadata m = metadata_from_json(obj, 1);
        if (m.video_id != video_id) throw TransportError(video_id, "fixture id mismatch");
        return m;
    } catch (const json::exception& e) {
        throw TransportError(video_id, e.what());
    } catch (const DataError& e) {
        throw TransportError(video_id, e.what());
    }
}

FetchResult fetch_metadata(const std::vector<std::string>& ids, MetadataTransport& transport) {
    FetchResult out;
    for (const auto& id : ids) {
        if (auto m = transport.fetch(id)) {
            out.records.push_back(std::move(*m));
        } else {
            out.unresolved.push_back(id);
        }
    }
    return out;
}

std::optional<std::string> api_key_from_env() {
    const char* key = std::getenv("CBD_API_KEY");
    if (key == nullptr || *key == '\0') return std::nullopt;
    return std::string(key);
}

}  // namespace cbd
