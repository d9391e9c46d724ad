#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cbd/error.hpp"

namespace cbd {

enum class Label : std::uint8_t { NonClickbait = 0, Clickbait = 1 };

constexpr int to_int(Label l) noexcept { return static_cast<int>(l); }

/// Everything known about a video except its label. This is what a metadata
/// transport returns.
struct VideoMetadata {
    std::string video_id;
    std::string title;
    std::string description;
    std::uint64_t view_count = 0;
    std::uint64_t like_count = 0;
    std::uint64_t dislike_count = 0;
    /// Absent when the uploader disabled comments; distinct from zero.
    std::optional<std::uint64_t> comment_count;
    std::uint64_t subscriber_count = 0;
};

struct VideoRecord : VideoMetadata {
    Label label = Label::NonClickbait;
};

struct Dataset {
    std::vector<VideoRecord> records;
    std::string source_path;

    [[nodiscard]] std::size_t size() const noexcept { return records.size(); }
    [[nodiscard]] bool empty() const noexcept { return records.empty(); }
};

enum class DataFormat { Csv, Jsonl };

DataFormat parse_format(std::string_view name);
/// Guess from the extension; `.csv` is csv, anything else jsonl.
DataFormat format_from_path(const std::filesystem::path& path);

/// Column / key names, in the order written to disk.
inline constexpr std::array<std::string_view, 9> kRecordFields = {
    "video_id",   "title",         "description",   "view_count",       "like_count",
    "dislike_count", "comment_count", "subscriber_count", "label"};

Dataset load_dataset(const std::filesystem::path& path, DataFormat format);
Dataset parse_dataset(std::string_view content, DataFormat format, std::string source = {});
void save_dataset(const Dataset& d, const std::filesystem::path& path, DataFormat format);
std::string serialize_dataset(const Dataset& d, DataFormat format);

// ---------------------------------------------------------------------------
// statistics

struct StatsRow {
    std::string item;
    double min = 0;
    double mean = 0;
    double max = 0;
};

/// Min/mean/max per data item, in the row order of the published dataset
/// table: title length, description length, view, comment, like, subscriber
/// and dislike counts. Lengths are in Unicode code points.
struct StatsTable {
    std::vector<StatsRow> rows;
    std::size_t records = 0;
};

StatsTable dataset_stats(const Dataset& d);
std::string render_stats(const StatsTable& t);

/// Number of Unicode code points in a UTF-8 string (invalid bytes count as one).
std::size_t utf8_length(std::string_view s) noexcept;

// ---------------------------------------------------------------------------
// splitting

struct SplitSpec {
    double test_fraction = 0.2;
    std::uint64_t seed = 0;
    bool stratified = false;
};

struct Split {
    Dataset train;
    Dataset test;
};

/// Partition into train/test. |test| = round-half-up(test_fraction * n);
/// stratified splits allocate the test quota per class by largest remainder.
/// Both halves keep the original record order.
Split split_dataset(const Dataset& d, const SplitSpec& spec);

/// Round-half-up of a non-negative real to an integer count.
std::size_t round_half_up(double x) noexcept;

// ---------------------------------------------------------------------------
// metadata fetch

class MetadataTransport {
public:
    virtual ~MetadataTransport() = default;
    /// nullopt when the id does not exist; throws TransportError on failure.
    virtual std::optional<VideoMetadata> fetch(const std::string& video_id) = 0;
};

class TransportError : public Error {
public:
    TransportError(std::string video_id, const std::string& what);
    [[nodiscard]] const std::string& video_id() const noexcept { return video_id_; }

private:
    std::string video_id_;
};

/// Offline transport: one `<video_id>.json` object per video in a directory,
/// keys as in the jsonl format (label ignored).
class FixtureTransport final : public MetadataTransport {
public:
    explicit FixtureTransport(std::filesystem::path dir);
    std::optional<VideoMetadata> fetch(const std::string& video_id) override;

private:
    std::filesystem::path dir_;
};

struct FetchResult {
    std::vector<VideoMetadata> records;
    std::vector<std::string> unresolved;
};

FetchResult fetch_metadata(const std::vector<std::string>& ids, MetadataTransport& transport);

/// API key for user-supplied live transports, read from CBD_API_KEY.
std::optional<std::string> api_key_from_env();

}  // namespace cbd
