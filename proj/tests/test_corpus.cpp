#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "cbd/corpus.hpp"
#include "cbd/error.hpp"
#include "cbd/random.hpp"

using namespace cbd;

namespace {

const std::string kRow =
    R"({"video_id":"a","title":"T","description":"d","view_count":21,"like_count":1,"dislike_count":0,"comment_count":4,"subscriber_count":977,"label":1})";

Dataset make(std::size_t n, std::size_t clickbait, std::uint64_t seed = 0) {
    Dataset d;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        VideoRecord r;
        r.video_id = "v" + std::to_string(i);
        r.title = "title " + std::to_string(i);
        r.view_count = rng.below(1000);
        r.label = i < clickbait ? Label::Clickbait : Label::NonClickbait;
        d.records.push_back(r);
    }
    return d;
}

std::filesystem::path fixture(const char* name) { return std::filesystem::path(CBD_FIXTURE_DIR) / name; }

}  // namespace

TEST(Load, SingleJsonlRow) {
    const auto d = parse_dataset(kRow + "\n", DataFormat::Jsonl);
    ASSERT_EQ(d.size(), 1u);
    const auto& r = d.records[0];
    EXPECT_EQ(r.video_id, "a");
    EXPECT_EQ(r.view_count, 21u);
    EXPECT_EQ(r.subscriber_count, 977u);
    ASSERT_TRUE(r.comment_count.has_value());
    EXPECT_EQ(*r.comment_count, 4u);
    EXPECT_EQ(r.label, Label::Clickbait);
}

TEST(Load, OmittedCommentCountIsAbsent) {
    const std::string row =
        R"({"video_id":"a","title":"T","description":"","view_count":1,"like_count":1,"dislike_count":0,"subscriber_count":1,"label":0})";
    const auto d = parse_dataset(row, DataFormat::Jsonl);
    EXPECT_FALSE(d.records[0].comment_count.has_value());

    const std::string null_row =
        R"({"video_id":"a","title":"T","view_count":1,"like_count":1,"dislike_count":0,"comment_count":null,"subscriber_count":1,"label":0})";
    EXPECT_FALSE(parse_dataset(null_row, DataFormat::Jsonl).records[0].comment_count.has_value());
}

TEST(Load, ZeroCommentsDistinctFromAbsent) {
    const std::string csv =
        "video_id,title,description,view_count,like_count,dislike_count,comment_count,subscriber_count,label\n"
        "a,T,,1,1,0,0,1,0\n"
        "b,T,,1,1,0,,1,1\n";
    const auto d = parse_dataset(csv, DataFormat::Csv);
    ASSERT_TRUE(d.records[0].comment_count.has_value());
    EXPECT_EQ(*d.records[0].comment_count, 0u);
    EXPECT_FALSE(d.records[1].comment_count.has_value());
}

TEST(Load, NegativeCountNamesField) {
    for (const char* bad : {R"("like_count":"-3")", R"("like_count":-3)"}) {
        std::string row = kRow;
        row.replace(row.find(R"("like_count":1)"), 14, bad);
        try {
            parse_dataset(row, DataFormat::Jsonl);
            FAIL() << "expected an error";
        } catch (const DataError& e) {
            EXPECT_NE(std::string(e.what()).find("like_count"), std::string::npos) << e.what();
            EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
        }
    }
}

TEST(Load, CsvRowErrorNamesRowAndField) {
    const std::string csv =
        "video_id,title,description,view_count,like_count,dislike_count,comment_count,subscriber_count,label\n"
        "a,T,,1,1,0,0,1,0\n"
        "b,T,,1,x,0,,1,1\n";
    try {
        parse_dataset(csv, DataFormat::Csv);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("like_count"), std::string::npos) << msg;
    }
}

TEST(Load, DuplicateIdAndEmpty) {
    EXPECT_THROW(parse_dataset(kRow + "\n" + kRow + "\n", DataFormat::Jsonl), DataError);
    EXPECT_THROW(parse_dataset("", DataFormat::Jsonl), DataError);
    EXPECT_THROW(parse_dataset("\n\n", DataFormat::Jsonl), DataError);
    EXPECT_THROW(parse_dataset("", DataFormat::Csv), DataError);
}

TEST(Load, BadLabelAndEmptyTitle) {
    std::string row = kRow;
    row.replace(row.find(R"("label":1)"), 9, R"("label":3)");
    EXPECT_THROW(parse_dataset(row, DataFormat::Jsonl), DataError);
    std::string untitled = kRow;
    untitled.replace(untitled.find(R"("title":"T")"), 11, R"("title":"")");
    EXPECT_THROW(parse_dataset(untitled, DataFormat::Jsonl), DataError);
}

TEST(Load, CsvQuotedFieldsAndRoundTrip) {
    Dataset d = make(3, 1);
    d.records[0].title = "comma, \"quote\" and\nnewline";
    d.records[1].comment_count = 7;
    for (auto fmt : {DataFormat::Csv, DataFormat::Jsonl}) {
        const auto back = parse_dataset(serialize_dataset(d, fmt), fmt);
        ASSERT_EQ(back.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) {
            EXPECT_EQ(back.records[i].title, d.records[i].title);
            EXPECT_EQ(back.records[i].comment_count, d.records[i].comment_count);
            EXPECT_EQ(back.records[i].label, d.records[i].label);
        }
    }
}

TEST(Load, FixtureFilesAgree) {
    const auto a = load_dataset(fixture("tiny.jsonl"), DataFormat::Jsonl);
    const auto b = load_dataset(fixture("tiny.csv"), DataFormat::Csv);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.records[i].video_id, b.records[i].video_id);
        EXPECT_EQ(a.records[i].description, b.records[i].description);
        EXPECT_EQ(a.records[i].comment_count, b.records[i].comment_count);
    }
    EXPECT_THROW(load_dataset(fixture("no_such_file.jsonl"), DataFormat::Jsonl), DataError);
}

TEST(Stats, HandArithmetic) {
    Dataset d = make(3, 1);
    d.records[0].view_count = 21;
    d.records[1].view_count = 100;
    d.records[2].view_count = 179;
    const auto t = dataset_stats(d);
    ASSERT_EQ(t.rows.size(), 7u);
    EXPECT_EQ(t.rows[2].item, "View count");
    EXPECT_EQ(t.rows[2].min, 21);
    EXPECT_EQ(t.rows[2].mean, 100);
    EXPECT_EQ(t.rows[2].max, 179);
}

TEST(Stats, RowOrderAndSingleton) {
    const auto t = dataset_stats(make(1, 1));
    const std::vector<std::string> names = {"Title length", "Description length", "View count", "Comment count",
                                            "Like count",   "Subscriber count",   "Dislike count"};
    ASSERT_EQ(t.rows.size(), names.size());
    for (std::size_t i = 0; i < names.size(); ++i) {
        EXPECT_EQ(t.rows[i].item, names[i]);
        EXPECT_EQ(t.rows[i].min, t.rows[i].mean);
        EXPECT_EQ(t.rows[i].mean, t.rows[i].max);
    }
    EXPECT_THROW(dataset_stats(Dataset{}), DataError);
}

TEST(Stats, AbsentCommentsCountAsZeroAndLengthsAreCodePoints) {
    Dataset d = make(2, 1);
    d.records[0].title = "héllo…";  // 6 code points, 9 bytes
    d.records[1].comment_count = 10;
    const auto t = dataset_stats(d);
    EXPECT_EQ(t.rows[0].max, std::max<double>(6, utf8_length(d.records[1].title)));
    EXPECT_EQ(utf8_length("héllo…"), 6u);
    EXPECT_EQ(t.rows[3].min, 0);
    EXPECT_EQ(t.rows[3].mean, 5);
}

TEST(Stats, PermutationInvariant) {
    Dataset d = make(50, 20, 3);
    const auto before = dataset_stats(d);
    Rng rng(9);
    rng.shuffle(std::span(d.records));
    const auto after = dataset_stats(d);
    for (std::size_t i = 0; i < before.rows.size(); ++i) {
        EXPECT_EQ(before.rows[i].min, after.rows[i].min);
        EXPECT_EQ(before.rows[i].mean, after.rows[i].mean);
        EXPECT_EQ(before.rows[i].max, after.rows[i].max);
    }
}

TEST(Stats, MinMeanMaxOrdered) {
    const auto t = dataset_stats(make(37, 10, 5));
    for (const auto& r : t.rows) {
        EXPECT_LE(r.min, r.mean);
        EXPECT_LE(r.mean, r.max);
    }
    const auto text = render_stats(t);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 8);
}

TEST(Split, StratifiedTenRecords) {
    const auto d = make(10, 5);
    const auto s = split_dataset(d, {0.3, 1, true});
    EXPECT_EQ(s.test.size(), 3u);
    std::size_t cb = 0;
    for (const auto& r : s.test.records) cb += r.label == Label::Clickbait;
    EXPECT_TRUE(cb == 1 || cb == 2);
}

TEST(Split, DeterministicAndSizeStable) {
    const auto d = make(40, 15);
    const auto a = split_dataset(d, {0.3, 42, false});
    const auto b = split_dataset(d, {0.3, 42, false});
    const auto c = split_dataset(d, {0.3, 43, false});
    ASSERT_EQ(a.test.size(), b.test.size());
    for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test.records[i].video_id, b.test.records[i].video_id);
    EXPECT_EQ(a.test.size(), c.test.size());
    EXPECT_EQ(a.train.size(), c.train.size());
}

TEST(Split, ErrorsAndRounding) {
    EXPECT_THROW(split_dataset(make(10, 0), {0.3, 1, true}), DataError);
    EXPECT_THROW(split_dataset(make(10, 5), {0.0, 1, false}), UsageError);
    EXPECT_THROW(split_dataset(make(10, 5), {1.0, 1, false}), UsageError);
    EXPECT_EQ(round_half_up(2.5), 3u);
    EXPECT_EQ(round_half_up(2.4999), 2u);
    // 0.25 · 10 = 2.5 → 3.
    EXPECT_EQ(split_dataset(make(10, 5), {0.25, 1, false}).test.size(), 3u);
}

TEST(SplitProperty, PartitionAndStratificationSizes2To200) {
    for (std::size_t n = 2; n <= 200; ++n) {
        for (double frac : {0.1, 0.2, 0.3, 0.5, 0.77}) {
            const std::size_t cb = 1 + (n * 7 + 3) % (n - 1);  // both classes present
            const auto d = make(n, cb, n);
            for (bool strat : {false, true}) {
                const auto s = split_dataset(d, {frac, n * 31 + 7, strat});
                ASSERT_EQ(s.train.size() + s.test.size(), n);
                ASSERT_EQ(s.test.size(), round_half_up(frac * static_cast<double>(n)));
                std::set<std::string> ids;
                for (const auto& r : s.train.records) ids.insert(r.video_id);
                for (const auto& r : s.test.records) ASSERT_TRUE(ids.insert(r.video_id).second);
                ASSERT_EQ(ids.size(), n);
                if (strat) {
                    std::size_t test_cb = 0;
                    for (const auto& r : s.test.records) test_cb += r.label == Label::Clickbait;
                    const double expect_cb = frac * static_cast<double>(cb);
                    const double expect_nc = frac * static_cast<double>(n - cb);
                    ASSERT_LT(std::abs(static_cast<double>(test_cb) - expect_cb), 1.0) << n << ' ' << frac;
                    ASSERT_LT(std::abs(static_cast<double>(s.test.size() - test_cb) - expect_nc), 1.0);
                }
            }
        }
    }
}

TEST(SplitProperty, KeepsRecordOrder) {
    const auto d = make(30, 12);
    const auto s = split_dataset(d, {0.4, 5, true});
    auto pos = [&](const std::string& id) {
        for (std::size_t i = 0; i < d.size(); ++i)
            if (d.records[i].video_id == id) return i;
        return d.size();
    };
    for (const auto* part : {&s.train, &s.test}) {
        for (std::size_t i = 1; i < part->size(); ++i) {
            EXPECT_LT(pos(part->records[i - 1].video_id), pos(part->records[i].video_id));
        }
    }
}

namespace {

class MapTransport final : public MetadataTransport {
public:
    std::optional<VideoMetadata> fetch(const std::string& id) override {
        if (id == "boom") throw TransportError(id, "connection reset");
        if (id == "x") return std::nullopt;
        VideoMetadata m;
        m.video_id = id;
        m.title = "t";
        return m;
    }
};

}  // namespace

TEST(Fetch, OrderAndUnresolved) {
    MapTransport t;
    auto r = fetch_metadata({"a", "b"}, t);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].video_id, "a");
    EXPECT_EQ(r.records[1].video_id, "b");
    r = fetch_metadata({"a", "x"}, t);
    EXPECT_EQ(r.records.size(), 1u);
    EXPECT_EQ(r.unresolved, std::vector<std::string>{"x"});
    EXPECT_TRUE(fetch_metadata({}, t).records.empty());
}

TEST(Fetch, TransportFailureCarriesId) {
    MapTransport t;
    try {
        fetch_metadata({"a", "boom"}, t);
        FAIL();
    } catch (const TransportError& e) {
        EXPECT_EQ(e.video_id(), "boom");
    }
}

TEST(Fetch, FixtureTransport) {
    FixtureTransport t(fixture("metadata"));
    const auto r = fetch_metadata({"vid001", "nosuch", "vid000"}, t);
    ASSERT_EQ(r.records.size(), 2u);
    EXPECT_EQ(r.records[0].video_id, "vid001");
    EXPECT_EQ(r.records[1].video_id, "vid000");
    EXPECT_EQ(r.unresolved, std::vector<std::string>{"nosuch"});
    EXPECT_THROW(t.fetch("../tiny"), TransportError);
    EXPECT_THROW(FixtureTransport(fixture("missing_dir")), DataError);
}
