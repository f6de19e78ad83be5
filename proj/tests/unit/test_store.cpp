#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <thread>
#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/store.hpp"
#include "shortscribe/util.hpp"
#include "synth.hpp"

using namespace shortscribe;
using namespace shortscribe::store;
using nlohmann::json;

namespace {

summarize::DescriptionSet sample_set(std::size_t shots = 2) {
    summarize::DescriptionSet s;
    s.short_description = "A man makes a damn good pancake.";
    s.long_description = "He folds flour, eggs and milk in a bowl.";
    for (std::size_t i = 0; i < shots; ++i)
        s.shot_by_shot.push_back({static_cast<int>(i) + 1, "Shot " + std::to_string(i + 1) + ": something happens."});
    s.on_screen_text = "2 cups flour";
    s.meta.prompt_hashes = {{"long", "abc"}};
    s.meta.backend_ids = {{"llm", "stub-llm"}};
    s.meta.llm_model_id = "stub";
    s.meta.started_at = "1970-01-01T00:00:00Z";
    s.meta.finished_at = "1970-01-01T00:00:00Z";
    s.meta.shot_count = shots;
    s.meta.long_raw_words = 9;
    s.meta.short_words = 7;
    s.meta.input_hash = "h";
    return s;
}

FeedDocument sample_doc(const std::string& id, bool described = true) {
    FeedDocument d;
    d.video_id = id;
    d.username = "@flapjack.jo";
    d.author_caption = "Best pancakes ever, no joke #brunch";
    d.audio_title = "Sunny Side Loop";
    d.likes = 12;
    d.comments = 3;
    d.bookmarks = 0;
    d.shares = 1;
    d.video_url = "/media/" + id;
    if (described) d.description_set = sample_set();
    return d;
}

json get_json(httplib::Client& c, const std::string& path, int expect_status = 200) {
    auto res = c.Get(path);
    REQUIRE(res);
    CHECK(res->status == expect_status);
    return json::parse(res->body);
}

}  // namespace

TEST_CASE("content_filter: reference cases") {
    ContentLexicon lex{{"bad"}, "***"};
    CHECK(content_filter("nothing to see", lex) == "nothing to see");
    CHECK(content_filter("bad word here", lex) == "*** word here");
    CHECK(content_filter("BAD, Bad! badger abad bad_x bad", lex) == "***, ***! badger abad bad_x ***");
    CHECK(content_filter("", lex) == "");
    CHECK(content_filter("bad", ContentLexicon{}) == "bad");

    ContentLexicon phrase{{"damn good"}, "***"};
    CHECK(content_filter("a damn good pancake", phrase) == "a *** pancake");
    CHECK(content_filter("a damn goodness", phrase) == "a damn goodness");
}

TEST_CASE("content_filter: idempotent on random strings and lexicons") {
    std::mt19937 rng(42);
    const std::string alphabet = "abAB *-_.,!\t\n";
    const std::vector<std::string> pool = {"ab", "a", "b", "ab ab", "Ba", "a-b", "*", "**", "a*", " a", "b_"};
    for (int trial = 0; trial < 2000; ++trial) {
        ContentLexicon lex;
        const int n = static_cast<int>(rng() % 4);
        for (int i = 0; i < n; ++i) lex.entries.push_back(pool[rng() % pool.size()]);
        if (rng() % 3 == 0) lex.replacement = "[--]";
        std::string text;
        const int len = static_cast<int>(rng() % 24);
        for (int i = 0; i < len; ++i) text += alphabet[rng() % alphabet.size()];
        const auto once = content_filter(text, lex);
        CAPTURE(text);
        CHECK(content_filter(once, lex) == once);
    }
}

TEST_CASE("lexicon file loading") {
    synth::TempDir dir;
    std::ofstream(dir / "lex.txt") << "# comment\nbad\n\n  worse  \n";
    const auto lex = ContentLexicon::load(dir / "lex.txt");
    CHECK(lex.entries == std::vector<std::string>{"bad", "worse"});
    CHECK_THROWS_AS(ContentLexicon::load(dir / "missing.txt"), Error);
}

TEST_CASE("document round trip, filtering and errors") {
    synth::TempDir dir;
    DocumentStore store(dir.path(), ContentLexicon{{"damn"}, "***"});
    auto doc = sample_doc("vid1");
    store.save_document(doc);
    const auto loaded = store.load_document("vid1");
    CHECK(loaded.description_set->short_description == "A man makes a *** good pancake.");
    doc.description_set = filter_description_set(*doc.description_set, ContentLexicon{{"damn"}, "***"});
    CHECK(loaded == doc);

    // Saving the loaded document again is a no-op for the filter.
    store.save_document(loaded);
    CHECK(store.load_document("vid1") == loaded);

    const auto bare = sample_doc("vid2", false);
    store.save_document(bare);
    CHECK(store.load_document("vid2") == bare);

    try {
        store.load_document("nope");
        FAIL("expected NotFound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotFound);
    }

    auto broken = sample_doc("vid3");
    broken.description_set->meta.shot_count = 5;
    try {
        store.save_document(broken);
        FAIL("expected SchemaViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::SchemaViolation);
    }
    auto negative = sample_doc("vid4");
    negative.likes = -1;
    CHECK_THROWS_AS(store.save_document(negative), Error);
    CHECK_FALSE(store.contains("vid3"));

    // A second store over the same directory sees the same index.
    DocumentStore reopened(dir.path());
    CHECK(reopened.ids() == std::vector<std::string>{"vid1", "vid2"});
}

TEST_CASE("json field order follows the video pane read order") {
    const auto j = to_json(sample_doc("v"));
    const auto set_json = to_json(sample_set());
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    const std::vector<std::string> expected = {"schema_version", "video_id", "short_description", "username",
                                               "author_caption", "audio_title", "likes", "comments",
                                               "bookmarks", "shares", "video_url", "description_set"};
    CHECK(keys == expected);

    std::vector<std::string> pane;
    for (const auto& [k, v] : set_json.items()) pane.push_back(k);
    CHECK(std::find(pane.begin(), pane.end(), "long") < std::find(pane.begin(), pane.end(), "on_screen_text"));
    CHECK(std::find(pane.begin(), pane.end(), "on_screen_text") < std::find(pane.begin(), pane.end(), "shot_by_shot"));
}

TEST_CASE("a corrupt document on disk is a schema violation") {
    synth::TempDir dir;
    DocumentStore store(dir.path());
    store.save_document(sample_doc("vid1"));
    std::ofstream(dir.path() / "videos" / "vid1.json") << R"({"video_id": 5})";
    CHECK_THROWS_WITH_AS(store.load_document("vid1"), doctest::Contains("SchemaViolation"), Error);
}

TEST_CASE("list_feed: pagination arithmetic and completeness") {
    synth::TempDir dir;
    DocumentStore store(dir.path());
    auto empty = store.list_feed("", 10);
    CHECK(empty.items.empty());
    CHECK_FALSE(empty.next_cursor);

    std::vector<std::string> ids;
    for (int i = 0; i < 25; ++i) {
        ids.push_back(fmt::format("v{:02}", 24 - i));  // insertion order differs from sort order
        store.save_document(sample_doc(ids.back(), i % 2 == 0));
    }
    std::vector<std::size_t> sizes;
    std::vector<std::string> seen;
    std::string cursor;
    for (;;) {
        const auto page = store.list_feed(cursor, 10);
        sizes.push_back(page.items.size());
        for (const auto& it : page.items) seen.push_back(it.video_id);
        if (!page.next_cursor) break;
        cursor = *page.next_cursor;
    }
    CHECK(sizes == std::vector<std::size_t>{10, 10, 5});
    CHECK(seen == ids);
    CHECK(seen == store.ids());

    for (const auto* bad : {"x", "-1", "26", "1.5"}) {
        try {
            store.list_feed(bad, 10);
            FAIL("expected InvalidCursor");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::InvalidCursor);
        }
    }
    CHECK_THROWS_AS(store.list_feed("", 0), Error);
}

TEST_CASE("concurrent saves of one id are rejected, distinct ids are fine") {
    synth::TempDir dir;
    DocumentStore store(dir.path());
    std::atomic<int> conflicts{0}, ok{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&, t] {
            for (int i = 0; i < 40; ++i) {
                try {
                    store.save_document(sample_doc(i % 2 ? "shared" : "own" + std::to_string(t)));
                    ++ok;
                } catch (const Error& e) {
                    CHECK(e.code() == ErrorCode::ConcurrentWrite);
                    ++conflicts;
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(ok + conflicts == 320);
    CHECK(store.ids().size() == 9);
    CHECK(store.load_document("shared").video_id == "shared");
}

TEST_CASE("controls and events") {
    CHECK(parse_control("open_descriptions") == Control::OpenDescriptions);
    for (const auto c : {Control::Prev, Control::Next, Control::Play, Control::Pause, Control::OpenDescriptions,
                         Control::CloseDescriptions, Control::Like, Control::Comment, Control::Bookmark,
                         Control::Share})
        CHECK(parse_control(to_string(c)) == c);
    try {
        parse_control("dance");
        FAIL("expected UnknownControl");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownControl);
    }

    synth::TempDir dir;
    EventLog log(dir / "events.jsonl");
    log.log_event({"s1", "v", Control::Play, 10});
    log.log_event({"s1", "v", Control::Pause, 20});
    const auto evs = log.session_events("s1");
    REQUIRE(evs.size() == 2);
    CHECK(evs[0].control == Control::Play);
    CHECK(evs[1].control == Control::Pause);
    CHECK_THROWS_WITH_AS(log.log_event({"s1", "v", Control::Play, 5}), doctest::Contains("InvalidEvent"), Error);
    CHECK_THROWS_AS(log.log_event({"", "v", Control::Play, 50}), Error);
    CHECK(log.size() == 2);
}

TEST_CASE("event log: 1000 interleaved events keep per-session order and persist") {
    synth::TempDir dir;
    std::map<std::string, std::vector<InteractionEvent>> per_session;
    std::mt19937 rng(17);
    for (int i = 0; i < 1000; ++i) {
        const std::string s = "session" + std::to_string(i % 3);
        per_session[s].push_back({s, "v" + std::to_string(i % 7), static_cast<Control>(rng() % 10),
                                  static_cast<std::int64_t>(per_session[s].size()) * 10});
    }
    // Random interleaving that keeps each session's own order.
    std::vector<std::string> schedule;
    for (const auto& [s, evs] : per_session) schedule.insert(schedule.end(), evs.size(), s);
    std::shuffle(schedule.begin(), schedule.end(), rng);
    {
        EventLog log(dir / "events.jsonl");
        std::map<std::string, std::size_t> next;
        std::uint64_t last_seq = 0;
        for (const auto& s : schedule) {
            const auto seq = log.log_event(per_session[s][next[s]++]);
            CHECK(seq > last_seq);
            last_seq = seq;
        }
        for (const auto& [s, evs] : per_session) CHECK(log.session_events(s) == evs);
    }
    const auto before = util::read_file(dir / "events.jsonl");
    EventLog reopened(dir / "events.jsonl");
    CHECK(reopened.size() == 1000);
    for (const auto& [s, evs] : per_session) CHECK(reopened.session_events(s) == evs);
    reopened.log_event({"session0", "v", Control::Like, 1'000'000});
    const auto after = util::read_file(dir / "events.jsonl");
    CHECK(after.substr(0, before.size()) == before);
}

TEST_CASE("concurrent event appends") {
    synth::TempDir dir;
    EventLog log(dir / "events.jsonl");
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t)
        threads.emplace_back([&, t] {
            for (int i = 0; i < 100; ++i) log.log_event({"s" + std::to_string(t), "v", Control::Next, i});
        });
    for (auto& th : threads) th.join();
    CHECK(log.size() == 400);
    for (int t = 0; t < 4; ++t) {
        const auto evs = log.session_events("s" + std::to_string(t));
        REQUIRE(evs.size() == 100);
        for (int i = 0; i < 100; ++i) CHECK(evs[static_cast<std::size_t>(i)].timestamp_ms == i);
    }
}

TEST_CASE("HTTP API: documents, descriptions, events, media and errors") {
    synth::TempDir dir;
    DocumentStore store(dir / "store");
    EventLog events(dir / "store" / "events.jsonl");
    store.save_document(sample_doc("vid1"));
    store.save_document(sample_doc("vid2", false));
    std::ofstream(store.media_dir() / "vid1.mp4", std::ios::binary) << "MP4BYTES";

    std::filesystem::create_directories(dir / "static");
    std::ofstream(dir / "static" / "index.html") << "<html>viewer</html>";

    ApiServer server(store, events, {"127.0.0.1", 0, dir / "static"});
    server.bind();
    server.start_background();
    httplib::Client c("127.0.0.1", server.port());

    const auto feed = get_json(c, "/api/feed");
    CHECK(feed.at("schema_version") == kSchemaVersion);
    CHECK(feed.at("items").size() == 2);
    CHECK(feed.at("next_cursor").is_null());
    CHECK(feed.at("items")[0].at("short_description") == "A man makes a damn good pancake.");

    const auto doc = get_json(c, "/api/videos/vid1");
    CHECK(feed_document_from_json(doc) == store.load_document("vid1"));

    const auto desc = get_json(c, "/api/videos/vid1/descriptions");
    CHECK(desc.at("schema_version") == kSchemaVersion);
    CHECK(desc.at("shot_by_shot").size() == 2);
    get_json(c, "/api/videos/vid2/descriptions", 404);
    CHECK(get_json(c, "/api/videos/zzz", 404).at("error") == "NotFound");

    auto posted = c.Post("/api/events", R"({"session_id":"s","video_id":"vid1","control":"play","timestamp":5})",
                         "application/json");
    REQUIRE(posted);
    CHECK(posted->status == 201);
    CHECK(json::parse(posted->body).at("ack") == true);
    auto no_ts = c.Post("/api/events", R"({"session_id":"s","video_id":"vid1","control":"pause"})", "application/json");
    REQUIRE(no_ts);
    CHECK(no_ts->status == 201);
    auto dance = c.Post("/api/events", R"({"session_id":"s","video_id":"vid1","control":"dance"})", "application/json");
    REQUIRE(dance);
    CHECK(dance->status == 400);
    CHECK(json::parse(dance->body).at("error") == "UnknownControl");
    auto junk = c.Post("/api/events", "{not json", "application/json");
    REQUIRE(junk);
    CHECK(junk->status == 400);
    CHECK(events.session_events("s").size() == 2);

    auto media = c.Get("/media/vid1");
    REQUIRE(media);
    CHECK(media->status == 200);
    CHECK(media->body == "MP4BYTES");
    CHECK(media->get_header_value("Content-Type") == "video/mp4");
    get_json(c, "/media/vid2", 404);

    get_json(c, "/api/feed?cursor=banana", 400);
    get_json(c, "/api/feed?limit=0", 400);
    get_json(c, "/api/feed?limit=101", 400);
    const auto page1 = get_json(c, "/api/feed?limit=1");
    CHECK(page1.at("next_cursor") == "1");

    auto index = c.Get("/index.html");
    REQUIRE(index);
    CHECK(index->body == "<html>viewer</html>");
    server.stop();
}

TEST_CASE("HTTP API: a busy port is reported") {
    synth::TempDir dir;
    DocumentStore store(dir / "store");
    EventLog events(dir / "store" / "events.jsonl");
    ApiServer first(store, events, {"127.0.0.1", 0, {}});
    first.bind();
    first.start_background();
    ApiServer second(store, events, {"127.0.0.1", first.port(), {}});
    try {
        second.bind();
        FAIL("expected PortInUse");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::PortInUse);
    }
    first.stop();
}
