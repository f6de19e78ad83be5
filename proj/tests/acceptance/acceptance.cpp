// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/pipeline.hpp"
#include "shortscribe/util.hpp"
#include "synth.hpp"

using namespace shortscribe;
using nlohmann::json;

namespace {

struct Failure {
    std::string what;
};

void expect(bool ok, const std::string& what) {
    if (!ok) throw Failure{what};
}

struct Criterion {
    std::string name;
    std::function<std::string()> run;  // returns a short detail line
};

// ---------------------------------------------------------------------------

std::string shot_segmentation() {
    std::mt19937 rng(20240501);
    synth::TempDir dir("accept-shots");
    constexpr int kW = 320, kH = 180, kInstances = 24;
    double worst_s = 0.0;
    int total_cuts = 0;
    for (int inst = 0; inst < kInstances; ++inst) {
        const int cuts = 1 + static_cast<int>(rng() % 12);
        total_cuts += cuts;
        std::vector<int> lengths;
        for (int s = 0; s <= cuts; ++s) lengths.push_back(4 + static_cast<int>(rng() % 60));

        // Alternate dark and bright bases so every planted cut is a hard one;
        // within a shot pixels carry small noise and a slow drift.
        const auto path = dir / fmt::format("v{}.ssraw", inst);
        std::vector<std::int64_t> truth;
        {
            std::ofstream out(path, std::ios::binary);
            media::RawFrameWriter w(out, {kW, kH, 30.0});
            std::vector<std::uint8_t> luma(kW * kH);
            std::int64_t frame = 0;
            for (int s = 0; s <= cuts; ++s) {
                truth.push_back(frame);
                const int base = s % 2 ? 190 + static_cast<int>(rng() % 40) : 20 + static_cast<int>(rng() % 40);
                for (int f = 0; f < lengths[static_cast<std::size_t>(s)]; ++f, ++frame) {
                    for (auto& px : luma)
                        px = static_cast<std::uint8_t>(std::clamp(base + f / 4 + static_cast<int>(rng() % 17) - 8, 0, 255));
                    w.write(luma);
                }
            }
        }

        const auto t0 = std::chrono::steady_clock::now();
        media::DecoderOptions opt;
        opt.keep_rgb = false;
        auto stream = media::decode_frames(path, opt);
        std::vector<media::FrameMeta> metas;
        while (auto f = stream->next()) metas.push_back(std::move(f->meta));
        const auto n = static_cast<std::int64_t>(metas.size());
        const auto shots = media::detect_shots(metas, media::kDefaultSceneThreshold);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        worst_s = std::max(worst_s, secs);

        std::vector<std::int64_t> starts;
        for (const auto& s : shots) starts.push_back(s.start_frame);
        expect(starts == truth, fmt::format("instance {}: boundaries {} != planted {}", inst, fmt::join(starts, ","),
                                            fmt::join(truth, ",")));
        expect(shots.front().start_frame == 0 && shots.back().end_frame == n - 1,
               fmt::format("instance {}: shots do not cover [0,{}]", inst, n - 1));
        for (std::size_t i = 1; i < shots.size(); ++i)
            expect(shots[i].start_frame == shots[i - 1].end_frame + 1, fmt::format("instance {}: gap/overlap", inst));
        expect(secs < 5.0, fmt::format("instance {} took {:.2f}s", inst, secs));
    }
    return fmt::format("{} videos, {} planted cuts recovered exactly, slowest {:.3f}s", kInstances, total_cuts, worst_s);
}

std::string keyframe_rule() {
    for (std::int64_t n = 1; n <= 100; ++n) {
        std::vector<media::Frame> frames(static_cast<std::size_t>(n) + 5);
        for (std::size_t i = 0; i < frames.size(); ++i) {
            frames[i].meta = synth::flat_meta(static_cast<std::int64_t>(i), 0, 2, 2);
            frames[i].rgb.assign(12, static_cast<std::uint8_t>(i));
        }
        media::Shot shot;
        shot.shot_number = 1;
        shot.start_frame = 5;
        shot.end_frame = 5 + n - 1;
        media::InMemoryFrames mem(frames);
        const auto kf = media::select_keyframe(shot, mem);
        const std::int64_t ordinal = kf.frame_index - shot.start_frame + 1;  // 1-based within the shot
        expect(ordinal == (n + 1) / 2, fmt::format("n={}: picked frame {} of the shot", n, ordinal));
        expect(kf.rgb[0] == static_cast<std::uint8_t>(kf.frame_index), fmt::format("n={}: wrong pixels", n));
    }
    media::Shot thirty;
    thirty.start_frame = 0;
    thirty.end_frame = 29;
    expect(media::keyframe_index(thirty) - thirty.start_frame + 1 == 15, "30-frame shot does not pick the 15th frame");
    return "lengths 1..100 pick the ceil(n/2)-th frame; 30 frames -> 15th";
}

std::string ocr_filter() {
    using extraction::OcrSpan;
    using extraction::filter_ocr;
    expect(filter_ocr({{"kept", 0.95, 1}}).size() == 1, "0.95 was dropped");
    expect(filter_ocr({{"dropped", 0.9499, 1}}).empty(), "0.9499 was kept");
    expect(filter_ocr({{"TikTok", 0.99, 1}, {"tiktok.com/@x", 0.99, 1}}).empty(), "platform name kept");
    expect(filter_ocr({{"@flapjack.jo", 0.99, 1}, {"follow @chef now", 0.99, 1}}).empty(), "@username kept");
    expect(filter_ocr({{"2 cups flour", 0.98, 1}, {"street sign", 0.80, 1}}) ==
               std::vector<OcrSpan>{{"2 cups flour", 0.98, 1}},
           "reference case");

    std::mt19937 rng(7);
    const std::vector<std::string> words = {"batter", "TikTok", "@jo", "1/2", "cup", "TIKTOK", "@", "", "syrup",
                                            "salt", "@a.b"};
    const std::vector<double> confidences = {0.5, 0.9, 0.9499, 0.95, 0.9501, 0.99, 1.0};
    int trials = 0;
    for (; trials < 5000; ++trials) {
        std::vector<OcrSpan> spans;
        for (int i = 0, n = static_cast<int>(rng() % 8); i < n; ++i)
            spans.push_back({words[rng() % words.size()] + " " + words[rng() % words.size()],
                             confidences[rng() % confidences.size()], 1 + static_cast<int>(rng() % 3)});
        const auto once = filter_ocr(spans);
        expect(filter_ocr(once) == once, "not idempotent");
        std::size_t j = 0;
        for (const auto& s : spans)
            if (j < once.size() && s == once[j]) ++j;
        expect(j == once.size(), "output is not a subsequence of the input");
        for (const auto& s : spans) {
            bool handle = false;
            std::istringstream tokens(s.text);
            for (std::string t; tokens >> t;) handle = handle || (t.size() > 1 && t[0] == '@');
            const bool watermark = util::to_lower(s.text).find("tiktok") != std::string::npos || handle;
            const bool should_keep = s.confidence >= 0.95 && !watermark && !util::trim(s.text).empty();
            const bool kept = std::find(once.begin(), once.end(), s) != once.end();
            expect(kept == should_keep, fmt::format("span '{}' @ {} kept={}", s.text, s.confidence, kept));
        }
    }
    return fmt::format("boundary 0.95/0.9499, watermarks, {} random idempotence/subsequence trials", trials);
}

std::string prompt_fidelity() {
    const auto lib = summarize::PromptLibrary::load_default();
    const std::vector<extraction::ShotRecord> records = {
        {1, 3.0, "", "morning all, today we are making pancakes", "a man holding a large steel bowl"},
        {2, 2.5, "2 cups flour", "", "a stack of pancakes on a wooden table"}};
    const std::string long_text =
        "A man makes pancakes at a camp stove. He whisks 2 eggs into a large steel bowl.";
    const std::filesystem::path golden = SHORTSCRIBE_GOLDEN_DIR;
    for (const auto k : summarize::kAllPromptKinds) {
        const auto name = std::string(summarize::to_string(k));
        const bool records_kind = k == summarize::PromptKind::ShotByShot || k == summarize::PromptKind::Long;
        const auto built = summarize::build_prompt(
            lib, k, records_kind ? summarize::PromptPayload(records) : summarize::PromptPayload(long_text));
        const auto expected = util::read_file(golden / (name + ".prompt.txt"));
        expect(built == expected, name + " prompt drifted from its golden fixture");
    }
    return "4/4 prompt kinds byte-identical to golden fixtures";
}

std::string end_to_end_determinism() {
    synth::TempDir dir("accept-e2e");
    std::filesystem::create_directories(dir / "videos");
    synth::write_video(dir / "videos" / "a.ssraw", synth::shots_of({15, 215, 70, 240}, 14));
    synth::write_video(dir / "videos" / "b.ssraw", synth::shots_of({200, 10}, 25));
    synth::write_video(dir / "videos" / "c.ssraw", synth::shots_of({100}, 30));
    std::ofstream(dir / "videos" / "a.ssraw.asr.json")
        << R"([{"start_s":0.0,"end_s":1.2,"text":"let's make pancakes"}])";
    std::ofstream(dir / "meta.json") << R"([{"file":"a.ssraw","username":"@a"},{"file":"b.ssraw","username":"@b"},
                                           {"file":"c.ssraw","username":"@c"}])";
    pipeline::PipelineConfig cfg;
    cfg.store_dir = dir / "store";
    const auto ids = pipeline::cmd_ingest(cfg, dir / "videos", dir / "meta.json");
    expect(ids.size() == 3, "ingest did not return 3 ids");
    const std::map<std::string, std::size_t> shots = {{pipeline::video_id_for(dir / "videos" / "a.ssraw"), 4},
                                                      {pipeline::video_id_for(dir / "videos" / "b.ssraw"), 2},
                                                      {pipeline::video_id_for(dir / "videos" / "c.ssraw"), 1}};

    std::map<std::string, std::string> first;
    for (int run = 0; run < 5; ++run) {
        pipeline::DescribeOptions opt;
        opt.all = true;
        opt.force = true;
        const auto report = pipeline::cmd_describe(cfg, opt);
        expect(report.ok(), "describe failed:\n" + report.format());
        store::DocumentStore st(cfg.store_dir);
        std::map<std::string, std::string> bytes;
        for (const auto& id : ids) {
            const auto doc = st.load_document(id);
            expect(doc.description_set.has_value(), id + " has no description set");
            expect(doc.description_set->shot_by_shot.size() == shots.at(id),
                   fmt::format("{}: {} summaries for {} shots", id, doc.description_set->shot_by_shot.size(),
                               shots.at(id)));
            bytes[id] = util::read_file(cfg.store_dir / "videos" / (id + ".json"));
        }
        if (run == 0) first = bytes;
        expect(bytes == first, fmt::format("run {} differs from run 0", run + 1));
    }

    // Condensation trigger at 49/50/51 words through the whole pipeline.
    for (const int words : {49, 50, 51}) {
        pipeline::DescribeOptions opt;
        opt.ids = {ids[0]};
        opt.stub.long_words = words;
        const auto report = pipeline::cmd_describe(cfg, opt);
        expect(report.ok(), "describe failed:\n" + report.format());
        const auto set = *store::DocumentStore(cfg.store_dir).load_document(ids[0]).description_set;
        expect(set.meta.long_raw_words == static_cast<std::size_t>(words), "stub did not produce the requested length");
        expect(set.fifty_word.has_value() == (words > 50),
               fmt::format("{}-word long description: condensation {}", words,
                           set.fifty_word ? "ran" : "did not run"));
        if (set.fifty_word) expect(*set.fifty_word == set.long_description, "condensed text not used as long");
    }
    return "3 videos x 5 runs byte-identical; summaries == shots; condensation at 51 only (49/50/51)";
}

std::string eval_arithmetic() {
    std::vector<eval::VideoLabels> labels;
    // 58 videos: 44 with no error, 12 with one, one with two, one with five.
    for (int i = 0; i < 58; ++i) {
        eval::VideoLabels l;
        l.video_id = fmt::format("v{:02}", i);
        l.type = eval::DescriptionType::Short;
        l.errors = i < 44 ? 0 : i < 56 ? 1 : i == 56 ? 2 : 5;
        labels.push_back(l);
    }
    // Coverage subset: 8 videos with 4 key points each.
    const int covered[8] = {4, 3, 2, 4, 3, 2, 4, 2};
    for (int i = 0; i < 8; ++i) {
        eval::VideoLabels l;
        l.video_id = fmt::format("c{}", i);
        l.type = eval::DescriptionType::Short;
        l.covered = covered[i];
        l.total = 4;
        labels.push_back(l);
    }
    const auto report = eval::build_report(labels);
    const auto& row = report.rows[0];
    expect(row.errors && row.coverage, "short row incomplete");
    expect(row.errors->videos == 58, "expected 58 labelled videos");
    expect(row.errors->total == 19, fmt::format("total errors {} != 19", row.errors->total));
    expect(std::abs(row.errors->mean - 0.33) <= 0.01, fmt::format("mean errors {:.4f} not within 0.01 of 0.33",
                                                                  row.errors->mean));
    expect(std::abs(row.coverage->mean - 75.0) <= 0.01,
           fmt::format("mean coverage {:.4f} not within 0.01 of 75", row.coverage->mean));
    return fmt::format("short: mu={:.4f} total={} over {} videos; coverage mu={:.2f}% over {} videos",
                       row.errors->mean, row.errors->total, row.errors->videos, row.coverage->mean, row.coverage->n);
}

std::string api_contract() {
    synth::TempDir dir("accept-api");
    std::filesystem::create_directories(dir / "videos");
    std::string meta = "[";
    for (int i = 0; i < 25; ++i) {
        const auto name = fmt::format("clip{:02}.ssraw", i);
        synth::write_video(dir / "videos" / name, synth::shots_of({static_cast<std::uint8_t>(i * 9), 250}, 3 + i % 4),
                           8, 6);
        meta += fmt::format("{}{{\"file\":\"{}\",\"username\":\"@user{}\",\"likes\":{}}}", i ? "," : "", name, i, i);
    }
    std::ofstream(dir / "meta.json") << meta << "]";

    pipeline::PipelineConfig cfg;
    cfg.store_dir = dir / "store";
    const auto ids = pipeline::cmd_ingest(cfg, dir / "videos", dir / "meta.json");
    expect(ids.size() == 25, "ingest did not return 25 ids");
    pipeline::DescribeOptions opt;
    opt.all = true;
    expect(pipeline::cmd_describe(cfg, opt).ok(), "describe failed");

    // No viewer assets: static_dir is left empty.
    store::DocumentStore st(cfg.store_dir);
    store::EventLog events(cfg.store_dir / "events.jsonl");
    store::ApiServer server(st, events, {"127.0.0.1", 0, {}});
    server.bind();
    server.start_background();
    httplib::Client c("127.0.0.1", server.port());

    std::vector<std::string> paged;
    std::vector<std::size_t> sizes;
    std::string cursor;
    for (int guard = 0; guard < 10; ++guard) {
        auto res = c.Get("/api/feed?limit=10" + (cursor.empty() ? std::string() : "&cursor=" + cursor));
        expect(res && res->status == 200, "feed request failed");
        const auto j = json::parse(res->body);
        expect(j.at("schema_version") == store::kSchemaVersion, "feed lacks schema_version");
        sizes.push_back(j.at("items").size());
        for (const auto& item : j.at("items")) paged.push_back(item.at("video_id"));
        if (j.at("next_cursor").is_null()) break;
        cursor = j.at("next_cursor");
    }
    expect(sizes == std::vector<std::size_t>{10, 10, 5}, fmt::format("page sizes {}", fmt::join(sizes, ",")));
    expect(paged == ids, "paged ids differ from ingested ids");

    for (const auto& id : ids) {
        auto res = c.Get("/api/videos/" + id);
        expect(res && res->status == 200, "document fetch failed for " + id);
        const auto served = store::feed_document_from_json(json::parse(res->body));
        expect(served == st.load_document(id), "document did not round-trip for " + id);
        auto d = c.Get("/api/videos/" + id + "/descriptions");
        expect(d && d->status == 200, "description fetch failed for " + id);
        auto m = c.Get("/media/" + id);
        expect(m && m->status == 200 && m->body == util::read_file(*st.media_path(id)), "media mismatch for " + id);
    }

    const std::vector<std::string> controls = {"play", "pause", "next", "open_descriptions", "close_descriptions",
                                               "like", "prev", "bookmark", "share", "comment"};
    std::vector<std::uint64_t> seqs;
    for (std::size_t i = 0; i < 40; ++i) {
        const json body = {{"session_id", i % 2 ? "alice" : "bob"},
                           {"video_id", ids[i % ids.size()]},
                           {"control", controls[i % controls.size()]},
                           {"timestamp", 1000 + static_cast<int>(i)}};
        auto res = c.Post("/api/events", body.dump(), "application/json");
        expect(res && res->status == 201, "event POST rejected");
        seqs.push_back(json::parse(res->body).at("seq"));
    }
    expect(std::is_sorted(seqs.begin(), seqs.end()) && std::adjacent_find(seqs.begin(), seqs.end()) == seqs.end(),
           "event sequence numbers are not strictly increasing");
    server.stop();

    store::EventLog reread(cfg.store_dir / "events.jsonl");
    for (const std::string who : {"alice", "bob"}) {
        const auto evs = reread.session_events(who);
        expect(evs.size() == 20, who + ": persisted event count");
        for (std::size_t k = 0; k < evs.size(); ++k) {
            const std::size_t i = k * 2 + (who == "alice" ? 1 : 0);
            expect(evs[k].timestamp_ms == 1000 + static_cast<std::int64_t>(i) &&
                       std::string(store::to_string(evs[k].control)) == controls[i % controls.size()],
                   who + ": persisted events out of order");
        }
    }
    return "25 videos paged 10/10/5 losslessly; documents round-trip; 40 events persisted in order; no viewer";
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"shot-segmentation-oracle", shot_segmentation},
        {"keyframe-rule", keyframe_rule},
        {"ocr-filter-properties", ocr_filter},
        {"prompt-fidelity", prompt_fidelity},
        {"end-to-end-determinism", end_to_end_determinism},
        {"eval-arithmetic", eval_arithmetic},
        {"api-contract", api_contract},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        try {
            const auto detail = c.run();
            std::printf("PASS %-26s %s\n", c.name.c_str(), detail.c_str());
        } catch (const Failure& f) {
            ++failed;
            std::printf("FAIL %-26s %s\n", c.name.c_str(), f.what.c_str());
        } catch (const std::exception& e) {
            ++failed;
            std::printf("FAIL %-26s unexpected error: %s\n", c.name.c_str(), e.what());
        }
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
