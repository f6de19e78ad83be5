#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <fmt/format.h>
#include <map>
#include <sys/wait.h>

#include "shortscribe/error.hpp"
#include "shortscribe/pipeline.hpp"
#include "shortscribe/util.hpp"
#include "synth.hpp"

using namespace shortscribe;
using namespace shortscribe::pipeline;
using nlohmann::json;

namespace {

/// Three small videos with 3, 2 and 1 shots plus metadata rows.
struct Corpus {
    synth::TempDir dir{"corpus"};
    std::filesystem::path videos = dir / "videos";
    std::filesystem::path metadata = dir / "metadata.json";

    Corpus() {
        std::filesystem::create_directories(videos);
        synth::write_video(videos / "pancakes.ssraw", synth::shots_of({20, 200, 80}, 15));
        synth::write_video(videos / "dog.ssraw", synth::shots_of({230, 30}, 20));
        synth::write_video(videos / "cat.ssraw", synth::shots_of({128}, 12));
        std::ofstream(videos / "pancakes.ssraw.asr.json")
            << R"([{"start_s":0.1,"end_s":0.9,"text":"today we are making pancakes"}])";
        std::ofstream(metadata) << R"([
          {"file":"pancakes.ssraw","username":"@flapjack.jo","caption":"Best pancakes ever","audio_title":"Sunny Side Loop","likes":10,"comments":2,"bookmarks":3,"shares":4},
          {"file":"dog.ssraw","username":"@dog","caption":"good boy","audio_title":"original sound"},
          {"file":"cat.ssraw","username":"@cat"}
        ])";
    }

    PipelineConfig config() const {
        PipelineConfig cfg;
        cfg.store_dir = dir / "store";
        return cfg;
    }
};

std::map<std::string, std::string> stored_sets(const PipelineConfig& cfg) {
    std::map<std::string, std::string> out;
    store::DocumentStore st(cfg.store_dir);
    for (const auto& id : st.ids()) {
        const auto doc = st.load_document(id);
        out[id] = doc.description_set ? store::to_json(*doc.description_set).dump() : std::string();
    }
    return out;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(SHORTSCRIBE_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config layering: defaults, file, environment") {
    synth::TempDir dir;
    std::ofstream(dir / "cfg.json") << R"({"scene_threshold":0.3,"concurrency":2,"backends":{"llm":{"url":"http://x/llm","retries":1}}})";
    std::map<std::string, std::string> env = {{"SS_SCENE_THRESHOLD", "0.25"}, {"SS_OCR_URL", "http://ocr"}};
    const auto getenv = [&](const char* k) -> const char* {
        const auto it = env.find(k);
        return it == env.end() ? nullptr : it->second.c_str();
    };
    const auto cfg = load_config(dir / "cfg.json", getenv);
    CHECK(cfg.scene_threshold == 0.25);
    CHECK(cfg.concurrency == 2);
    CHECK(cfg.backends.llm.url == "http://x/llm");
    CHECK(cfg.backends.llm.retries == 1);
    CHECK(cfg.backends.ocr.url == "http://ocr");
    CHECK(cfg.backends.ocr.key_env == "SS_OCR_KEY");
    CHECK(cfg.caption.num_candidates == 5);

    const auto defaults = load_config(std::nullopt, [](const char*) -> const char* { return nullptr; });
    CHECK(defaults.scene_threshold == 0.4);
    defaults.validate();

    std::ofstream(dir / "typo.json") << R"({"scene_treshold":0.3})";
    CHECK_THROWS_WITH_AS(load_config(dir / "typo.json", getenv), doctest::Contains("ConfigError"), Error);

    PipelineConfig bad;
    bad.scene_threshold = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.prompt_dir = dir / "nowhere";
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.lexicon_file = dir / "missing.txt";
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("ingest: ids, idempotence, metadata errors") {
    Corpus c;
    const auto cfg = c.config();
    const auto ids = cmd_ingest(cfg, c.videos, c.metadata);
    CHECK(ids.size() == 3);
    for (const auto& id : ids) CHECK(id.size() == 16);
    CHECK(cmd_ingest(cfg, c.videos, c.metadata) == ids);

    store::DocumentStore st(cfg.store_dir);
    CHECK(st.ids().size() == 3);
    const auto pancakes = st.load_document(video_id_for(c.videos / "pancakes.ssraw"));
    CHECK(pancakes.username == "@flapjack.jo");
    CHECK(pancakes.likes == 10);
    CHECK_FALSE(pancakes.description_set.has_value());
    CHECK(st.media_path(pancakes.video_id).has_value());

    synth::write_video(c.videos / "orphan.ssraw", {1, 2, 3});
    try {
        cmd_ingest(cfg, c.videos, c.metadata);
        FAIL("expected MetadataMissing");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MetadataMissing);
        CHECK(std::string(e.what()).find("orphan.ssraw") != std::string::npos);
    }
    std::filesystem::remove(c.videos / "orphan.ssraw");

    std::ofstream(c.videos / "broken.mp4") << "";
    std::ofstream(c.dir / "meta2.json") << R"([{"file":"broken.mp4","username":"x"}])";
    CHECK_THROWS_WITH_AS(cmd_ingest(cfg, c.videos / "broken.mp4", c.dir / "meta2.json"),
                         doctest::Contains("UndecodableMedia"), Error);
}

TEST_CASE("describe: stub backends, skip on unchanged inputs, force") {
    Corpus c;
    const auto cfg = c.config();
    const auto ids = cmd_ingest(cfg, c.videos, c.metadata);

    DescribeOptions opt;
    opt.all = true;
    std::vector<std::string> progress;
    const auto report = cmd_describe(cfg, opt, [&](const std::string& l) { progress.push_back(l); });
    CHECK(report.ok());
    REQUIRE(report.videos.size() == 3);
    CHECK(progress.size() == 3);
    for (const auto& v : report.videos) {
        CHECK(v.status == VideoOutcome::Status::Described);
        for (const auto* stage : {"media", "extraction", "summarize", "store"}) CHECK(v.stage_ms.count(stage) == 1);
    }

    store::DocumentStore st(cfg.store_dir);
    const std::map<std::string, std::size_t> expected_shots = {
        {video_id_for(c.videos / "pancakes.ssraw"), 3}, {video_id_for(c.videos / "dog.ssraw"), 2},
        {video_id_for(c.videos / "cat.ssraw"), 1}};
    for (const auto& [id, n] : expected_shots) {
        const auto doc = st.load_document(id);
        REQUIRE(doc.description_set.has_value());
        CHECK(doc.description_set->shot_by_shot.size() == n);
        summarize::validate(*doc.description_set);
    }
    const auto first = stored_sets(cfg);

    const auto again = cmd_describe(cfg, opt);
    for (const auto& v : again.videos) CHECK(v.status == VideoOutcome::Status::Skipped);
    CHECK(again.format().find("skipped") != std::string::npos);

    opt.force = true;
    const auto forced = cmd_describe(cfg, opt);
    for (const auto& v : forced.videos) CHECK(v.status == VideoOutcome::Status::Described);
    CHECK(stored_sets(cfg) == first);

    // A different stub configuration changes the input hash.
    opt.force = false;
    opt.stub.long_words = 60;
    const auto changed = cmd_describe(cfg, opt);
    for (const auto& v : changed.videos) CHECK(v.status == VideoOutcome::Status::Described);
    for (const auto& id : ids) CHECK(st.load_document(id).description_set->fifty_word.has_value());
}

TEST_CASE("describe: unreachable live backend fails the video and names the role") {
    Corpus c;
    auto cfg = c.config();
    cmd_ingest(cfg, c.videos / "cat.ssraw", c.metadata);
    cfg.backends.asr.url = "http://127.0.0.1:1/asr";
    cfg.backends.ocr.url = "http://127.0.0.1:1/ocr";
    cfg.backends.caption.url = "http://127.0.0.1:1/caption";
    cfg.backends.embed.url = "http://127.0.0.1:1/embed";
    cfg.backends.llm.url = "http://127.0.0.1:1/llm";
    for (auto* b : {&cfg.backends.asr, &cfg.backends.ocr, &cfg.backends.caption, &cfg.backends.embed, &cfg.backends.llm}) {
        b->retries = 0;
        b->timeout_s = 1;
    }
    DescribeOptions opt;
    opt.all = true;
    opt.mode = BackendMode::Live;
    const auto report = cmd_describe(cfg, opt);
    CHECK_FALSE(report.ok());
    REQUIRE(report.videos.size() == 1);
    const auto& v = report.videos[0];
    CHECK(v.status == VideoOutcome::Status::Failed);
    CHECK(v.failed_stage == "extraction");
    CHECK(v.error.find("BackendUnavailable") != std::string::npos);
    const bool names_role = v.error.find("asr backend") != std::string::npos ||
                            v.error.find("ocr backend") != std::string::npos;
    CHECK(names_role);
    CHECK(report.format().find("FAILED") != std::string::npos);

    store::DocumentStore st(cfg.store_dir);
    CHECK_FALSE(st.load_document(v.video_id).description_set.has_value());
}

TEST_CASE("describe: unknown id is reported, not fatal") {
    Corpus c;
    const auto cfg = c.config();
    cmd_ingest(cfg, c.videos / "cat.ssraw", c.metadata);
    DescribeOptions opt;
    opt.ids = {"0000000000000000"};
    const auto report = cmd_describe(cfg, opt);
    CHECK_FALSE(report.ok());
    CHECK(report.videos[0].error.find("NotFound") != std::string::npos);
}

TEST_CASE("serve: feed lists ingested ids; busy port is PortInUse") {
    Corpus c;
    const auto cfg = c.config();
    const auto ids = cmd_ingest(cfg, c.videos, c.metadata);

    store::DocumentStore st(cfg.store_dir);
    store::EventLog events(cfg.store_dir / "events.jsonl");
    store::ApiServer server(st, events, {"127.0.0.1", 0, {}});
    server.bind();
    server.start_background();
    httplib::Client client("127.0.0.1", server.port());
    auto res = client.Get("/api/feed");
    REQUIRE(res);
    std::vector<std::string> served;
    const auto feed = json::parse(res->body);
    for (const auto& item : feed.at("items")) served.push_back(item.at("video_id"));
    CHECK(served == ids);

    CHECK_THROWS_WITH_AS(cmd_serve(cfg, "127.0.0.1", server.port()), doctest::Contains("PortInUse"), Error);
    server.stop();
}

TEST_CASE("eval command: report, json output, errors") {
    synth::TempDir dir;
    PipelineConfig cfg;
    cfg.store_dir = dir / "no-store";
    {
        std::ofstream out(dir / "labels.csv");
        out << "video_id,dtype,errors,covered,total\n";
        for (int i = 0; i < 58; ++i) {
            const int errors = i < 44 ? 0 : i < 56 ? 1 : i == 56 ? 2 : 5;
            out << "v" << i << ",short," << errors << ",,\n";
        }
        const int covered[8] = {4, 3, 2, 4, 3, 2, 4, 2};
        for (int i = 0; i < 8; ++i) out << "c" << i << ",short,," << covered[i] << ",4\n";
    }
    const auto out = cmd_eval(cfg, dir / "labels.csv", dir / "report.json");
    const auto& row = out.report.rows[0];
    CHECK(row.errors->total == 19);
    CHECK(std::abs(row.errors->mean - 0.33) <= 0.01);
    CHECK(std::abs(row.coverage->mean - 75.0) <= 0.01);
    CHECK(out.table.find("0.33") != std::string::npos);
    CHECK(out.table.find("75%") != std::string::npos);
    const auto written = json::parse(util::read_file(dir / "report.json"));
    CHECK(written.at("types")[0].at("errors").at("total") == 19);

    std::ofstream(dir / "empty.csv") << "video_id,dtype,errors,covered,total\n";
    const auto empty = cmd_eval(cfg, dir / "empty.csv", {});
    for (const auto& r : empty.report.rows) CHECK(r.errors->total == 0);

    std::ofstream(dir / "bad.csv") << "video_id,dtype,errors,covered,total\nv1,short,one,,\n";
    CHECK_THROWS_WITH_AS(cmd_eval(cfg, dir / "bad.csv", {}), doctest::Contains("line 2"), Error);
}

TEST_CASE("cli: exit codes and determinism end to end") {
    Corpus c;
    const std::string store = "--store " + (c.dir / "store").string();
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("describe --help") == 0);
    CHECK(run_cli("describe --bogus") == 2);
    CHECK(run_cli("frobnicate") == 2);
    CHECK(run_cli("describe --all --backends magic " + store) == 2);
    CHECK(run_cli("describe " + store) == 2);
    CHECK(run_cli("ingest " + c.videos.string() + " --metadata " + c.metadata.string() + " " + store) == 0);
    CHECK(run_cli("describe --all --backends stub " + store) == 0);
    CHECK(run_cli("describe --all --scene-threshold 0 " + store) == 2);
    CHECK(run_cli("describe --all --backends live " + store) == 2);  // no backend URLs configured
    CHECK(run_cli("describe 0000000000000000 " + store) == 1);

    std::ofstream(c.dir / "labels.csv") << "video_id,dtype,errors,covered,total\nv,short,x,,\n";
    CHECK(run_cli("eval " + (c.dir / "labels.csv").string() + " " + store) == 2);
}
