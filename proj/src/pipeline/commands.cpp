#include <algorithm>
#include <chrono>
#include <mutex>
#include <set>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/parallel.hpp"
#include "shortscribe/pipeline.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string>& video_extensions() {
    static const std::set<std::string> kExt = {".mp4", ".m4v", ".mov", ".webm", ".mkv", ".avi", ".ssraw"};
    return kExt;
}

store::ContentLexicon lexicon_for(const PipelineConfig& cfg) {
    return cfg.lexicon_file.empty() ? store::ContentLexicon{} : store::ContentLexicon::load(cfg.lexicon_file);
}

media::DecoderOptions decoder_for(const PipelineConfig& cfg) {
    media::DecoderOptions d;
    d.sample_fps = cfg.sample_fps;
    d.decoder_command = cfg.decoder_command;
    return d;
}

/// Serializes progress lines from concurrent workers.
class Progress {
public:
    explicit Progress(const ProgressSink& sink) : sink_(sink) {}
    void operator()(const std::string& line) {
        if (!sink_) return;
        std::lock_guard lock(m_);
        sink_(line);
    }

private:
    const ProgressSink& sink_;
    std::mutex m_;
};

std::string stage_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::UndecodableMedia:
        case ErrorCode::EmptyVideo:
        case ErrorCode::DimensionMismatch: return "media";
        case ErrorCode::BackendUnavailable:
        case ErrorCode::BackendMalformedResponse:
        case ErrorCode::MissingCaption: return "extraction";
        default: return "extraction";
    }
}

}  // namespace

std::vector<VideoMetadata> load_metadata(const fs::path& path) {
    json j;
    try {
        j = json::parse(util::read_file(path));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MetadataMissing, fmt::format("{}: {}", path.string(), e.what()));
    } catch (const Error&) {
        throw Error(ErrorCode::MetadataMissing, "cannot read metadata file " + path.string());
    }
    if (j.is_object() && j.contains("videos")) j = j.at("videos");
    if (!j.is_array()) throw Error(ErrorCode::MetadataMissing, path.string() + ": expected an array of video rows");
    std::vector<VideoMetadata> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& e = j[i];
        try {
            VideoMetadata m;
            m.file = e.at("file").get<std::string>();
            m.username = e.at("username").get<std::string>();
            m.caption = e.value("caption", std::string());
            m.audio_title = e.value("audio_title", std::string());
            m.likes = e.value("likes", std::int64_t{0});
            m.comments = e.value("comments", std::int64_t{0});
            m.bookmarks = e.value("bookmarks", std::int64_t{0});
            m.shares = e.value("shares", std::int64_t{0});
            out.push_back(std::move(m));
        } catch (const json::exception& ex) {
            throw Error(ErrorCode::MetadataMissing, fmt::format("{}: row {}: {}", path.string(), i, ex.what()));
        }
    }
    return out;
}

std::string video_id_for(const fs::path& video) { return util::sha256_file_hex(video).substr(0, 16); }

std::vector<std::string> cmd_ingest(const PipelineConfig& cfg, const fs::path& path_or_dir, const fs::path& metadata_file,
                                    const ProgressSink& progress) {
    std::vector<fs::path> files;
    if (fs::is_directory(path_or_dir)) {
        for (const auto& entry : fs::directory_iterator(path_or_dir)) {
            if (entry.is_regular_file() && video_extensions().count(util::to_lower(entry.path().extension().string())))
                files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(path_or_dir)) {
        files.push_back(path_or_dir);
    } else {
        throw Error(ErrorCode::UndecodableMedia, "no such file or directory: " + path_or_dir.string());
    }

    std::map<std::string, VideoMetadata> by_file;
    for (auto& m : load_metadata(metadata_file)) by_file[fs::path(m.file).filename().string()] = std::move(m);
    for (const auto& f : files)
        if (!by_file.count(f.filename().string()))
            throw Error(ErrorCode::MetadataMissing, fmt::format("no metadata row for {}", f.filename().string()));

    // Probe everything before touching the store so a bad file leaves it unchanged.
    auto decoder = decoder_for(cfg);
    decoder.keep_rgb = false;
    for (const auto& f : files) media::decode_frames(f, decoder);

    store::DocumentStore store(cfg.store_dir, lexicon_for(cfg));
    std::vector<std::string> ids;
    for (const auto& f : files) {
        const auto& meta = by_file.at(f.filename().string());
        const std::string id = video_id_for(f);
        const auto ext = util::to_lower(f.extension().string());
        const auto media_path = store.media_dir() / (id + ext);
        if (!fs::exists(media_path)) fs::copy_file(f, media_path);
        auto sidecar = f;
        sidecar += ".asr.json";
        if (fs::exists(sidecar)) {
            auto dest = media_path;
            dest += ".asr.json";
            fs::copy_file(sidecar, dest, fs::copy_options::overwrite_existing);
        }

        store::FeedDocument doc;
        if (store.contains(id)) doc = store.load_document(id);
        doc.video_id = id;
        doc.username = meta.username;
        doc.author_caption = meta.caption;
        doc.audio_title = meta.audio_title;
        doc.likes = meta.likes;
        doc.comments = meta.comments;
        doc.bookmarks = meta.bookmarks;
        doc.shares = meta.shares;
        doc.video_url = "/media/" + id;
        store.save_document(doc);
        ids.push_back(id);
        if (progress) progress(fmt::format("ingested {} as {}", f.filename().string(), id));
    }
    return ids;
}

std::string describe_input_hash(const PipelineConfig& cfg, const std::string& media_hash,
                                const summarize::PromptLibrary& prompts, const extraction::Backends& backends) {
    nlohmann::ordered_json j;
    j["media"] = media_hash;
    for (const auto kind : summarize::kAllPromptKinds) j["prompts"][std::string(to_string(kind))] = prompts.hash(kind);
    j["backends"] = {backends.asr->id(), backends.ocr->id(), backends.caption->id(), backends.embed->id(),
                     backends.llm->id(), backends.llm->model_id()};
    j["llm_temperature"] = backends.llm->temperature();
    j["scene_threshold"] = cfg.scene_threshold;
    j["sample_fps"] = cfg.sample_fps ? json(*cfg.sample_fps) : json(nullptr);
    j["caption"] = {cfg.caption.num_candidates, cfg.caption.min_words, cfg.caption.max_words, cfg.caption.top_p,
                    cfg.caption.temperature, cfg.caption.sampling};
    j["min_ocr_confidence"] = cfg.min_ocr_confidence;
    j["watermark_patterns"] = cfg.watermark_patterns;
    j["summary_retries"] = cfg.summary_retries;
    return util::sha256_hex(j.dump());
}

bool DescribeReport::ok() const {
    return std::none_of(videos.begin(), videos.end(),
                        [](const auto& v) { return v.status == VideoOutcome::Status::Failed; });
}

std::string DescribeReport::format() const {
    std::string out;
    for (const auto& v : videos) {
        switch (v.status) {
            case VideoOutcome::Status::Described: {
                std::vector<std::string> stages;
                for (const auto& [stage, ms] : v.stage_ms) stages.push_back(fmt::format("{}={:.1f}ms", stage, ms));
                out += fmt::format("{}  described  {}\n", v.video_id, util::join(stages, " "));
                break;
            }
            case VideoOutcome::Status::Skipped: out += fmt::format("{}  skipped    already described\n", v.video_id); break;
            case VideoOutcome::Status::Failed:
                out += fmt::format("{}  FAILED     stage={} {}\n", v.video_id, v.failed_stage, v.error);
                break;
        }
    }
    return out;
}

DescribeReport cmd_describe(const PipelineConfig& cfg, const DescribeOptions& options, const ProgressSink& sink) {
    cfg.validate();
    if (!fs::is_directory(cfg.store_dir))
        throw Error(ErrorCode::ConfigError, "store directory not found: " + cfg.store_dir.string());
    store::DocumentStore store(cfg.store_dir, lexicon_for(cfg));
    const auto prompts = summarize::PromptLibrary::load(cfg.prompt_dir);

    extraction::Backends backends;
    if (options.backends)
        backends = *options.backends;
    else if (options.mode == BackendMode::Stub)
        backends = extraction::make_stub_backends(options.stub);
    else
        backends = extraction::make_http_backends(cfg.backends);

    // Stub runs must be byte-reproducible, so they get a fixed clock.
    const bool fixed_clock = !options.backends && options.mode == BackendMode::Stub;
    const summarize::Clock clock =
        fixed_clock ? summarize::Clock([] { return std::string("1970-01-01T00:00:00Z"); }) : summarize::Clock(summarize::utc_now_iso8601);

    std::vector<std::string> ids = options.ids;
    if (options.all) {
        for (const auto& id : store.ids())
            if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }

    extraction::ExtractionOptions xopt;
    xopt.scene_threshold = cfg.scene_threshold;
    xopt.decoder = decoder_for(cfg);
    xopt.caption = cfg.caption;
    xopt.min_ocr_confidence = cfg.min_ocr_confidence;
    xopt.watermark_patterns = cfg.watermark_patterns;
    xopt.concurrency = cfg.concurrency;

    summarize::GenerationOptions gopt;
    gopt.summary_retries = cfg.summary_retries;

    Progress progress(sink);
    DescribeReport report;
    report.videos.resize(ids.size());

    util::parallel_for(ids.size(), cfg.concurrency, [&](std::size_t i) {
        using Ms = std::chrono::duration<double, std::milli>;
        auto& out = report.videos[i];
        out.video_id = ids[i];
        std::string stage = "lookup";
        try {
            auto doc = store.load_document(ids[i]);
            const auto media = store.media_path(ids[i]);
            if (!media) throw Error(ErrorCode::NotFound, "media file missing from store");
            const auto input_hash = describe_input_hash(cfg, util::sha256_file_hex(*media), prompts, backends);
            if (!options.force && doc.description_set && doc.description_set->meta.input_hash == input_hash) {
                out.status = VideoOutcome::Status::Skipped;
                progress(fmt::format("{}: skipped (already described)", ids[i]));
                return;
            }

            stage = "media";
            extraction::ExtractionResult ex;
            try {
                ex = extraction::run_extraction(*media, backends, xopt);
            } catch (const Error& e) {
                stage = stage_for(e.code());
                throw;
            }
            out.stage_ms = ex.timings_ms;

            stage = "summarize";
            const auto t0 = std::chrono::steady_clock::now();
            summarize::DescribeInputs inputs;
            inputs.shots = ex.shots;
            inputs.records = ex.records;
            inputs.input_hash = input_hash;
            inputs.backend_ids = {{"asr", backends.asr->id()},
                                  {"ocr", backends.ocr->id()},
                                  {"caption", backends.caption->id()},
                                  {"embed", backends.embed->id()}};
            doc.description_set = summarize::build_description_set(prompts, inputs, *backends.llm, gopt, clock);
            const auto t1 = std::chrono::steady_clock::now();
            out.stage_ms["summarize"] = Ms(t1 - t0).count();

            stage = "store";
            store.save_document(doc);
            out.stage_ms["store"] = Ms(std::chrono::steady_clock::now() - t1).count();
            out.status = VideoOutcome::Status::Described;
            progress(fmt::format("{}: described ({} shots)", ids[i], ex.shots.size()));
        } catch (const std::exception& e) {
            out.status = VideoOutcome::Status::Failed;
            out.failed_stage = stage;
            out.error = e.what();
            progress(fmt::format("{}: FAILED at {}: {}", ids[i], stage, e.what()));
        }
    });
    return report;
}

void cmd_serve(const PipelineConfig& cfg, const std::string& host, int port, const ProgressSink& progress) {
    if (!fs::is_directory(cfg.store_dir))
        throw Error(ErrorCode::ConfigError, "store directory not found: " + cfg.store_dir.string());
    store::DocumentStore store(cfg.store_dir, lexicon_for(cfg));
    store::EventLog events(cfg.store_dir / "events.jsonl");
    store::ApiServer server(store, events, {host, port, cfg.static_dir});
    server.bind();
    if (progress) progress(fmt::format("serving {} videos on http://{}:{}", store.ids().size(), host, server.port()));
    server.listen();
}

EvalOutput cmd_eval(const PipelineConfig& cfg, const fs::path& labels_file, const fs::path& json_out,
                    bool include_store_words) {
    const auto labels = eval::load_labels(labels_file);
    std::vector<summarize::DescriptionSet> sets;
    if (include_store_words && fs::is_directory(cfg.store_dir / "videos")) {
        store::DocumentStore store(cfg.store_dir);
        for (const auto& id : store.ids()) {
            auto doc = store.load_document(id);
            if (doc.description_set) sets.push_back(std::move(*doc.description_set));
        }
    }
    EvalOutput out;
    out.report = eval::build_report(labels, sets);
    out.table = eval::format_table(out.report);
    out.json = eval::to_json(out.report);
    if (!json_out.empty()) util::write_file_atomic(json_out, out.json.dump(2) + "\n");
    return out;
}

}  // namespace shortscribe::pipeline
