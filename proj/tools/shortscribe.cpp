// shortscribe: ingest short-form videos, generate descriptions, serve the
// feed API and compute evaluation statistics.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/pipeline.hpp"

namespace ss = shortscribe;
namespace pl = shortscribe::pipeline;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPartial = 1;
constexpr int kExitUsage = 2;

struct CommonFlags {
    std::optional<std::string> config;
    std::optional<std::string> store;
    std::optional<std::string> prompt_dir;
    std::optional<std::string> lexicon;
    std::optional<std::string> decoder;
    std::optional<double> scene_threshold;
    std::optional<double> sample_fps;
    std::optional<std::size_t> concurrency;
};

void add_common(CLI::App& app, CommonFlags& f) {
    app.add_option("--config", f.config, "JSON config file (see README for the schema)")->check(CLI::ExistingFile);
    app.add_option("--store", f.store, "Store directory (default: shortscribe-store)");
    app.add_option("--prompt-dir", f.prompt_dir, "Directory holding the four prompt templates");
    app.add_option("--lexicon", f.lexicon, "Content-filter lexicon, one entry per line");
    app.add_option("--decoder", f.decoder, "Decoder command emitting raw frames; {path} is replaced by the video path");
    app.add_option("--scene-threshold", f.scene_threshold, "Shot boundary threshold on mean luma difference, in [0,1]");
    app.add_option("--sample-fps", f.sample_fps, "Decimate decoded frames to this rate");
    app.add_option("--concurrency", f.concurrency, "Maximum videos (and shots) processed at once");
}

pl::PipelineConfig resolve(const CommonFlags& f) {
    std::optional<std::filesystem::path> file;
    if (f.config) file = *f.config;
    auto cfg = pl::load_config(file);
    if (f.store) cfg.store_dir = *f.store;
    if (f.prompt_dir) cfg.prompt_dir = *f.prompt_dir;
    if (f.lexicon) cfg.lexicon_file = *f.lexicon;
    if (f.decoder) cfg.decoder_command = *f.decoder;
    if (f.scene_threshold) cfg.scene_threshold = *f.scene_threshold;
    if (f.sample_fps) cfg.sample_fps = *f.sample_fps;
    if (f.concurrency) cfg.concurrency = *f.concurrency;
    cfg.validate();
    return cfg;
}

void print_line(const std::string& line) {
    std::fputs((line + "\n").c_str(), stderr);
    std::fflush(stderr);
}

bool is_usage_error(ss::ErrorCode code) {
    return code == ss::ErrorCode::ConfigError || code == ss::ErrorCode::MetadataMissing ||
           code == ss::ErrorCode::LabelSchemaError || code == ss::ErrorCode::PortInUse;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate accessible descriptions for short-form videos"};
    app.require_subcommand(1);

    // Common flags are accepted before or after the subcommand name.
    CommonFlags common;
    add_common(app, common);

    auto* ingest = app.add_subcommand("ingest", "Copy videos and their metadata into the store");
    add_common(*ingest, common);
    std::string ingest_path, metadata_file;
    ingest->add_option("path", ingest_path, "Video file or directory of videos")->required();
    ingest->add_option("--metadata", metadata_file, "JSON metadata rows keyed by file name")
        ->required()
        ->check(CLI::ExistingFile);

    auto* describe = app.add_subcommand("describe", "Generate description sets for ingested videos");
    add_common(*describe, common);
    std::vector<std::string> describe_ids;
    bool describe_all = false, force = false;
    std::string backends = "stub";
    std::optional<int> stub_long_words;
    describe->add_option("ids", describe_ids, "Video ids to describe");
    describe->add_flag("--all", describe_all, "Describe every video in the store");
    describe->add_flag("--force", force, "Regenerate even when the inputs are unchanged");
    describe->add_option("--backends", backends, "Model backends: stub (offline, deterministic) or live")
        ->check(CLI::IsMember({"stub", "live"}));
    describe->add_option("--stub-long-words", stub_long_words, "Stub LLM: pad or truncate long descriptions to N words")
        ->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "Serve the feed API and viewer assets");
    add_common(*serve, common);
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::string> static_dir;
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->add_option("--static", static_dir, "Viewer asset directory served at /");

    auto* evalc = app.add_subcommand("eval", "Compute evaluation statistics from rater labels");
    add_common(*evalc, common);
    std::string labels_file, json_out = "eval_report.json";
    bool no_store_words = false;
    evalc->add_option("labels", labels_file, "Labels file (.csv or .json)")->required();
    evalc->add_option("--json-out", json_out, "Where to write the JSON report");
    evalc->add_flag("--no-store-words", no_store_words, "Skip word counts from described videos in the store");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        auto cfg = resolve(common);

        if (*ingest) {
            const auto ids = pl::cmd_ingest(cfg, ingest_path, metadata_file, print_line);
            for (const auto& id : ids) std::cout << id << "\n";
            return kExitOk;
        }

        if (*describe) {
            if (describe_ids.empty() && !describe_all) {
                std::cerr << "describe: pass video ids or --all\n";
                return kExitUsage;
            }
            pl::DescribeOptions opt;
            opt.ids = describe_ids;
            opt.all = describe_all;
            opt.force = force;
            opt.mode = backends == "live" ? pl::BackendMode::Live : pl::BackendMode::Stub;
            opt.stub.long_words = stub_long_words;
            const auto report = pl::cmd_describe(cfg, opt, print_line);
            std::cout << report.format();
            return report.ok() ? kExitOk : kExitPartial;
        }

        if (*serve) {
            if (static_dir) cfg.static_dir = *static_dir;
            // Block SIGINT/SIGTERM in every thread; a dedicated thread waits
            // for them and exits the process cleanly.
            sigset_t set;
            sigemptyset(&set);
            sigaddset(&set, SIGINT);
            sigaddset(&set, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &set, nullptr);
            std::thread([set] {
                int sig = 0;
                sigwait(&set, &sig);
                std::fputs("shutting down\n", stderr);
                std::exit(kExitOk);
            }).detach();
            pl::cmd_serve(cfg, host, port, print_line);
            return kExitOk;
        }

        if (*evalc) {
            const auto out = pl::cmd_eval(cfg, labels_file, json_out, !no_store_words);
            std::cout << out.table;
            return kExitOk;
        }
    } catch (const ss::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_usage_error(e.code()) ? kExitUsage : kExitPartial;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitPartial;
    }
    return kExitUsage;
}
