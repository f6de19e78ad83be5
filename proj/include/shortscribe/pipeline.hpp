#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eval.hpp"
#include "extraction.hpp"
#include "store.hpp"
#include "summarize.hpp"

namespace shortscribe::pipeline {

enum class BackendMode { Stub, Live };

struct PipelineConfig {
    double scene_threshold = media::kDefaultSceneThreshold;
    std::optional<double> sample_fps;
    extraction::CaptionParams caption;
    double min_ocr_confidence = extraction::kMinOcrConfidence;
    std::vector<std::string> watermark_patterns = extraction::default_watermark_patterns();
    extraction::LiveBackendConfigs backends;
    int summary_retries = 2;
    std::filesystem::path prompt_dir = SHORTSCRIBE_DEFAULT_PROMPT_DIR;
    std::filesystem::path store_dir = "shortscribe-store";
    std::filesystem::path lexicon_file;  // empty == no filtering
    std::filesystem::path static_dir;    // viewer assets, optional
    std::string decoder_command = "ffmpeg-rawframes {path}";
    std::size_t concurrency = 4;

    /// ConfigError for out-of-range values.
    void validate() const;
};

/// Layering: defaults < JSON config file < SS_* environment variables.
/// Command-line flags are applied by the caller on top.
PipelineConfig load_config(const std::optional<std::filesystem::path>& config_file,
                           const std::function<const char*(const char*)>& getenv = ::getenv);
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
void apply_env(PipelineConfig& cfg, const std::function<const char*(const char*)>& getenv);

/// Line-oriented progress sink; calls are serialized by the commands.
using ProgressSink = std::function<void(const std::string& line)>;

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

struct VideoMetadata {
    std::string file;
    std::string username;
    std::string caption;
    std::string audio_title;
    std::int64_t likes = 0;
    std::int64_t comments = 0;
    std::int64_t bookmarks = 0;
    std::int64_t shares = 0;
};

/// JSON array (or {"videos": [...]}) of objects keyed by file name.
std::vector<VideoMetadata> load_metadata(const std::filesystem::path& path);

/// Content-hash id (first 16 hex digits of SHA-256 of the file bytes).
std::string video_id_for(const std::filesystem::path& video);

/// Copies each video into the store and creates a FeedDocument without
/// descriptions. Idempotent: re-ingesting the same bytes yields the same id
/// and keeps any existing description set.
std::vector<std::string> cmd_ingest(const PipelineConfig& cfg, const std::filesystem::path& path_or_dir,
                                    const std::filesystem::path& metadata_file, const ProgressSink& progress = {});

// ---------------------------------------------------------------------------
// describe
// ---------------------------------------------------------------------------

struct DescribeOptions {
    std::vector<std::string> ids;  // empty + all == every stored id
    bool all = false;
    bool force = false;
    BackendMode mode = BackendMode::Stub;
    extraction::StubOptions stub;
    /// Overrides the backend set (tests); takes precedence over mode.
    std::optional<extraction::Backends> backends;
};

struct VideoOutcome {
    std::string video_id;
    enum class Status { Described, Skipped, Failed } status = Status::Failed;
    std::string failed_stage;
    std::string error;
    std::map<std::string, double> stage_ms;
};

struct DescribeReport {
    std::vector<VideoOutcome> videos;
    bool ok() const;
    std::string format() const;
};

DescribeReport cmd_describe(const PipelineConfig& cfg, const DescribeOptions& options,
                            const ProgressSink& progress = {});

/// Hash of everything that determines a description set for this video.
std::string describe_input_hash(const PipelineConfig& cfg, const std::string& media_hash,
                                const summarize::PromptLibrary& prompts, const extraction::Backends& backends);

// ---------------------------------------------------------------------------
// serve / eval
// ---------------------------------------------------------------------------

/// Blocks serving the HTTP API. PortInUse when the port is taken.
void cmd_serve(const PipelineConfig& cfg, const std::string& host, int port, const ProgressSink& progress = {});

struct EvalOutput {
    eval::EvalReport report;
    std::string table;
    nlohmann::ordered_json json;
};

/// When the store directory holds described documents their word counts are
/// included. Writes the JSON report to `json_out` when non-empty.
EvalOutput cmd_eval(const PipelineConfig& cfg, const std::filesystem::path& labels_file,
                    const std::filesystem::path& json_out, bool include_store_words = true);

}  // namespace shortscribe::pipeline
