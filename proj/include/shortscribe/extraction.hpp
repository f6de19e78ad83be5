#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "media.hpp"

namespace shortscribe::extraction {

struct TranscriptSegment {
    double start_s = 0.0;
    double end_s = 0.0;
    std::string text;
    bool operator==(const TranscriptSegment&) const = default;
};

struct OcrSpan {
    std::string text;
    double confidence = 0.0;
    int shot_number = 0;
    bool operator==(const OcrSpan&) const = default;
};

struct CaptionCandidate {
    std::string text;
    double similarity = 0.0;
    int rank = 0;
    bool operator==(const CaptionCandidate&) const = default;
};

/// Keyframe captioning settings: nucleus sampling, 5..20 words, top-p 0.9, T=1.
struct CaptionParams {
    int num_candidates = 5;
    int min_words = 5;
    int max_words = 20;
    double top_p = 0.9;
    double temperature = 1.0;
    std::string sampling = "nucleus";
};

struct ShotRecord {
    int shot_number = 0;
    double duration_s = 0.0;
    std::string on_screen_text;
    std::string transcript_text;
    std::string visual_caption;
    bool operator==(const ShotRecord&) const = default;
};

enum class BackendRole { Asr, Ocr, Caption, Embed, Llm };
std::string_view to_string(BackendRole role) noexcept;

struct BackendConfig {
    std::string url;
    std::string key_env;  // name of the env var holding the credential, may be empty
    double timeout_s = 30.0;
    int retries = 2;
    std::chrono::milliseconds backoff_base{200};

    /// ConfigError when timeout <= 0 or retries < 0.
    void validate(BackendRole role) const;
};

/// Runs `attempt` up to 1 + retries times, sleeping backoff_base * 2^k between
/// tries. `attempt` signals a retryable failure by throwing BackendUnavailable;
/// any other exception propagates immediately.
template <typename Fn>
auto with_retries(const BackendConfig& cfg, Fn&& attempt) -> decltype(attempt());

// ---------------------------------------------------------------------------
// Backend roles. Implementations must be safe for concurrent use.
// ---------------------------------------------------------------------------

struct ImageRef {
    int width = 0;
    int height = 0;
    const std::vector<std::uint8_t>* rgb = nullptr;
};

inline ImageRef image_of(const media::Keyframe& kf) { return {kf.width, kf.height, &kf.rgb}; }

class AsrBackend {
public:
    virtual ~AsrBackend() = default;
    virtual std::string id() const = 0;
    virtual std::vector<TranscriptSegment> transcribe(const std::filesystem::path& video_path) = 0;
};

class OcrBackend {
public:
    virtual ~OcrBackend() = default;
    virtual std::string id() const = 0;
    /// Spans in backend-reported order; shot_number is filled in by the caller.
    virtual std::vector<OcrSpan> detect_text(const ImageRef& image) = 0;
};

class CaptionBackend {
public:
    virtual ~CaptionBackend() = default;
    virtual std::string id() const = 0;
    virtual std::vector<std::string> caption(const ImageRef& image, const CaptionParams& params) = 0;
};

class EmbedBackend {
public:
    virtual ~EmbedBackend() = default;
    virtual std::string id() const = 0;
    /// One image-text similarity per text, in input order.
    virtual std::vector<double> similarity(const ImageRef& image, const std::vector<std::string>& texts) = 0;
};

class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string id() const = 0;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string model_id() const = 0;
    virtual double temperature() const = 0;
};

struct Backends {
    std::shared_ptr<AsrBackend> asr;
    std::shared_ptr<OcrBackend> ocr;
    std::shared_ptr<CaptionBackend> caption;
    std::shared_ptr<EmbedBackend> embed;
    std::shared_ptr<LlmBackend> llm;
};

// ---------------------------------------------------------------------------
// HTTP backends (JSON over POST, see docs/wire-format.md)
// ---------------------------------------------------------------------------

struct LiveBackendConfigs {
    BackendConfig asr, ocr, caption, embed, llm;
    std::string llm_model_id = "gpt-4";
    double llm_temperature = 0.0;
    /// Include the raw video bytes in ASR requests in addition to the path.
    bool asr_inline_audio = true;
};

Backends make_http_backends(const LiveBackendConfigs& cfg);

// ---------------------------------------------------------------------------
// Deterministic stubs
// ---------------------------------------------------------------------------

struct StubOptions {
    /// Force the long description to exactly this many words (padding or
    /// truncating the synthesized paragraph). nullopt keeps the natural length.
    std::optional<int> long_words;
};

/// ASR reads `<video>.asr.json` ([{start_s,end_s,text}]) when present, else
/// returns no speech. OCR/caption/embed derive their output from pixel data.
/// The LLM recognizes the four prompt kinds and answers in-format.
Backends make_stub_backends(const StubOptions& options = {});

/// Plain deterministic stubs for unit tests.
class FixedLlm : public LlmBackend {
public:
    explicit FixedLlm(std::function<std::string(const std::string& prompt)> respond, std::string id = "fixed-llm")
        : respond_(std::move(respond)), id_(std::move(id)) {}
    std::string id() const override { return id_; }
    std::string complete(const std::string& prompt) override { return respond_(prompt); }
    std::string model_id() const override { return "fixed"; }
    double temperature() const override { return 0.0; }

private:
    std::function<std::string(const std::string&)> respond_;
    std::string id_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline constexpr double kMinOcrConfidence = 0.95;

std::vector<std::string> default_watermark_patterns();

std::vector<TranscriptSegment> transcribe(const std::filesystem::path& video_path, AsrBackend& backend);

/// Keeps spans with confidence >= min_confidence whose text is non-empty and
/// neither contains a watermark pattern (case-insensitive) nor an @username token.
std::vector<OcrSpan> filter_ocr(const std::vector<OcrSpan>& spans, double min_confidence = kMinOcrConfidence,
                                const std::vector<std::string>& watermark_patterns = default_watermark_patterns());

std::vector<CaptionCandidate> caption_candidates(const media::Keyframe& keyframe, const CaptionParams& params,
                                                 CaptionBackend& backend);

/// Scores every candidate against the keyframe and returns the argmax
/// (ties -> lowest rank). `candidates` receives the scores.
CaptionCandidate select_caption(const media::Keyframe& keyframe, std::vector<CaptionCandidate>& candidates,
                                EmbedBackend& backend);

std::vector<ShotRecord> assemble_shot_records(const std::vector<media::Shot>& shots,
                                              const std::vector<TranscriptSegment>& transcript,
                                              const std::map<int, std::vector<OcrSpan>>& ocr_by_shot,
                                              const std::map<int, CaptionCandidate>& captions_by_shot);

struct ExtractionOptions {
    double scene_threshold = media::kDefaultSceneThreshold;
    media::DecoderOptions decoder;
    CaptionParams caption;
    double min_ocr_confidence = kMinOcrConfidence;
    std::vector<std::string> watermark_patterns = default_watermark_patterns();
    std::size_t concurrency = 4;
};

struct ExtractionResult {
    std::vector<media::Shot> shots;
    std::vector<TranscriptSegment> transcript;
    std::map<int, std::vector<OcrSpan>> ocr_by_shot;  // filtered
    std::map<int, std::vector<CaptionCandidate>> candidates_by_shot;
    std::vector<ShotRecord> records;
    std::map<std::string, double> timings_ms;  // "media", "extraction"
};

/// Full media + extraction stage for one video. Transcription runs alongside
/// the visual work; per-shot backend calls share the concurrency limit.
ExtractionResult run_extraction(const std::filesystem::path& video_path, Backends& backends,
                                const ExtractionOptions& options);

}  // namespace shortscribe::extraction

#include "retry.ipp"
