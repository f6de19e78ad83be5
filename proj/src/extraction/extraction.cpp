#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <mutex>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/extraction.hpp"
#include "shortscribe/parallel.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::extraction {

std::vector<TranscriptSegment> transcribe(const std::filesystem::path& video_path, AsrBackend& backend) {
    auto segments = backend.transcribe(video_path);
    for (const auto& s : segments) {
        if (!(s.start_s < s.end_s) || !std::isfinite(s.start_s) || !std::isfinite(s.end_s))
            throw Error(ErrorCode::BackendMalformedResponse,
                        fmt::format("asr backend: segment [{}, {}) is empty or inverted", s.start_s, s.end_s));
    }
    std::stable_sort(segments.begin(), segments.end(),
                     [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
    return segments;
}

namespace {

bool has_at_token(std::string_view text) {
    for (const auto& tok : util::split_whitespace(text))
        if (tok.size() > 1 && tok.front() == '@') return true;
    return false;
}

bool is_watermark(const std::string& text, const std::vector<std::string>& patterns) {
    const std::string lower = util::to_lower(text);
    for (const auto& p : patterns)
        if (!p.empty() && lower.find(util::to_lower(p)) != std::string::npos) return true;
    return has_at_token(text);
}

}  // namespace

std::vector<OcrSpan> filter_ocr(const std::vector<OcrSpan>& spans, double min_confidence,
                                const std::vector<std::string>& watermark_patterns) {
    std::vector<OcrSpan> kept;
    for (const auto& s : spans) {
        if (!(s.confidence >= min_confidence)) continue;  // NaN fails too
        if (util::trim(s.text).empty()) continue;
        if (is_watermark(s.text, watermark_patterns)) continue;
        kept.push_back(s);
    }
    return kept;
}

std::vector<CaptionCandidate> caption_candidates(const media::Keyframe& keyframe, const CaptionParams& params,
                                                 CaptionBackend& backend) {
    if (keyframe.rgb.empty())
        throw Error(ErrorCode::DimensionMismatch, fmt::format("keyframe of shot {} has no image", keyframe.shot_number));
    const auto texts = backend.caption(image_of(keyframe), params);
    if (texts.size() != static_cast<std::size_t>(params.num_candidates))
        throw Error(ErrorCode::BackendMalformedResponse,
                    fmt::format("caption backend returned {} candidates, expected {}", texts.size(),
                                params.num_candidates));
    std::vector<CaptionCandidate> out;
    for (std::size_t i = 0; i < texts.size(); ++i) out.push_back({texts[i], 0.0, static_cast<int>(i)});
    return out;
}

CaptionCandidate select_caption(const media::Keyframe& keyframe, std::vector<CaptionCandidate>& candidates,
                                EmbedBackend& backend) {
    if (candidates.empty()) throw Error(ErrorCode::MissingCaption, "no caption candidates to select from");
    std::vector<std::string> texts;
    for (const auto& c : candidates) texts.push_back(c.text);
    const auto scores = backend.similarity(image_of(keyframe), texts);
    if (scores.size() != candidates.size())
        throw Error(ErrorCode::BackendMalformedResponse,
                    fmt::format("embed backend returned {} scores for {} texts", scores.size(), texts.size()));
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) throw Error(ErrorCode::BackendMalformedResponse, "embed backend returned NaN");
        candidates[i].similarity = scores[i];
    }
    const auto best = std::max_element(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.similarity != b.similarity) return a.similarity < b.similarity;
        return a.rank > b.rank;  // lower rank wins ties
    });
    return *best;
}

std::vector<ShotRecord> assemble_shot_records(const std::vector<media::Shot>& shots,
                                              const std::vector<TranscriptSegment>& transcript,
                                              const std::map<int, std::vector<OcrSpan>>& ocr_by_shot,
                                              const std::map<int, CaptionCandidate>& captions_by_shot) {
    std::vector<ShotRecord> out;
    out.reserve(shots.size());
    for (const auto& shot : shots) {
        const auto cap = captions_by_shot.find(shot.shot_number);
        if (cap == captions_by_shot.end())
            throw Error(ErrorCode::MissingCaption, fmt::format("shot {} has no selected caption", shot.shot_number));
        ShotRecord r;
        r.shot_number = shot.shot_number;
        r.duration_s = shot.duration_s;
        r.visual_caption = cap->second.text;

        std::vector<std::string> speech;
        for (const auto& seg : transcript)
            if (seg.start_s < shot.end_s && seg.end_s > shot.start_s) speech.push_back(util::trim(seg.text));
        std::erase_if(speech, [](const std::string& s) { return s.empty(); });
        r.transcript_text = util::join(speech, " ");

        if (const auto it = ocr_by_shot.find(shot.shot_number); it != ocr_by_shot.end()) {
            std::vector<std::string> texts;
            for (const auto& span : it->second) texts.push_back(util::trim(span.text));
            r.on_screen_text = util::join(texts, " ");
        }
        out.push_back(std::move(r));
    }
    return out;
}

ExtractionResult run_extraction(const std::filesystem::path& video_path, Backends& backends,
                                const ExtractionOptions& options) {
    using Ms = std::chrono::duration<double, std::milli>;
    ExtractionResult result;

    auto asr_task = std::async(std::launch::async, [&] { return transcribe(video_path, *backends.asr); });

    std::vector<media::Keyframe> keyframes;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        media::DecoderOptions luma_only = options.decoder;
        luma_only.keep_rgb = false;
        auto stream = media::decode_frames(video_path, luma_only);
        media::ShotDetector detector(options.scene_threshold, stream->frame_interval());
        while (auto f = stream->next()) detector.push(f->meta);
        result.shots = detector.finish();
        keyframes = media::extract_keyframes(video_path, result.shots, options.decoder);
    } catch (...) {
        if (asr_task.valid()) asr_task.wait();
        throw;
    }
    const auto t1 = std::chrono::steady_clock::now();

    std::map<int, CaptionCandidate> selected;
    std::mutex mutex;
    try {
        util::parallel_for(keyframes.size(), options.concurrency, [&](std::size_t i) {
            const auto& kf = keyframes[i];
            auto spans = backends.ocr->detect_text(image_of(kf));
            for (auto& s : spans) s.shot_number = kf.shot_number;
            spans = filter_ocr(spans, options.min_ocr_confidence, options.watermark_patterns);
            auto candidates = caption_candidates(kf, options.caption, *backends.caption);
            const auto best = select_caption(kf, candidates, *backends.embed);
            std::lock_guard lock(mutex);
            result.ocr_by_shot[kf.shot_number] = std::move(spans);
            result.candidates_by_shot[kf.shot_number] = std::move(candidates);
            selected[kf.shot_number] = best;
        });
    } catch (...) {
        asr_task.wait();
        throw;
    }
    result.transcript = asr_task.get();
    const auto t2 = std::chrono::steady_clock::now();

    result.records = assemble_shot_records(result.shots, result.transcript, result.ocr_by_shot, selected);
    result.timings_ms["media"] = Ms(t1 - t0).count();
    result.timings_ms["extraction"] = Ms(t2 - t1).count();
    return result;
}

}  // namespace shortscribe::extraction
