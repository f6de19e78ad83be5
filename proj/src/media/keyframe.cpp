#include <algorithm>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/media.hpp"

namespace shortscribe::media {

std::int64_t keyframe_index(const Shot& shot) {
    const std::int64_t n = shot.frame_count();
    if (n < 1) throw Error(ErrorCode::DimensionMismatch, fmt::format("shot {} has no frames", shot.shot_number));
    return shot.start_frame + (n + 1) / 2 - 1;
}

Frame InMemoryFrames::frame_at(std::int64_t index) {
    if (index < 0 || static_cast<std::size_t>(index) >= frames_.size())
        throw Error(ErrorCode::NotFound, fmt::format("frame {} not available", index));
    return frames_[static_cast<std::size_t>(index)];
}

Keyframe select_keyframe(const Shot& shot, FrameSource& frames) {
    const std::int64_t idx = keyframe_index(shot);
    Frame f = frames.frame_at(idx);
    return Keyframe{shot.shot_number, idx, f.meta.width, f.meta.height, std::move(f.rgb)};
}

std::vector<Keyframe> extract_keyframes(const std::filesystem::path& video_path, std::span<const Shot> shots,
                                        const DecoderOptions& options) {
    std::vector<Keyframe> out;
    out.reserve(shots.size());
    if (shots.empty()) return out;
    std::vector<std::int64_t> wanted;
    for (const auto& s : shots) wanted.push_back(keyframe_index(s));
    // Keyframe indices are strictly increasing because shots are ordered and disjoint.
    auto stream = decode_frames(video_path, options);
    std::size_t k = 0;
    while (k < wanted.size()) {
        auto f = stream->next();
        if (!f) break;
        if (f->meta.index != wanted[k]) continue;
        out.push_back(Keyframe{shots[k].shot_number, wanted[k], f->meta.width, f->meta.height, std::move(f->rgb)});
        ++k;
    }
    if (out.size() != shots.size())
        throw Error(ErrorCode::UndecodableMedia,
                    fmt::format("video ended before keyframe {} of shot {}", wanted[k], shots[k].shot_number));
    return out;
}

}  // namespace shortscribe::media
