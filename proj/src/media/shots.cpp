#include <cstdlib>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/media.hpp"

namespace shortscribe::media {

double luma_delta(const FrameMeta& prev, const FrameMeta& curr) {
    if (prev.width != curr.width || prev.height != curr.height || prev.luma.size() != curr.luma.size())
        throw Error(ErrorCode::DimensionMismatch, fmt::format("frames {}x{} and {}x{} differ", prev.width,
                                                              prev.height, curr.width, curr.height));
    if (prev.luma.empty()) throw Error(ErrorCode::DimensionMismatch, "frames have no pixels");
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < prev.luma.size(); ++i)
        sum += static_cast<std::uint64_t>(std::abs(int{curr.luma[i]} - int{prev.luma[i]}));
    return static_cast<double>(sum) / (255.0 * static_cast<double>(prev.luma.size()));
}

ShotDetector::ShotDetector(double threshold, double frame_interval_s)
    : threshold_(threshold), frame_interval_(frame_interval_s) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw Error(ErrorCode::ConfigError, fmt::format("scene threshold {} outside (0, 1]", threshold));
}

void ShotDetector::push(const FrameMeta& frame) {
    frame.validate();
    if (!prev_) {
        shot_start_frame_ = frame.index;
        shot_start_s_ = frame.timestamp;
    } else {
        if (frame.index != prev_->index + 1 || !(frame.timestamp > prev_->timestamp))
            throw Error(ErrorCode::DimensionMismatch,
                        fmt::format("frame {} does not follow frame {} in order", frame.index, prev_->index));
        if (luma_delta(*prev_, frame) >= threshold_) {
            close_shot(prev_->index, frame.timestamp);
            shot_start_frame_ = frame.index;
            shot_start_s_ = frame.timestamp;
        }
    }
    prev_ = frame;
}

std::vector<Shot> ShotDetector::finish() {
    if (!prev_) throw Error(ErrorCode::EmptyVideo, "no frames to segment");
    close_shot(prev_->index, prev_->timestamp + frame_interval_);
    prev_.reset();
    return std::move(shots_);
}

void ShotDetector::close_shot(std::int64_t end_frame, double end_s) {
    Shot s;
    s.shot_number = static_cast<int>(shots_.size()) + 1;
    s.start_frame = shot_start_frame_;
    s.end_frame = end_frame;
    s.start_s = shot_start_s_;
    s.end_s = end_s;
    s.duration_s = end_s - shot_start_s_;
    shots_.push_back(s);
}

std::vector<Shot> detect_shots(std::span<const FrameMeta> frames, double threshold,
                               std::optional<double> frame_interval_s) {
    if (frames.empty()) throw Error(ErrorCode::EmptyVideo, "no frames to segment");
    double interval = 0.0;
    if (frame_interval_s)
        interval = *frame_interval_s;
    else if (frames.size() >= 2)
        interval = frames.back().timestamp - frames[frames.size() - 2].timestamp;
    ShotDetector detector(threshold, interval);
    for (const auto& f : frames) detector.push(f);
    return detector.finish();
}

}  // namespace shortscribe::media
