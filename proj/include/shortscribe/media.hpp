#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace shortscribe::media {

/// One decoded frame as seen by shot detection.
struct FrameMeta {
    std::int64_t index = 0;  // 0-based ordinal within the emitted stream
    double timestamp = 0.0;  // seconds from video start
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> luma;  // width*height bytes

    /// Throws DimensionMismatch when the plane size does not match.
    void validate() const;
};

struct Frame {
    FrameMeta meta;
    std::vector<std::uint8_t> rgb;  // width*height*3 bytes, may be empty if not requested
};

struct Shot {
    int shot_number = 0;  // 1-based
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;  // inclusive
    double start_s = 0.0;
    double end_s = 0.0;  // exclusive: start of the next frame
    double duration_s = 0.0;

    std::int64_t frame_count() const { return end_frame - start_frame + 1; }
    bool operator==(const Shot&) const = default;
};

struct Keyframe {
    int shot_number = 0;
    std::int64_t frame_index = 0;
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;
};

inline constexpr double kDefaultSceneThreshold = 0.4;

// ---------------------------------------------------------------------------
// Raw-frame ingestion contract
//
//   "W H FPS\n" header, then per frame: W*H grayscale bytes followed by
//   W*H*3 RGB24 bytes. FPS is a decimal number (e.g. "30" or "29.97").
// ---------------------------------------------------------------------------

struct StreamHeader {
    int width = 0;
    int height = 0;
    double fps = 0.0;
};

/// Frame-rate selection for decoding. nullopt == native rate.
using SampleRate = std::optional<double>;

class FrameStream {
public:
    virtual ~FrameStream() = default;
    virtual const StreamHeader& header() const = 0;
    /// Seconds between consecutive emitted frames.
    virtual double frame_interval() const = 0;
    /// Next frame in presentation order, or nullopt at end of stream.
    virtual std::optional<Frame> next() = 0;
};

/// Reads the raw-frame contract from an arbitrary byte stream. The stream must
/// outlive the reader. `keep_rgb` false skips the RGB plane instead of copying it.
std::unique_ptr<FrameStream> read_raw_frames(std::istream& in, SampleRate sample_fps = std::nullopt,
                                             bool keep_rgb = true);

/// Serializes frames in the raw-frame contract (used by fixtures and tools).
class RawFrameWriter {
public:
    RawFrameWriter(std::ostream& out, StreamHeader header);
    /// rgb may be empty, in which case it is synthesized from luma (gray).
    void write(std::span<const std::uint8_t> luma, std::span<const std::uint8_t> rgb = {});

private:
    std::ostream& out_;
    StreamHeader header_;
};

struct DecoderOptions {
    SampleRate sample_fps;
    bool keep_rgb = true;
    /// Command used for files that are not already in the raw-frame contract.
    /// "{path}" is substituted with the shell-quoted file path; it must write
    /// the raw-frame contract to stdout.
    std::string decoder_command;
};

/// Opens a video file. Raw-contract files are read directly; anything else is
/// piped through options.decoder_command.
/// Errors: UndecodableMedia (empty/corrupt/unsupported), EmptyVideo (no frames).
std::unique_ptr<FrameStream> decode_frames(const std::filesystem::path& video_path,
                                           const DecoderOptions& options = {});

/// Convenience: drains decode_frames into memory.
std::vector<Frame> decode_all(const std::filesystem::path& video_path, const DecoderOptions& options = {});

// ---------------------------------------------------------------------------
// Shot segmentation
// ---------------------------------------------------------------------------

/// mean(|curr - prev|) / 255 over all pixels. DimensionMismatch if shapes differ.
double luma_delta(const FrameMeta& prev, const FrameMeta& curr);

/// Single-pass boundary detector; holds only the previous frame.
class ShotDetector {
public:
    ShotDetector(double threshold, double frame_interval_s);

    void push(const FrameMeta& frame);
    /// Closes the last open shot. EmptyVideo if nothing was pushed.
    std::vector<Shot> finish();

private:
    void close_shot(std::int64_t end_frame, double end_s);

    double threshold_;
    double frame_interval_;
    std::optional<FrameMeta> prev_;
    std::int64_t shot_start_frame_ = 0;
    double shot_start_s_ = 0.0;
    std::vector<Shot> shots_;
};

/// A boundary is declared before frame i when luma_delta(frame[i-1], frame[i])
/// >= threshold. When frame_interval_s is absent it is inferred from the
/// last two timestamps (0 for a single frame).
std::vector<Shot> detect_shots(std::span<const FrameMeta> frames, double threshold = kDefaultSceneThreshold,
                               std::optional<double> frame_interval_s = std::nullopt);

// ---------------------------------------------------------------------------
// Keyframes
// ---------------------------------------------------------------------------

/// start_frame + ceil(n/2) - 1, i.e. the ceil(n/2)-th frame of the shot.
std::int64_t keyframe_index(const Shot& shot);

/// Random access to decoded frames by index.
class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual Frame frame_at(std::int64_t index) = 0;
};

class InMemoryFrames : public FrameSource {
public:
    explicit InMemoryFrames(std::span<const Frame> frames) : frames_(frames) {}
    Frame frame_at(std::int64_t index) override;

private:
    std::span<const Frame> frames_;
};

Keyframe select_keyframe(const Shot& shot, FrameSource& frames);

/// Re-decodes `video_path` once and returns the keyframe for every shot.
std::vector<Keyframe> extract_keyframes(const std::filesystem::path& video_path, std::span<const Shot> shots,
                                        const DecoderOptions& options);

}  // namespace shortscribe::media
