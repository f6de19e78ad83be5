#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>
#include <streambuf>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/media.hpp"

namespace shortscribe::media {

void FrameMeta::validate() const {
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::DimensionMismatch, fmt::format("frame {} has size {}x{}", index, width, height));
    if (luma.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw Error(ErrorCode::DimensionMismatch,
                    fmt::format("frame {} luma has {} bytes, expected {}", index, luma.size(), width * height));
}

namespace {

constexpr std::size_t kMaxHeaderBytes = 64;

std::optional<StreamHeader> parse_header(const std::string& line) {
    static const std::regex kHeader(R"(^\s*(\d{1,6}) (\d{1,6}) (\d+(\.\d+)?)\s*$)");
    std::smatch m;
    if (!std::regex_match(line, m, kHeader)) return std::nullopt;
    StreamHeader h;
    h.width = std::stoi(m[1]);
    h.height = std::stoi(m[2]);
    h.fps = std::stod(m[3]);
    if (h.width <= 0 || h.height <= 0 || !(h.fps > 0.0) || !std::isfinite(h.fps)) return std::nullopt;
    return h;
}

/// Owns an optional istream source (file or pipe) plus the decoding state.
class RawFrameStream final : public FrameStream {
public:
    RawFrameStream(std::istream& in, SampleRate sample_fps, bool keep_rgb, std::function<void()> on_eof = {})
        : in_(in), keep_rgb_(keep_rgb), on_eof_(std::move(on_eof)) {
        std::string line;
        char c = 0;
        while (line.size() < kMaxHeaderBytes && in_.get(c) && c != '\n') line.push_back(c);
        auto header = (c == '\n') ? parse_header(line) : std::nullopt;
        if (!header) throw Error(ErrorCode::UndecodableMedia, "missing or malformed 'W H FPS' header");
        header_ = *header;
        plane_ = static_cast<std::size_t>(header_.width) * static_cast<std::size_t>(header_.height);
        if (sample_fps && *sample_fps <= 0.0)
            throw Error(ErrorCode::UndecodableMedia, "sample rate must be positive");
        if (sample_fps && *sample_fps < header_.fps) sample_fps_ = *sample_fps;

        pending_ = read_native();
        if (!pending_) throw Error(ErrorCode::EmptyVideo, "stream contains no frames");
    }

    const StreamHeader& header() const override { return header_; }

    double frame_interval() const override { return 1.0 / (sample_fps_ ? *sample_fps_ : header_.fps); }

    std::optional<Frame> next() override {
        while (pending_) {
            Frame f = std::move(*pending_);
            pending_ = read_native();
            if (keep(f.meta.timestamp)) {
                f.meta.index = emitted_++;
                return f;
            }
        }
        return std::nullopt;
    }

private:
    bool keep(double t) {
        if (!sample_fps_) return true;
        // Emit the first native frame at or after each sampling instant k / rate.
        const double next_t = static_cast<double>(sample_k_) / *sample_fps_;
        if (t + 1e-9 < next_t) return false;
        while (static_cast<double>(sample_k_) / *sample_fps_ <= t + 1e-9) ++sample_k_;
        return true;
    }

    std::optional<Frame> read_native() {
        Frame f;
        f.meta.width = header_.width;
        f.meta.height = header_.height;
        f.meta.luma.resize(plane_);
        in_.read(reinterpret_cast<char*>(f.meta.luma.data()), static_cast<std::streamsize>(plane_));
        const auto got = static_cast<std::size_t>(in_.gcount());
        if (got == 0) {
            if (on_eof_) on_eof_();
            return std::nullopt;
        }
        if (got != plane_) throw Error(ErrorCode::UndecodableMedia, fmt::format("truncated frame {}", native_));
        if (keep_rgb_) {
            f.rgb.resize(plane_ * 3);
            in_.read(reinterpret_cast<char*>(f.rgb.data()), static_cast<std::streamsize>(plane_ * 3));
            if (static_cast<std::size_t>(in_.gcount()) != plane_ * 3)
                throw Error(ErrorCode::UndecodableMedia, fmt::format("truncated RGB plane in frame {}", native_));
        } else {
            in_.ignore(static_cast<std::streamsize>(plane_ * 3));
            if (static_cast<std::size_t>(in_.gcount()) != plane_ * 3)
                throw Error(ErrorCode::UndecodableMedia, fmt::format("truncated RGB plane in frame {}", native_));
        }
        f.meta.timestamp = static_cast<double>(native_) / header_.fps;
        ++native_;
        return f;
    }

    std::istream& in_;
    bool keep_rgb_;
    std::function<void()> on_eof_;
    StreamHeader header_;
    std::size_t plane_ = 0;
    std::optional<double> sample_fps_;
    std::int64_t sample_k_ = 0;
    std::int64_t native_ = 0;
    std::int64_t emitted_ = 0;
    std::optional<Frame> pending_;
};

/// Read-only streambuf over a popen() handle.
class PipeBuf final : public std::streambuf {
public:
    explicit PipeBuf(FILE* f) : f_(f) {}

protected:
    int_type underflow() override {
        const std::size_t n = std::fread(buf_, 1, sizeof buf_, f_);
        if (n == 0) return traits_type::eof();
        setg(buf_, buf_, buf_ + n);
        return traits_type::to_int_type(buf_[0]);
    }

private:
    FILE* f_;
    char buf_[1 << 16];
};

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'')
            out += "'\\''";
        else
            out += c;
    }
    return out + "'";
}

class FileFrameStream final : public FrameStream {
public:
    FileFrameStream(const std::filesystem::path& path, const DecoderOptions& opt) : file_(path, std::ios::binary) {
        if (!file_) throw Error(ErrorCode::UndecodableMedia, "cannot open " + path.string());
        inner_ = std::make_unique<RawFrameStream>(file_, opt.sample_fps, opt.keep_rgb);
    }
    const StreamHeader& header() const override { return inner_->header(); }
    double frame_interval() const override { return inner_->frame_interval(); }
    std::optional<Frame> next() override { return inner_->next(); }

private:
    std::ifstream file_;
    std::unique_ptr<RawFrameStream> inner_;
};

class PipeFrameStream final : public FrameStream {
public:
    PipeFrameStream(const std::filesystem::path& path, const DecoderOptions& opt) {
        std::string cmd = opt.decoder_command;
        const auto pos = cmd.find("{path}");
        const std::string quoted = shell_quote(path.string());
        if (pos == std::string::npos)
            cmd += " " + quoted;
        else
            cmd.replace(pos, 6, quoted);
        cmd += " 2>/dev/null";
        pipe_ = popen(cmd.c_str(), "r");
        if (!pipe_) throw Error(ErrorCode::UndecodableMedia, "cannot start decoder: " + opt.decoder_command);
        buf_ = std::make_unique<PipeBuf>(pipe_);
        in_ = std::make_unique<std::istream>(buf_.get());
        try {
            inner_ = std::make_unique<RawFrameStream>(*in_, opt.sample_fps, opt.keep_rgb, [this] { close(); });
        } catch (const Error& e) {
            const int status = close();
            if (status != 0)
                throw Error(ErrorCode::UndecodableMedia,
                            fmt::format("decoder exited with status {} for {}", status, path.string()));
            throw;
        }
    }
    ~PipeFrameStream() override { close(); }

    const StreamHeader& header() const override { return inner_->header(); }
    double frame_interval() const override { return inner_->frame_interval(); }
    std::optional<Frame> next() override {
        auto f = inner_->next();
        if (!f && status_ != 0)
            throw Error(ErrorCode::UndecodableMedia, fmt::format("decoder exited with status {}", status_));
        return f;
    }

private:
    int close() {
        if (pipe_) {
            status_ = pclose(pipe_);
            pipe_ = nullptr;
        }
        return status_;
    }

    FILE* pipe_ = nullptr;
    int status_ = 0;
    std::unique_ptr<PipeBuf> buf_;
    std::unique_ptr<std::istream> in_;
    std::unique_ptr<RawFrameStream> inner_;
};

bool looks_like_raw_stream(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::string line;
    char c = 0;
    while (line.size() < kMaxHeaderBytes && in.get(c) && c != '\n') line.push_back(c);
    return c == '\n' && parse_header(line).has_value();
}

}  // namespace

std::unique_ptr<FrameStream> read_raw_frames(std::istream& in, SampleRate sample_fps, bool keep_rgb) {
    return std::make_unique<RawFrameStream>(in, sample_fps, keep_rgb);
}

RawFrameWriter::RawFrameWriter(std::ostream& out, StreamHeader header) : out_(out), header_(header) {
    out_ << header_.width << ' ' << header_.height << ' ' << fmt::format("{}", header_.fps) << '\n';
}

void RawFrameWriter::write(std::span<const std::uint8_t> luma, std::span<const std::uint8_t> rgb) {
    const std::size_t plane = static_cast<std::size_t>(header_.width) * static_cast<std::size_t>(header_.height);
    if (luma.size() != plane) throw Error(ErrorCode::DimensionMismatch, "luma plane size does not match header");
    out_.write(reinterpret_cast<const char*>(luma.data()), static_cast<std::streamsize>(plane));
    if (rgb.empty()) {
        std::vector<std::uint8_t> gray(plane * 3);
        for (std::size_t i = 0; i < plane; ++i) gray[3 * i] = gray[3 * i + 1] = gray[3 * i + 2] = luma[i];
        out_.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
    } else {
        if (rgb.size() != plane * 3) throw Error(ErrorCode::DimensionMismatch, "RGB plane size does not match header");
        out_.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    }
}

std::unique_ptr<FrameStream> decode_frames(const std::filesystem::path& video_path, const DecoderOptions& options) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(video_path, ec))
        throw Error(ErrorCode::UndecodableMedia, "not a file: " + video_path.string());
    if (std::filesystem::file_size(video_path, ec) == 0)
        throw Error(ErrorCode::UndecodableMedia, "empty file: " + video_path.string());
    if (looks_like_raw_stream(video_path)) return std::make_unique<FileFrameStream>(video_path, options);
    if (options.decoder_command.empty())
        throw Error(ErrorCode::UndecodableMedia, "no decoder configured for " + video_path.string());
    return std::make_unique<PipeFrameStream>(video_path, options);
}

std::vector<Frame> decode_all(const std::filesystem::path& video_path, const DecoderOptions& options) {
    auto stream = decode_frames(video_path, options);
    std::vector<Frame> frames;
    while (auto f = stream->next()) frames.push_back(std::move(*f));
    return frames;
}

}  // namespace shortscribe::media
