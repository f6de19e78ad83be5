#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "shortscribe/error.hpp"
#include "shortscribe/extraction.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::extraction {

namespace {

constexpr std::size_t kFeatureDims = 16;

double mean_luma(const ImageRef& image) {
    if (!image.rgb || image.rgb->empty()) return 0.0;
    std::uint64_t sum = 0;
    const auto& px = *image.rgb;
    for (std::size_t i = 0; i + 2 < px.size(); i += 3) sum += (299u * px[i] + 587u * px[i + 1] + 114u * px[i + 2]) / 1000u;
    return static_cast<double>(sum) / static_cast<double>(px.size() / 3);
}

std::string tone_of(double luma) {
    if (luma < 48) return "dark";
    if (luma < 112) return "dim";
    if (luma < 176) return "bright";
    return "vivid";
}

class StubAsr final : public AsrBackend {
public:
    std::string id() const override { return "stub-asr"; }
    std::vector<TranscriptSegment> transcribe(const std::filesystem::path& video_path) override {
        auto sidecar = video_path;
        sidecar += ".asr.json";
        if (!std::filesystem::exists(sidecar)) return {};
        std::vector<TranscriptSegment> out;
        try {
            auto j = nlohmann::json::parse(util::read_file(sidecar));
            if (j.is_object()) j = j.at("segments");
            if (!j.is_array()) throw Error(ErrorCode::BackendMalformedResponse, "stub asr sidecar: expected segments");
            for (const auto& s : j) out.push_back({s.at("start_s"), s.at("end_s"), s.at("text")});
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::BackendMalformedResponse, "stub asr sidecar: " + std::string(e.what()));
        }
        return out;
    }
};

class StubOcr final : public OcrBackend {
public:
    std::string id() const override { return "stub-ocr"; }
    std::vector<OcrSpan> detect_text(const ImageRef& image) override {
        const double luma = mean_luma(image);
        // A confident overlay, a low-confidence background sign, and watermark
        // text, so the filter has something to drop.
        return {
            {fmt::format("{} scene {}", tone_of(luma), static_cast<int>(std::lround(luma))), 0.97, 0},
            {"background sign", 0.61, 0},
            {"TikTok", 0.99, 0},
            {"@stub.creator", 0.99, 0},
        };
    }
};

class StubCaption final : public CaptionBackend {
public:
    std::string id() const override { return "stub-caption"; }
    std::vector<std::string> caption(const ImageRef& image, const CaptionParams& params) override {
        static constexpr std::array<const char*, 5> kDetails = {"soft shadows", "a centered subject", "bold contrast",
                                                                 "an empty background", "gentle motion"};
        const std::string tone = tone_of(mean_luma(image));
        std::vector<std::string> out;
        for (int k = 0; k < params.num_candidates; ++k) {
            std::string c = fmt::format("a {} video frame with {} in view", tone, kDetails[k % kDetails.size()]);
            for (int r = 0; r < k / static_cast<int>(kDetails.size()); ++r) c += " again";
            out.push_back(std::move(c));
        }
        return out;
    }
};

std::array<double, kFeatureDims> text_features(const std::string& text) {
    std::array<double, kFeatureDims> v{};
    for (const auto& w : util::split_whitespace(util::to_lower(text))) {
        const auto h = util::sha256_hex(w);
        v[std::stoul(h.substr(0, 2), nullptr, 16) % kFeatureDims] += 1.0;
    }
    return v;
}

std::array<double, kFeatureDims> image_features(const ImageRef& image) {
    std::array<double, kFeatureDims> v{};
    if (!image.rgb) return v;
    const auto& px = *image.rgb;
    for (std::size_t i = 0; i + 2 < px.size(); i += 3) {
        const unsigned y = (299u * px[i] + 587u * px[i + 1] + 114u * px[i + 2]) / 1000u;
        v[y * kFeatureDims / 256] += 1.0;
    }
    return v;
}

double cosine(const std::array<double, kFeatureDims>& a, const std::array<double, kFeatureDims>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < kFeatureDims; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

class StubEmbed final : public EmbedBackend {
public:
    std::string id() const override { return "stub-embed"; }
    std::vector<double> similarity(const ImageRef& image, const std::vector<std::string>& texts) override {
        const auto img = image_features(image);
        std::vector<double> out;
        for (const auto& t : texts) out.push_back(cosine(img, text_features(t)));
        return out;
    }
};

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

/// Text after the first blank line following the template header.
std::string after_template(const std::string& prompt) {
    const auto pos = prompt.find("\n\n");
    return pos == std::string::npos ? std::string() : prompt.substr(pos + 2);
}

struct ParsedShot {
    int number = 0;
    std::string duration;
    std::string text;
    std::string description;
};

/// Pulls SHOT blocks out of a shot-data prompt.
std::vector<ParsedShot> parse_blocks(const std::string& prompt) {
    std::vector<ParsedShot> shots;
    std::istringstream in(prompt);
    std::string line;
    bool in_data = false;
    while (std::getline(in, line)) {
        if (starts_with(line, "SHOT ") && line != "SHOT NUMBER" && line.find('"') == std::string::npos) {
            in_data = true;
            ParsedShot s;
            s.number = std::atoi(line.c_str() + 5);
            shots.push_back(s);
        } else if (in_data && !shots.empty()) {
            auto value = [&](std::string_view key) { return util::trim(std::string_view(line).substr(key.size())); };
            if (starts_with(line, "Duration: ")) shots.back().duration = value("Duration: ");
            else if (starts_with(line, "Text on screen:")) shots.back().text = value("Text on screen:");
            else if (starts_with(line, "Shot description:")) shots.back().description = value("Shot description:");
        }
    }
    return shots;
}

std::string first_words(const std::string& text, std::size_t n) {
    auto words = util::split_whitespace(text);
    if (words.size() > n) words.resize(n);
    return util::join(words, " ");
}

class StubLlm final : public LlmBackend {
public:
    explicit StubLlm(StubOptions opt) : opt_(opt) {}
    std::string id() const override {
        return opt_.long_words ? fmt::format("stub-llm:long={}", *opt_.long_words) : std::string("stub-llm");
    }
    std::string model_id() const override { return "stub"; }
    double temperature() const override { return 0.0; }

    std::string complete(const std::string& prompt) override {
        if (starts_with(prompt, "Your task is to generate a summary for each shot")) {
            std::vector<std::string> lines;
            for (const auto& s : parse_blocks(prompt)) {
                lines.push_back(fmt::format("Shot {}: A {}-second shot of {}.", s.number,
                                            s.duration.substr(0, s.duration.find(' ')), s.description));
            }
            return "\"" + util::join(lines, "\n") + "\"";
        }
        if (starts_with(prompt, "Your task is to generate a summary paragraph")) {
            const auto shots = parse_blocks(prompt);
            std::string text = fmt::format("The video contains {} shot{}.", shots.size(), shots.size() == 1 ? "" : "s");
            for (const auto& s : shots) {
                text += fmt::format(" Shot {} shows {}.", s.number, s.description);
                if (!s.text.empty()) text += fmt::format(" On-screen text reads {}.", s.text);
            }
            if (opt_.long_words) {
                auto words = util::split_whitespace(text);
                const auto n = static_cast<std::size_t>(std::max(*opt_.long_words, 1));
                while (words.size() < n) words.emplace_back("detail");
                words.resize(n);
                text = util::join(words, " ");
            }
            return text;
        }
        if (starts_with(prompt, "Condense the summary below such that the response adheres to a 50 word limit."))
            return first_words(after_template(prompt), 50);
        if (starts_with(prompt, "Condense the summary below such that the response adheres to a 10 word limit."))
            return first_words(after_template(prompt), 10);
        return "Unrecognized request.";
    }

private:
    StubOptions opt_;
};

}  // namespace

Backends make_stub_backends(const StubOptions& options) {
    Backends b;
    b.asr = std::make_shared<StubAsr>();
    b.ocr = std::make_shared<StubOcr>();
    b.caption = std::make_shared<StubCaption>();
    b.embed = std::make_shared<StubEmbed>();
    b.llm = std::make_shared<StubLlm>(options);
    return b;
}

}  // namespace shortscribe::extraction
