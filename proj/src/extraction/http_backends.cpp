#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <regex>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/extraction.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::extraction {

namespace {

using nlohmann::json;

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

Endpoint parse_url(BackendRole role, const std::string& url) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl))
        throw Error(ErrorCode::ConfigError, fmt::format("{} backend URL '{}' is not http(s)", to_string(role), url));
    return {m[1], m[2].matched ? std::string(m[2]) : std::string("/")};
}

json image_json(const ImageRef& image) {
    if (!image.rgb || image.rgb->size() != static_cast<std::size_t>(image.width) * image.height * 3)
        throw Error(ErrorCode::DimensionMismatch, "keyframe image payload missing or mis-sized");
    // Binary PPM keeps the encoder dependency-free and is readable by common imaging libraries.
    std::string ppm = fmt::format("P6\n{} {}\n255\n", image.width, image.height);
    ppm.append(reinterpret_cast<const char*>(image.rgb->data()), image.rgb->size());
    return {{"format", "ppm"},
            {"width", image.width},
            {"height", image.height},
            {"data_b64", util::base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(ppm.data()), ppm.size()))}};
}

class HttpRole {
public:
    HttpRole(BackendRole role, BackendConfig cfg) : role_(role), cfg_(std::move(cfg)), endpoint_(parse_url(role, cfg_.url)) {
        cfg_.validate(role);
    }

    std::string id() const { return fmt::format("http:{}", cfg_.url); }

    json post(const json& body) const {
        return with_retries(cfg_, [&] { return post_once(body); });
    }

    [[noreturn]] void malformed(const std::string& what) const {
        throw Error(ErrorCode::BackendMalformedResponse, fmt::format("{} backend: {}", to_string(role_), what));
    }

private:
    json post_once(const json& body) const {
        httplib::Client client(endpoint_.base);
        const auto secs = static_cast<time_t>(cfg_.timeout_s);
        const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        httplib::Headers headers;
        if (!cfg_.key_env.empty()) {
            if (const char* key = std::getenv(cfg_.key_env.c_str()); key && *key)
                headers.emplace("Authorization", std::string("Bearer ") + key);
        }
        auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
        if (!res)
            throw Error(ErrorCode::BackendUnavailable,
                        fmt::format("{} backend at {}: {}", to_string(role_), cfg_.url, httplib::to_string(res.error())));
        if (res->status >= 500 || res->status == 429)
            throw Error(ErrorCode::BackendUnavailable,
                        fmt::format("{} backend at {}: HTTP {}", to_string(role_), cfg_.url, res->status));
        if (res->status != 200) malformed(fmt::format("HTTP {} from {}", res->status, cfg_.url));
        try {
            return json::parse(res->body);
        } catch (const json::parse_error&) {
            malformed("response body is not JSON");
        }
    }

    BackendRole role_;
    BackendConfig cfg_;
    Endpoint endpoint_;
};

template <typename T>
T field(const HttpRole& r, const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) r.malformed(fmt::format("missing '{}'", key));
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        r.malformed(fmt::format("field '{}' has the wrong type", key));
    }
}

class HttpAsr final : public AsrBackend {
public:
    HttpAsr(BackendConfig cfg, bool inline_audio) : role_(BackendRole::Asr, std::move(cfg)), inline_audio_(inline_audio) {}
    std::string id() const override { return role_.id(); }

    std::vector<TranscriptSegment> transcribe(const std::filesystem::path& video_path) override {
        json body = {{"audio_path", std::filesystem::absolute(video_path).string()}};
        if (inline_audio_) {
            const std::string bytes = util::read_file(video_path);
            body["audio_b64"] = util::base64_encode(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
        }
        const json res = role_.post(body);
        std::vector<TranscriptSegment> out;
        for (const auto& s : field<json>(role_, res, "segments")) {
            out.push_back({field<double>(role_, s, "start_s"), field<double>(role_, s, "end_s"),
                           field<std::string>(role_, s, "text")});
        }
        return out;
    }

private:
    HttpRole role_;
    bool inline_audio_;
};

class HttpOcr final : public OcrBackend {
public:
    explicit HttpOcr(BackendConfig cfg) : role_(BackendRole::Ocr, std::move(cfg)) {}
    std::string id() const override { return role_.id(); }

    std::vector<OcrSpan> detect_text(const ImageRef& image) override {
        const json res = role_.post({{"image", image_json(image)}});
        std::vector<OcrSpan> out;
        for (const auto& s : field<json>(role_, res, "spans")) {
            OcrSpan span;
            span.text = field<std::string>(role_, s, "text");
            span.confidence = field<double>(role_, s, "confidence");
            out.push_back(std::move(span));
        }
        return out;
    }

private:
    HttpRole role_;
};

class HttpCaption final : public CaptionBackend {
public:
    explicit HttpCaption(BackendConfig cfg) : role_(BackendRole::Caption, std::move(cfg)) {}
    std::string id() const override { return role_.id(); }

    std::vector<std::string> caption(const ImageRef& image, const CaptionParams& p) override {
        const json body = {{"image", image_json(image)},
                           {"num_candidates", p.num_candidates},
                           {"min_words", p.min_words},
                           {"max_words", p.max_words},
                           {"top_p", p.top_p},
                           {"temperature", p.temperature},
                           {"sampling", p.sampling}};
        return field<std::vector<std::string>>(role_, role_.post(body), "captions");
    }

private:
    HttpRole role_;
};

class HttpEmbed final : public EmbedBackend {
public:
    explicit HttpEmbed(BackendConfig cfg) : role_(BackendRole::Embed, std::move(cfg)) {}
    std::string id() const override { return role_.id(); }

    std::vector<double> similarity(const ImageRef& image, const std::vector<std::string>& texts) override {
        return field<std::vector<double>>(role_, role_.post({{"image", image_json(image)}, {"texts", texts}}),
                                          "similarity");
    }

private:
    HttpRole role_;
};

class HttpLlm final : public LlmBackend {
public:
    HttpLlm(BackendConfig cfg, std::string model_id, double temperature)
        : role_(BackendRole::Llm, std::move(cfg)), model_id_(std::move(model_id)), temperature_(temperature) {}
    std::string id() const override { return role_.id(); }
    std::string model_id() const override { return model_id_; }
    double temperature() const override { return temperature_; }

    std::string complete(const std::string& prompt) override {
        const json body = {{"model_id", model_id_}, {"prompt", prompt}, {"temperature", temperature_}};
        return field<std::string>(role_, role_.post(body), "text");
    }

private:
    HttpRole role_;
    std::string model_id_;
    double temperature_;
};

}  // namespace

Backends make_http_backends(const LiveBackendConfigs& cfg) {
    Backends b;
    b.asr = std::make_shared<HttpAsr>(cfg.asr, cfg.asr_inline_audio);
    b.ocr = std::make_shared<HttpOcr>(cfg.ocr);
    b.caption = std::make_shared<HttpCaption>(cfg.caption);
    b.embed = std::make_shared<HttpEmbed>(cfg.embed);
    b.llm = std::make_shared<HttpLlm>(cfg.llm, cfg.llm_model_id, cfg.llm_temperature);
    return b;
}

}  // namespace shortscribe::extraction
