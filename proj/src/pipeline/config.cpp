#include <cmath>
#include <set>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/pipeline.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::pipeline {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [k, _] : j.items())
        if (!known.count(k)) config_error(fmt::format("{}: unknown key '{}'", where, k));
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        config_error(fmt::format("{}: '{}' has the wrong type", where, key));
    }
}

void read_backend(const json& j, extraction::BackendConfig& b, const std::string& where) {
    if (!j.is_object()) config_error(where + " must be an object");
    reject_unknown(j, {"url", "key_env", "timeout_s", "retries", "backoff_ms"}, where);
    read(j, "url", b.url, where);
    read(j, "key_env", b.key_env, where);
    read(j, "timeout_s", b.timeout_s, where);
    read(j, "retries", b.retries, where);
    if (j.contains("backoff_ms")) {
        std::int64_t ms = 0;
        read(j, "backoff_ms", ms, where);
        b.backoff_base = std::chrono::milliseconds(ms);
    }
}

std::optional<double> parse_double(const char* raw) {
    try {
        std::size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != std::string(raw).size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

void PipelineConfig::validate() const {
    if (!(scene_threshold > 0.0 && scene_threshold <= 1.0))
        config_error(fmt::format("scene threshold {} outside (0, 1]", scene_threshold));
    if (sample_fps && !(*sample_fps > 0.0)) config_error("sample_fps must be positive");
    if (caption.num_candidates < 1) config_error("caption.num_candidates must be >= 1");
    if (caption.min_words < 1 || caption.max_words < caption.min_words)
        config_error("caption word bounds must satisfy 1 <= min_words <= max_words");
    if (!(caption.top_p > 0.0 && caption.top_p <= 1.0)) config_error("caption.top_p must be in (0, 1]");
    if (!(caption.temperature >= 0.0)) config_error("caption.temperature must be >= 0");
    if (!(min_ocr_confidence >= 0.0 && min_ocr_confidence <= 1.0)) config_error("min_ocr_confidence must be in [0, 1]");
    if (summary_retries < 0) config_error("summary_retries must be >= 0");
    if (concurrency < 1 || concurrency > 256) config_error("concurrency must be in [1, 256]");
    if (!std::filesystem::is_directory(prompt_dir)) config_error("prompt directory not found: " + prompt_dir.string());
    if (!lexicon_file.empty() && !std::filesystem::is_regular_file(lexicon_file))
        config_error("lexicon file not found: " + lexicon_file.string());
    backends.asr.validate(extraction::BackendRole::Asr);
    backends.ocr.validate(extraction::BackendRole::Ocr);
    backends.caption.validate(extraction::BackendRole::Caption);
    backends.embed.validate(extraction::BackendRole::Embed);
    backends.llm.validate(extraction::BackendRole::Llm);
}

PipelineConfig config_from_json(const json& j, PipelineConfig cfg) {
    const std::string where = "config";
    if (!j.is_object()) config_error("config file must hold a JSON object");
    reject_unknown(j,
                   {"scene_threshold", "sample_fps", "caption", "min_ocr_confidence", "watermark_patterns", "backends",
                    "summary_retries", "prompt_dir", "store_dir", "lexicon_file", "static_dir", "decoder_command",
                    "concurrency"},
                   where);
    read(j, "scene_threshold", cfg.scene_threshold, where);
    if (j.contains("sample_fps")) {
        if (j.at("sample_fps").is_null() || j.at("sample_fps") == "native")
            cfg.sample_fps.reset();
        else {
            double v = 0;
            read(j, "sample_fps", v, where);
            cfg.sample_fps = v;
        }
    }
    if (j.contains("caption")) {
        const auto& c = j.at("caption");
        reject_unknown(c, {"num_candidates", "min_words", "max_words", "top_p", "temperature"}, "config.caption");
        read(c, "num_candidates", cfg.caption.num_candidates, "config.caption");
        read(c, "min_words", cfg.caption.min_words, "config.caption");
        read(c, "max_words", cfg.caption.max_words, "config.caption");
        read(c, "top_p", cfg.caption.top_p, "config.caption");
        read(c, "temperature", cfg.caption.temperature, "config.caption");
    }
    read(j, "min_ocr_confidence", cfg.min_ocr_confidence, where);
    read(j, "watermark_patterns", cfg.watermark_patterns, where);
    if (j.contains("backends")) {
        const auto& b = j.at("backends");
        reject_unknown(b, {"asr", "ocr", "caption", "embed", "llm", "llm_model_id", "llm_temperature", "asr_inline_audio"},
                       "config.backends");
        if (b.contains("asr")) read_backend(b.at("asr"), cfg.backends.asr, "config.backends.asr");
        if (b.contains("ocr")) read_backend(b.at("ocr"), cfg.backends.ocr, "config.backends.ocr");
        if (b.contains("caption")) read_backend(b.at("caption"), cfg.backends.caption, "config.backends.caption");
        if (b.contains("embed")) read_backend(b.at("embed"), cfg.backends.embed, "config.backends.embed");
        if (b.contains("llm")) read_backend(b.at("llm"), cfg.backends.llm, "config.backends.llm");
        read(b, "llm_model_id", cfg.backends.llm_model_id, "config.backends");
        read(b, "llm_temperature", cfg.backends.llm_temperature, "config.backends");
        read(b, "asr_inline_audio", cfg.backends.asr_inline_audio, "config.backends");
    }
    read(j, "summary_retries", cfg.summary_retries, where);
    std::string path;
    if (j.contains("prompt_dir")) { read(j, "prompt_dir", path, where); cfg.prompt_dir = path; }
    if (j.contains("store_dir")) { read(j, "store_dir", path, where); cfg.store_dir = path; }
    if (j.contains("lexicon_file")) { read(j, "lexicon_file", path, where); cfg.lexicon_file = path; }
    if (j.contains("static_dir")) { read(j, "static_dir", path, where); cfg.static_dir = path; }
    read(j, "decoder_command", cfg.decoder_command, where);
    read(j, "concurrency", cfg.concurrency, where);
    return cfg;
}

void apply_env(PipelineConfig& cfg, const std::function<const char*(const char*)>& getenv) {
    auto env = [&](const char* name) -> std::optional<std::string> {
        const char* v = getenv(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    struct RoleEnv {
        const char* url;
        const char* key;
        extraction::BackendConfig* cfg;
    };
    for (const auto& r : {RoleEnv{"SS_ASR_URL", "SS_ASR_KEY", &cfg.backends.asr},
                          RoleEnv{"SS_OCR_URL", "SS_OCR_KEY", &cfg.backends.ocr},
                          RoleEnv{"SS_CAPTION_URL", "SS_CAPTION_KEY", &cfg.backends.caption},
                          RoleEnv{"SS_EMBED_URL", "SS_EMBED_KEY", &cfg.backends.embed},
                          RoleEnv{"SS_LLM_URL", "SS_LLM_KEY", &cfg.backends.llm}}) {
        if (auto v = env(r.url)) r.cfg->url = *v;
        // The credential itself stays in the environment; only the reference is stored.
        if (r.cfg->key_env.empty()) r.cfg->key_env = r.key;
    }
    if (auto v = env("SS_LLM_MODEL")) cfg.backends.llm_model_id = *v;
    if (auto v = env("SS_STORE_DIR")) cfg.store_dir = *v;
    if (auto v = env("SS_PROMPT_DIR")) cfg.prompt_dir = *v;
    if (auto v = env("SS_LEXICON_FILE")) cfg.lexicon_file = *v;
    if (auto v = env("SS_DECODER_CMD")) cfg.decoder_command = *v;
    if (auto v = env("SS_SCENE_THRESHOLD")) {
        const auto d = parse_double(v->c_str());
        if (!d) config_error("SS_SCENE_THRESHOLD is not a number");
        cfg.scene_threshold = *d;
    }
    if (auto v = env("SS_CONCURRENCY")) {
        const auto d = parse_double(v->c_str());
        if (!d || *d < 1 || std::floor(*d) != *d) config_error("SS_CONCURRENCY must be a positive integer");
        cfg.concurrency = static_cast<std::size_t>(*d);
    }
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& config_file,
                           const std::function<const char*(const char*)>& getenv) {
    PipelineConfig cfg;
    if (config_file) {
        json j;
        try {
            j = json::parse(util::read_file(*config_file));
        } catch (const json::parse_error& e) {
            config_error(fmt::format("{}: {}", config_file->string(), e.what()));
        } catch (const Error&) {
            config_error("cannot read config file " + config_file->string());
        }
        cfg = config_from_json(j, cfg);
    }
    apply_env(cfg, getenv);
    return cfg;
}

}  // namespace shortscribe::pipeline
