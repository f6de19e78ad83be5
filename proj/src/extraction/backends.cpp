#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/extraction.hpp"

namespace shortscribe::extraction {

std::string_view to_string(BackendRole role) noexcept {
    switch (role) {
        case BackendRole::Asr: return "asr";
        case BackendRole::Ocr: return "ocr";
        case BackendRole::Caption: return "caption";
        case BackendRole::Embed: return "embed";
        case BackendRole::Llm: return "llm";
    }
    return "unknown";
}

void BackendConfig::validate(BackendRole role) const {
    if (!(timeout_s > 0.0))
        throw Error(ErrorCode::ConfigError, fmt::format("{} backend timeout must be > 0", to_string(role)));
    if (retries < 0) throw Error(ErrorCode::ConfigError, fmt::format("{} backend retries must be >= 0", to_string(role)));
    if (backoff_base.count() < 0)
        throw Error(ErrorCode::ConfigError, fmt::format("{} backend backoff must be >= 0", to_string(role)));
}

std::vector<std::string> default_watermark_patterns() { return {"tiktok"}; }

}  // namespace shortscribe::extraction
