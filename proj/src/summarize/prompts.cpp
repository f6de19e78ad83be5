#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/summarize.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::summarize {

std::string_view to_string(PromptKind kind) noexcept {
    switch (kind) {
        case PromptKind::ShotByShot: return "shot_by_shot";
        case PromptKind::Long: return "long";
        case PromptKind::Condense50: return "condense_50";
        case PromptKind::CondenseShort: return "condense_short";
    }
    return "unknown";
}

std::string fixture_name(PromptKind kind) { return std::string(to_string(kind)) + ".txt"; }

PromptLibrary PromptLibrary::load(const std::filesystem::path& dir) {
    PromptLibrary lib;
    for (const auto kind : kAllPromptKinds) {
        const auto path = dir / fixture_name(kind);
        if (!std::filesystem::is_regular_file(path))
            throw Error(ErrorCode::ConfigError, "missing prompt fixture " + path.string());
        auto text = util::read_file(path);
        if (util::trim(text).empty()) throw Error(ErrorCode::ConfigError, "empty prompt fixture " + path.string());
        lib.hash_[kind] = util::sha256_hex(text);
        lib.text_[kind] = std::move(text);
    }
    return lib;
}

PromptLibrary PromptLibrary::load_default() { return load(SHORTSCRIBE_DEFAULT_PROMPT_DIR); }

const std::string& PromptLibrary::text(PromptKind kind) const { return text_.at(kind); }
const std::string& PromptLibrary::hash(PromptKind kind) const { return hash_.at(kind); }

std::string render_shot_block(const extraction::ShotRecord& r) {
    return fmt::format(
        "SHOT {}\n"
        "Duration: {} seconds\n"
        "Text on screen: {}\n"
        "Shot audio transcript: {}\n"
        "Shot description: {}",
        r.shot_number, util::format_seconds(r.duration_s), util::single_line(r.on_screen_text),
        util::single_line(r.transcript_text), util::single_line(r.visual_caption));
}

std::string render_shot_blocks(const std::vector<extraction::ShotRecord>& records) {
    std::vector<std::string> blocks;
    for (const auto& r : records) blocks.push_back(render_shot_block(r));
    return util::join(blocks, "\n\n");
}

std::string build_prompt(const PromptLibrary& prompts, PromptKind kind, const PromptPayload& payload) {
    const bool wants_records = kind == PromptKind::ShotByShot || kind == PromptKind::Long;
    std::string body;
    if (wants_records) {
        const auto* records = std::get_if<std::vector<extraction::ShotRecord>>(&payload);
        if (!records)
            throw Error(ErrorCode::PayloadKindMismatch, fmt::format("{} prompt needs shot records", to_string(kind)));
        if (records->empty())
            throw Error(ErrorCode::PayloadKindMismatch, fmt::format("{} prompt needs at least one shot", to_string(kind)));
        body = render_shot_blocks(*records);
    } else {
        const auto* text = std::get_if<std::string>(&payload);
        if (!text)
            throw Error(ErrorCode::PayloadKindMismatch, fmt::format("{} prompt needs description text", to_string(kind)));
        if (util::trim(*text).empty())
            throw Error(ErrorCode::PayloadKindMismatch, fmt::format("{} prompt got blank text", to_string(kind)));
        body = util::single_line(*text);
    }
    std::string prompt = prompts.text(kind);
    if (!prompt.empty() && prompt.back() != '\n') prompt += '\n';
    prompt += '\n';
    prompt += body;
    prompt += '\n';
    return prompt;
}

}  // namespace shortscribe::summarize
