#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "extraction.hpp"

namespace shortscribe::summarize {

enum class PromptKind { ShotByShot, Long, Condense50, CondenseShort };

inline constexpr std::array<PromptKind, 4> kAllPromptKinds = {PromptKind::ShotByShot, PromptKind::Long,
                                                               PromptKind::Condense50, PromptKind::CondenseShort};

std::string_view to_string(PromptKind kind) noexcept;
/// Fixture file name under the prompt directory, e.g. "shot_by_shot.txt".
std::string fixture_name(PromptKind kind);

/// Immutable prompt templates loaded from disk, with their SHA-256.
class PromptLibrary {
public:
    /// ConfigError if any of the four fixtures is missing.
    static PromptLibrary load(const std::filesystem::path& dir);
    static PromptLibrary load_default();

    const std::string& text(PromptKind kind) const;
    const std::string& hash(PromptKind kind) const;

private:
    std::map<PromptKind, std::string> text_;
    std::map<PromptKind, std::string> hash_;
};

using PromptPayload = std::variant<std::vector<extraction::ShotRecord>, std::string>;

/// Five lines: SHOT n / Duration / Text on screen / Shot audio transcript /
/// Shot description. Newlines inside fields become spaces.
std::string render_shot_block(const extraction::ShotRecord& record);
/// Blocks joined by one blank line.
std::string render_shot_blocks(const std::vector<extraction::ShotRecord>& records);

/// Template bytes, a blank line, then the rendered payload and a trailing newline.
/// PayloadKindMismatch when the payload type does not fit the kind, when
/// records are empty, or when the text is blank.
std::string build_prompt(const PromptLibrary& prompts, PromptKind kind, const PromptPayload& payload);

std::size_t word_count(std::string_view text);

struct ShotSummary {
    int shot_number = 0;
    std::string text;
    bool operator==(const ShotSummary&) const = default;
};

/// Strips framing quotes, splits on newlines, drops blanks, unquotes lines.
std::vector<std::string> parse_summary_lines(std::string_view response);

struct GenerationOptions {
    /// Extra regeneration attempts when the shot-summary count is wrong.
    int summary_retries = 2;
    int fifty_word_limit = 50;
    int short_word_limit = 10;
};

std::vector<ShotSummary> generate_shot_by_shot(const PromptLibrary& prompts,
                                               const std::vector<extraction::ShotRecord>& records,
                                               extraction::LlmBackend& llm, const GenerationOptions& options = {});

std::string generate_long(const PromptLibrary& prompts, const std::vector<extraction::ShotRecord>& records,
                          extraction::LlmBackend& llm);

struct CondenseResult {
    std::string long_final;
    std::optional<std::string> fifty_word;
};

CondenseResult maybe_condense_50(const PromptLibrary& prompts, const std::string& long_text,
                                 extraction::LlmBackend& llm, const GenerationOptions& options = {});

struct ShortResult {
    std::string text;
    std::size_t words = 0;
    bool over_limit = false;
};

ShortResult generate_short(const PromptLibrary& prompts, const std::string& long_final, extraction::LlmBackend& llm,
                           const GenerationOptions& options = {});

struct GenerationMeta {
    std::map<std::string, std::string> prompt_hashes;  // kind -> sha256
    std::map<std::string, std::string> backend_ids;    // role -> id
    std::string llm_model_id;
    double llm_temperature = 0.0;
    std::string started_at;
    std::string finished_at;
    std::size_t shot_count = 0;
    std::size_t long_raw_words = 0;
    std::size_t short_words = 0;
    bool short_over_limit = false;
    std::string input_hash;
    bool operator==(const GenerationMeta&) const = default;
};

struct DescriptionSet {
    std::string short_description;
    std::string long_description;
    std::optional<std::string> fifty_word;
    std::vector<ShotSummary> shot_by_shot;
    std::string on_screen_text;
    GenerationMeta meta;
    bool operator==(const DescriptionSet&) const = default;
};

/// SchemaViolation naming the first broken invariant, if any.
void validate(const DescriptionSet& set);

/// Clock used for generation timestamps (ISO-8601 UTC strings).
using Clock = std::function<std::string()>;
std::string utc_now_iso8601();

struct DescribeInputs {
    std::vector<media::Shot> shots;
    std::vector<extraction::ShotRecord> records;
    std::map<std::string, std::string> backend_ids;
    std::string input_hash;
};

/// shot-by-shot, long, optional 50-word condensation, short; in that order.
DescriptionSet build_description_set(const PromptLibrary& prompts, const DescribeInputs& inputs,
                                     extraction::LlmBackend& llm, const GenerationOptions& options = {},
                                     const Clock& clock = utc_now_iso8601);

/// Ordered concatenation of the shots' on-screen text (empty entries skipped).
std::string join_on_screen_text(const std::vector<extraction::ShotRecord>& records);

}  // namespace shortscribe::summarize
