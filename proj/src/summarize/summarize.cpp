#include <chrono>
#include <ctime>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/summarize.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::summarize {

std::size_t word_count(std::string_view text) { return util::split_whitespace(text).size(); }

namespace {

const std::string kOpenCurly = "\xE2\x80\x9C";
const std::string kCloseCurly = "\xE2\x80\x9D";

std::size_t count_of(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size())) ++n;
    return n;
}

/// Removes a matched pair of framing quotes around the whole string.
std::string strip_quotes(std::string s) {
    s = util::trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = util::trim(s.substr(1, s.size() - 2));
    if (s.size() >= 6 && s.starts_with(kOpenCurly) && s.ends_with(kCloseCurly))
        s = util::trim(s.substr(kOpenCurly.size(), s.size() - kOpenCurly.size() - kCloseCurly.size()));
    return s;
}

/// A line cut out of a quoted block can keep one unmatched edge quote.
std::string strip_dangling_quotes(std::string s) {
    s = strip_quotes(std::move(s));
    if (count_of(s, "\"") % 2 == 1) {
        if (s.front() == '"') s.erase(0, 1);
        else if (s.back() == '"') s.pop_back();
    }
    if (s.starts_with(kOpenCurly) && count_of(s, kOpenCurly) > count_of(s, kCloseCurly)) s.erase(0, kOpenCurly.size());
    if (s.ends_with(kCloseCurly) && count_of(s, kCloseCurly) > count_of(s, kOpenCurly))
        s.erase(s.size() - kCloseCurly.size());
    return util::trim(s);
}

}  // namespace

std::vector<std::string> parse_summary_lines(std::string_view response) {
    const std::string body = strip_quotes(std::string(response));
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= body.size()) {
        auto end = body.find('\n', start);
        if (end == std::string::npos) end = body.size();
        auto line = strip_dangling_quotes(body.substr(start, end - start));
        if (!line.empty()) out.push_back(std::move(line));
        start = end + 1;
    }
    return out;
}

std::vector<ShotSummary> generate_shot_by_shot(const PromptLibrary& prompts,
                                               const std::vector<extraction::ShotRecord>& records,
                                               extraction::LlmBackend& llm, const GenerationOptions& options) {
    const std::string prompt = build_prompt(prompts, PromptKind::ShotByShot, records);
    std::size_t last = 0;
    for (int attempt = 0; attempt <= options.summary_retries; ++attempt) {
        const auto lines = parse_summary_lines(llm.complete(prompt));
        last = lines.size();
        if (lines.size() != records.size()) continue;
        std::vector<ShotSummary> out;
        for (std::size_t i = 0; i < lines.size(); ++i) out.push_back({records[i].shot_number, lines[i]});
        return out;
    }
    throw Error(ErrorCode::SummaryCountMismatch,
                fmt::format("expected {} shot summaries, got {} after {} attempts", records.size(), last,
                            options.summary_retries + 1));
}

std::string generate_long(const PromptLibrary& prompts, const std::vector<extraction::ShotRecord>& records,
                          extraction::LlmBackend& llm) {
    auto text = util::single_line(llm.complete(build_prompt(prompts, PromptKind::Long, records)));
    if (text.empty()) throw Error(ErrorCode::EmptyResponse, "llm returned an empty long description");
    return text;
}

CondenseResult maybe_condense_50(const PromptLibrary& prompts, const std::string& long_text,
                                 extraction::LlmBackend& llm, const GenerationOptions& options) {
    if (util::trim(long_text).empty()) throw Error(ErrorCode::EmptyResponse, "long description is empty");
    if (word_count(long_text) <= static_cast<std::size_t>(options.fifty_word_limit)) return {long_text, std::nullopt};
    auto condensed = util::single_line(llm.complete(build_prompt(prompts, PromptKind::Condense50, long_text)));
    if (condensed.empty()) throw Error(ErrorCode::EmptyResponse, "llm returned an empty 50-word description");
    return {condensed, condensed};
}

ShortResult generate_short(const PromptLibrary& prompts, const std::string& long_final, extraction::LlmBackend& llm,
                           const GenerationOptions& options) {
    if (util::trim(long_final).empty()) throw Error(ErrorCode::EmptyResponse, "long description is empty");
    ShortResult r;
    r.text = util::single_line(llm.complete(build_prompt(prompts, PromptKind::CondenseShort, long_final)));
    if (r.text.empty()) throw Error(ErrorCode::EmptyResponse, "llm returned an empty short description");
    r.words = word_count(r.text);
    r.over_limit = r.words > static_cast<std::size_t>(options.short_word_limit);
    return r;
}

std::string join_on_screen_text(const std::vector<extraction::ShotRecord>& records) {
    std::vector<std::string> parts;
    for (const auto& r : records)
        if (auto t = util::single_line(r.on_screen_text); !t.empty()) parts.push_back(std::move(t));
    return util::join(parts, " ");
}

void validate(const DescriptionSet& set) {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::SchemaViolation, what); };
    if (util::trim(set.short_description).empty()) fail("short description is empty");
    if (util::trim(set.long_description).empty()) fail("long description is empty");
    if (set.shot_by_shot.size() != set.meta.shot_count)
        fail(fmt::format("{} shot summaries for {} shots", set.shot_by_shot.size(), set.meta.shot_count));
    for (std::size_t i = 0; i < set.shot_by_shot.size(); ++i) {
        if (set.shot_by_shot[i].shot_number != static_cast<int>(i) + 1)
            fail(fmt::format("shot summary {} has shot number {}", i + 1, set.shot_by_shot[i].shot_number));
        if (util::trim(set.shot_by_shot[i].text).empty()) fail(fmt::format("shot summary {} is empty", i + 1));
    }
    if (set.fifty_word && *set.fifty_word != set.long_description)
        fail("condensed description present but long description was not replaced");
    if (set.meta.long_raw_words > 50 && !set.fifty_word) fail("long description exceeded 50 words without condensation");
    if (set.meta.long_raw_words <= 50 && set.fifty_word) fail("condensed description present for a short long description");
}

std::string utc_now_iso8601() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

DescriptionSet build_description_set(const PromptLibrary& prompts, const DescribeInputs& inputs,
                                     extraction::LlmBackend& llm, const GenerationOptions& options,
                                     const Clock& clock) {
    if (inputs.records.size() != inputs.shots.size())
        throw Error(ErrorCode::MissingCaption,
                    fmt::format("{} shot records for {} shots", inputs.records.size(), inputs.shots.size()));
    DescriptionSet set;
    set.meta.started_at = clock();
    for (const auto kind : kAllPromptKinds) set.meta.prompt_hashes[std::string(to_string(kind))] = prompts.hash(kind);
    set.meta.backend_ids = inputs.backend_ids;
    set.meta.backend_ids["llm"] = llm.id();
    set.meta.llm_model_id = llm.model_id();
    set.meta.llm_temperature = llm.temperature();
    set.meta.shot_count = inputs.shots.size();
    set.meta.input_hash = inputs.input_hash;

    set.shot_by_shot = generate_shot_by_shot(prompts, inputs.records, llm, options);
    const std::string raw_long = generate_long(prompts, inputs.records, llm);
    set.meta.long_raw_words = word_count(raw_long);
    auto condensed = maybe_condense_50(prompts, raw_long, llm, options);
    set.long_description = condensed.long_final;
    set.fifty_word = condensed.fifty_word;
    const auto short_result = generate_short(prompts, set.long_description, llm, options);
    set.short_description = short_result.text;
    set.meta.short_words = short_result.words;
    set.meta.short_over_limit = short_result.over_limit;
    set.on_screen_text = join_on_screen_text(inputs.records);
    set.meta.finished_at = clock();
    validate(set);
    return set;
}

}  // namespace shortscribe::summarize
