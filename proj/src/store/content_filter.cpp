#include <algorithm>
#include <cctype>

#include "shortscribe/error.hpp"
#include "shortscribe/store.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::store {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool usable_entry(const std::string& entry, const std::string& replacement) {
    if (entry.empty()) return false;
    if (!is_word_byte(static_cast<unsigned char>(entry.front())) || !is_word_byte(static_cast<unsigned char>(entry.back())))
        return false;
    return replacement.empty() || entry.find(replacement) == std::string::npos;
}

}  // namespace

ContentLexicon ContentLexicon::load(const std::filesystem::path& path) {
    ContentLexicon lex;
    const std::string text = util::read_file(path);
    std::size_t start = 0;
    int line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const auto line = util::trim(std::string_view(text).substr(start, end - start));
        start = end + 1;
        if (line.empty() || line.front() == '#') continue;
        if (!usable_entry(util::to_lower(line), lex.replacement))
            throw Error(ErrorCode::ConfigError,
                        path.string() + ":" + std::to_string(line_no) + ": entry must start and end with a letter or digit");
        lex.entries.push_back(line);
    }
    return lex;
}

std::string content_filter(std::string_view text, const ContentLexicon& lexicon) {
    for (unsigned char c : lexicon.replacement)
        if (is_word_byte(c)) throw Error(ErrorCode::ConfigError, "replacement token must not contain letters or digits");

    std::vector<std::string> entries;
    for (const auto& e : lexicon.entries) {
        auto lower = util::to_lower(e);
        if (usable_entry(lower, lexicon.replacement)) entries.push_back(std::move(lower));
    }
    if (entries.empty()) return std::string(text);
    // Longest match first at each position.
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });

    const std::string lower = util::to_lower(text);
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const bool at_boundary = i == 0 || !is_word_byte(static_cast<unsigned char>(lower[i - 1]));
        bool replaced = false;
        if (at_boundary) {
            for (const auto& e : entries) {
                if (lower.compare(i, e.size(), e) != 0) continue;
                const std::size_t end = i + e.size();
                if (end < lower.size() && is_word_byte(static_cast<unsigned char>(lower[end]))) continue;
                out += lexicon.replacement;
                i = end;
                replaced = true;
                break;
            }
        }
        if (!replaced) out += text[i++];
    }
    return out;
}

summarize::DescriptionSet filter_description_set(summarize::DescriptionSet set, const ContentLexicon& lexicon) {
    set.short_description = content_filter(set.short_description, lexicon);
    set.long_description = content_filter(set.long_description, lexicon);
    if (set.fifty_word) set.fifty_word = content_filter(*set.fifty_word, lexicon);
    set.on_screen_text = content_filter(set.on_screen_text, lexicon);
    for (auto& s : set.shot_by_shot) s.text = content_filter(s.text, lexicon);
    return set;
}

}  // namespace shortscribe::store
