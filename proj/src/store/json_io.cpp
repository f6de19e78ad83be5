#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/store.hpp"

namespace shortscribe::store {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <typename T>
T get_field(const json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key))
        throw Error(ErrorCode::SchemaViolation, fmt::format("{}: missing '{}'", where, key));
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::SchemaViolation, fmt::format("{}: field '{}' has the wrong type", where, key));
    }
}

}  // namespace

ordered_json to_json(const summarize::DescriptionSet& set) {
    ordered_json shots = ordered_json::array();
    for (const auto& s : set.shot_by_shot) shots.push_back({{"shot_number", s.shot_number}, {"text", s.text}});
    const auto& m = set.meta;
    ordered_json meta;
    meta["prompt_hashes"] = m.prompt_hashes;
    meta["backend_ids"] = m.backend_ids;
    meta["llm_model_id"] = m.llm_model_id;
    meta["llm_temperature"] = m.llm_temperature;
    meta["started_at"] = m.started_at;
    meta["finished_at"] = m.finished_at;
    meta["shot_count"] = m.shot_count;
    meta["long_raw_words"] = m.long_raw_words;
    meta["short_words"] = m.short_words;
    meta["short_over_limit"] = m.short_over_limit;
    meta["input_hash"] = m.input_hash;

    ordered_json j;
    j["short"] = set.short_description;
    j["long"] = set.long_description;
    j["fifty_word"] = set.fifty_word ? ordered_json(*set.fifty_word) : ordered_json(nullptr);
    j["on_screen_text"] = set.on_screen_text;
    j["shot_by_shot"] = std::move(shots);
    j["generation_meta"] = std::move(meta);
    return j;
}

summarize::DescriptionSet description_set_from_json(const json& j) {
    constexpr const char* kWhere = "description_set";
    summarize::DescriptionSet set;
    set.short_description = get_field<std::string>(j, "short", kWhere);
    set.long_description = get_field<std::string>(j, "long", kWhere);
    if (j.contains("fifty_word") && !j.at("fifty_word").is_null())
        set.fifty_word = get_field<std::string>(j, "fifty_word", kWhere);
    set.on_screen_text = get_field<std::string>(j, "on_screen_text", kWhere);
    for (const auto& s : get_field<json>(j, "shot_by_shot", kWhere))
        set.shot_by_shot.push_back({get_field<int>(s, "shot_number", "shot_by_shot[]"),
                                    get_field<std::string>(s, "text", "shot_by_shot[]")});
    const auto meta = get_field<json>(j, "generation_meta", kWhere);
    constexpr const char* kMeta = "generation_meta";
    auto& m = set.meta;
    m.prompt_hashes = get_field<std::map<std::string, std::string>>(meta, "prompt_hashes", kMeta);
    m.backend_ids = get_field<std::map<std::string, std::string>>(meta, "backend_ids", kMeta);
    m.llm_model_id = get_field<std::string>(meta, "llm_model_id", kMeta);
    m.llm_temperature = get_field<double>(meta, "llm_temperature", kMeta);
    m.started_at = get_field<std::string>(meta, "started_at", kMeta);
    m.finished_at = get_field<std::string>(meta, "finished_at", kMeta);
    m.shot_count = get_field<std::size_t>(meta, "shot_count", kMeta);
    m.long_raw_words = get_field<std::size_t>(meta, "long_raw_words", kMeta);
    m.short_words = get_field<std::size_t>(meta, "short_words", kMeta);
    m.short_over_limit = get_field<bool>(meta, "short_over_limit", kMeta);
    m.input_hash = get_field<std::string>(meta, "input_hash", kMeta);
    return set;
}

ordered_json to_json(const FeedDocument& doc) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["video_id"] = doc.video_id;
    // Video pane read order.
    j["short_description"] =
        doc.description_set ? ordered_json(doc.description_set->short_description) : ordered_json(nullptr);
    j["username"] = doc.username;
    j["author_caption"] = doc.author_caption;
    j["audio_title"] = doc.audio_title;
    j["likes"] = doc.likes;
    j["comments"] = doc.comments;
    j["bookmarks"] = doc.bookmarks;
    j["shares"] = doc.shares;
    j["video_url"] = doc.video_url;
    j["description_set"] = doc.description_set ? to_json(*doc.description_set) : ordered_json(nullptr);
    return j;
}

FeedDocument feed_document_from_json(const json& j) {
    constexpr const char* kWhere = "feed document";
    if (j.contains("schema_version") && j.at("schema_version") != kSchemaVersion)
        throw Error(ErrorCode::SchemaViolation, fmt::format("unsupported schema_version {}", j.at("schema_version").dump()));
    FeedDocument d;
    d.video_id = get_field<std::string>(j, "video_id", kWhere);
    d.username = get_field<std::string>(j, "username", kWhere);
    d.author_caption = get_field<std::string>(j, "author_caption", kWhere);
    d.audio_title = get_field<std::string>(j, "audio_title", kWhere);
    d.likes = get_field<std::int64_t>(j, "likes", kWhere);
    d.comments = get_field<std::int64_t>(j, "comments", kWhere);
    d.bookmarks = get_field<std::int64_t>(j, "bookmarks", kWhere);
    d.shares = get_field<std::int64_t>(j, "shares", kWhere);
    d.video_url = get_field<std::string>(j, "video_url", kWhere);
    if (j.contains("description_set") && !j.at("description_set").is_null())
        d.description_set = description_set_from_json(j.at("description_set"));
    return d;
}

ordered_json to_json(const FeedSummary& s) {
    ordered_json j;
    j["video_id"] = s.video_id;
    j["short_description"] = s.described ? ordered_json(s.short_description) : ordered_json(nullptr);
    j["username"] = s.username;
    j["author_caption"] = s.author_caption;
    j["audio_title"] = s.audio_title;
    j["likes"] = s.likes;
    j["comments"] = s.comments;
    j["bookmarks"] = s.bookmarks;
    j["shares"] = s.shares;
    j["video_url"] = s.video_url;
    return j;
}

void validate(const FeedDocument& doc) {
    auto fail = [&](const std::string& what) {
        throw Error(ErrorCode::SchemaViolation, fmt::format("document '{}': {}", doc.video_id, what));
    };
    if (doc.video_id.empty()) fail("empty video_id");
    for (char c : doc.video_id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) fail("video_id has invalid characters");
    if (doc.likes < 0 || doc.comments < 0 || doc.bookmarks < 0 || doc.shares < 0) fail("negative engagement count");
    if (doc.description_set) {
        try {
            summarize::validate(*doc.description_set);
        } catch (const Error& e) {
            fail(e.what());
        }
    }
}

std::string_view to_string(Control c) noexcept {
    switch (c) {
        case Control::Prev: return "prev";
        case Control::Next: return "next";
        case Control::Play: return "play";
        case Control::Pause: return "pause";
        case Control::OpenDescriptions: return "open_descriptions";
        case Control::CloseDescriptions: return "close_descriptions";
        case Control::Like: return "like";
        case Control::Comment: return "comment";
        case Control::Bookmark: return "bookmark";
        case Control::Share: return "share";
    }
    return "unknown";
}

Control parse_control(std::string_view s) {
    for (int i = 0; i <= static_cast<int>(Control::Share); ++i) {
        const auto c = static_cast<Control>(i);
        if (to_string(c) == s) return c;
    }
    throw Error(ErrorCode::UnknownControl, fmt::format("'{}' is not a known control", s));
}

ordered_json to_json(const InteractionEvent& e) {
    ordered_json j;
    j["session_id"] = e.session_id;
    j["video_id"] = e.video_id;
    j["control"] = std::string(to_string(e.control));
    j["timestamp"] = e.timestamp_ms;
    return j;
}

InteractionEvent interaction_event_from_json(const json& j) {
    constexpr const char* kWhere = "event";
    InteractionEvent e;
    e.session_id = get_field<std::string>(j, "session_id", kWhere);
    e.video_id = get_field<std::string>(j, "video_id", kWhere);
    e.control = parse_control(get_field<std::string>(j, "control", kWhere));
    e.timestamp_ms = get_field<std::int64_t>(j, "timestamp", kWhere);
    return e;
}

}  // namespace shortscribe::store
