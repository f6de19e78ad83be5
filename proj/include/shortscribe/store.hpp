#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "summarize.hpp"

namespace shortscribe::store {

inline constexpr int kSchemaVersion = 1;

struct FeedDocument {
    std::string video_id;
    std::string username;
    std::string author_caption;
    std::string audio_title;
    std::int64_t likes = 0;
    std::int64_t comments = 0;
    std::int64_t bookmarks = 0;
    std::int64_t shares = 0;
    std::string video_url;
    std::optional<summarize::DescriptionSet> description_set;
    bool operator==(const FeedDocument&) const = default;
};

/// Feed entry without the description pane payload.
struct FeedSummary {
    std::string video_id;
    std::string short_description;
    std::string username;
    std::string author_caption;
    std::string audio_title;
    std::int64_t likes = 0;
    std::int64_t comments = 0;
    std::int64_t bookmarks = 0;
    std::int64_t shares = 0;
    std::string video_url;
    bool described = false;
};

// JSON mapping. Keys follow the video pane read order: short description,
// username, caption, audio title, likes, comments, bookmarks, shares.
nlohmann::ordered_json to_json(const summarize::DescriptionSet& set);
summarize::DescriptionSet description_set_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const FeedDocument& doc);
FeedDocument feed_document_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const FeedSummary& s);

/// SchemaViolation on negative counts, empty id, or a broken description set.
void validate(const FeedDocument& doc);

// ---------------------------------------------------------------------------
// Content filter
// ---------------------------------------------------------------------------

struct ContentLexicon {
    std::vector<std::string> entries;
    std::string replacement = "***";

    /// One entry per line; blank lines and '#' comments ignored.
    static ContentLexicon load(const std::filesystem::path& path);
};

/// Replaces every case-insensitive whole-word occurrence of a lexicon entry
/// with the replacement token; all other bytes are left unchanged.
std::string content_filter(std::string_view text, const ContentLexicon& lexicon);

summarize::DescriptionSet filter_description_set(summarize::DescriptionSet set, const ContentLexicon& lexicon);

// ---------------------------------------------------------------------------
// Document store: <root>/index.json + <root>/videos/<id>.json + <root>/media/
// ---------------------------------------------------------------------------

struct FeedPage {
    std::vector<FeedSummary> items;
    std::optional<std::string> next_cursor;  // nullopt == terminal
};

class DocumentStore {
public:
    explicit DocumentStore(std::filesystem::path root, ContentLexicon lexicon = {});

    const std::filesystem::path& root() const { return root_; }

    /// Validates, filters descriptions, persists. Appends the id to the index
    /// on first save. ConcurrentWrite when another save of the same id is in flight.
    void save_document(const FeedDocument& doc);
    FeedDocument load_document(const std::string& video_id) const;
    bool contains(const std::string& video_id) const;
    std::vector<std::string> ids() const;

    /// Cursor is an opaque position token; empty cursor starts at the head.
    FeedPage list_feed(const std::string& cursor, std::size_t page_size) const;

    std::filesystem::path media_dir() const { return root_ / "media"; }
    /// Path of the stored media file for id, if any.
    std::optional<std::filesystem::path> media_path(const std::string& video_id) const;

private:
    std::filesystem::path doc_path(const std::string& id) const;
    void write_index_locked() const;

    std::filesystem::path root_;
    ContentLexicon lexicon_;
    mutable std::shared_mutex mutex_;
    std::vector<std::string> index_;
    std::mutex writers_mutex_;
    std::set<std::string> writers_;
};

// ---------------------------------------------------------------------------
// Interaction log (append-only JSON lines)
// ---------------------------------------------------------------------------

enum class Control {
    Prev,
    Next,
    Play,
    Pause,
    OpenDescriptions,
    CloseDescriptions,
    Like,
    Comment,
    Bookmark,
    Share
};

std::string_view to_string(Control c) noexcept;
/// UnknownControl for anything outside the closed set.
Control parse_control(std::string_view s);

struct InteractionEvent {
    std::string session_id;
    std::string video_id;
    Control control = Control::Play;
    std::int64_t timestamp_ms = 0;
    bool operator==(const InteractionEvent&) const = default;
};

nlohmann::ordered_json to_json(const InteractionEvent& e);
InteractionEvent interaction_event_from_json(const nlohmann::json& j);

class EventLog {
public:
    explicit EventLog(std::filesystem::path file);

    /// Returns the global sequence number. InvalidEvent if the timestamp goes
    /// backwards within the session or ids are empty.
    std::uint64_t log_event(const InteractionEvent& e);
    std::vector<InteractionEvent> session_events(const std::string& session_id) const;
    std::size_t size() const;

private:
    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::vector<InteractionEvent> events_;
    std::map<std::string, std::int64_t> last_ts_;
};

// ---------------------------------------------------------------------------
// HTTP API
// ---------------------------------------------------------------------------

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    /// Static viewer assets served at "/" when the directory exists.
    std::filesystem::path static_dir;
};

class ApiServer {
public:
    ApiServer(DocumentStore& store, EventLog& events, ServerOptions options);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds the port (PortInUse on failure). port 0 picks a free port.
    void bind();
    int port() const { return port_; }
    /// Blocks until stop().
    void listen();
    void start_background();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_ = 0;
};

}  // namespace shortscribe::store
