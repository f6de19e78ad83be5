#include <algorithm>
#include <charconv>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/store.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::store {

namespace fs = std::filesystem;

namespace {

bool valid_id(const std::string& id) {
    if (id.empty() || id.size() > 128) return false;
    for (char c : id)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) return false;
    return true;
}

/// Scoped claim on a video id; only one writer may hold it.
class WriterClaim {
public:
    WriterClaim(std::mutex& m, std::set<std::string>& held, std::string id) : m_(m), held_(held), id_(std::move(id)) {
        std::lock_guard lock(m_);
        if (!held_.insert(id_).second)
            throw Error(ErrorCode::ConcurrentWrite, fmt::format("document '{}' is being written by another caller", id_));
    }
    ~WriterClaim() {
        std::lock_guard lock(m_);
        held_.erase(id_);
    }
    WriterClaim(const WriterClaim&) = delete;
    WriterClaim& operator=(const WriterClaim&) = delete;

private:
    std::mutex& m_;
    std::set<std::string>& held_;
    std::string id_;
};

}  // namespace

DocumentStore::DocumentStore(fs::path root, ContentLexicon lexicon) : root_(std::move(root)), lexicon_(std::move(lexicon)) {
    fs::create_directories(root_ / "videos");
    fs::create_directories(root_ / "media");
    const auto index_file = root_ / "index.json";
    if (fs::exists(index_file)) {
        try {
            const auto j = nlohmann::json::parse(util::read_file(index_file));
            index_ = j.at("ids").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::SchemaViolation, fmt::format("{}: {}", index_file.string(), e.what()));
        }
    }
}

fs::path DocumentStore::doc_path(const std::string& id) const { return root_ / "videos" / (id + ".json"); }

void DocumentStore::write_index_locked() const {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["ids"] = index_;
    util::write_file_atomic(root_ / "index.json", j.dump(2) + "\n");
}

void DocumentStore::save_document(const FeedDocument& doc) {
    validate(doc);
    FeedDocument filtered = doc;
    if (filtered.description_set)
        filtered.description_set = filter_description_set(std::move(*filtered.description_set), lexicon_);

    WriterClaim claim(writers_mutex_, writers_, doc.video_id);
    util::write_file_atomic(doc_path(doc.video_id), to_json(filtered).dump(2) + "\n");

    std::unique_lock lock(mutex_);
    if (std::find(index_.begin(), index_.end(), doc.video_id) == index_.end()) {
        index_.push_back(doc.video_id);
        write_index_locked();
    }
}

bool DocumentStore::contains(const std::string& video_id) const {
    std::shared_lock lock(mutex_);
    return std::find(index_.begin(), index_.end(), video_id) != index_.end();
}

std::vector<std::string> DocumentStore::ids() const {
    std::shared_lock lock(mutex_);
    return index_;
}

FeedDocument DocumentStore::load_document(const std::string& video_id) const {
    if (!valid_id(video_id) || !contains(video_id))
        throw Error(ErrorCode::NotFound, fmt::format("no video '{}'", video_id));
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(util::read_file(doc_path(video_id)));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::SchemaViolation, fmt::format("document '{}' is not valid JSON: {}", video_id, e.what()));
    }
    return feed_document_from_json(j);
}

FeedPage DocumentStore::list_feed(const std::string& cursor, std::size_t page_size) const {
    if (page_size < 1) throw Error(ErrorCode::InvalidCursor, "page size must be at least 1");
    const auto all = ids();
    std::size_t offset = 0;
    if (!cursor.empty()) {
        const auto [ptr, ec] = std::from_chars(cursor.data(), cursor.data() + cursor.size(), offset);
        if (ec != std::errc{} || ptr != cursor.data() + cursor.size() || offset > all.size())
            throw Error(ErrorCode::InvalidCursor, fmt::format("cursor '{}' is not valid", cursor));
    }
    FeedPage page;
    const std::size_t end = std::min(all.size(), offset + page_size);
    for (std::size_t i = offset; i < end; ++i) {
        const auto doc = load_document(all[i]);
        FeedSummary s;
        s.video_id = doc.video_id;
        s.described = doc.description_set.has_value();
        if (s.described) s.short_description = doc.description_set->short_description;
        s.username = doc.username;
        s.author_caption = doc.author_caption;
        s.audio_title = doc.audio_title;
        s.likes = doc.likes;
        s.comments = doc.comments;
        s.bookmarks = doc.bookmarks;
        s.shares = doc.shares;
        s.video_url = doc.video_url;
        page.items.push_back(std::move(s));
    }
    if (end < all.size()) page.next_cursor = std::to_string(end);
    return page;
}

std::optional<fs::path> DocumentStore::media_path(const std::string& video_id) const {
    if (!valid_id(video_id)) return std::nullopt;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(media_dir(), ec)) {
        if (entry.is_regular_file() && entry.path().stem() == video_id) return entry.path();
    }
    return std::nullopt;
}

}  // namespace shortscribe::store
