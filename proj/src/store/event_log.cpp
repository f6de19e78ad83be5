#include <fstream>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/store.hpp"

namespace shortscribe::store {

EventLog::EventLog(std::filesystem::path file) : file_(std::move(file)) {
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ifstream in(file_);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto e = interaction_event_from_json(nlohmann::json::parse(line));
            last_ts_[e.session_id] = e.timestamp_ms;
            events_.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw Error(ErrorCode::SchemaViolation, fmt::format("{}:{}: {}", file_.string(), line_no, ex.what()));
        }
    }
}

std::uint64_t EventLog::log_event(const InteractionEvent& e) {
    if (e.session_id.empty() || e.video_id.empty())
        throw Error(ErrorCode::InvalidEvent, "event needs a session_id and a video_id");
    std::lock_guard lock(mutex_);
    if (const auto it = last_ts_.find(e.session_id); it != last_ts_.end() && e.timestamp_ms < it->second)
        throw Error(ErrorCode::InvalidEvent, fmt::format("timestamp {} precedes {} in session '{}'", e.timestamp_ms,
                                                         it->second, e.session_id));
    std::ofstream out(file_, std::ios::app);
    out << to_json(e).dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::InvalidEvent, "cannot append to " + file_.string());
    last_ts_[e.session_id] = e.timestamp_ms;
    events_.push_back(e);
    return events_.size();
}

std::vector<InteractionEvent> EventLog::session_events(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    std::vector<InteractionEvent> out;
    for (const auto& e : events_)
        if (e.session_id == session_id) out.push_back(e);
    return out;
}

std::size_t EventLog::size() const {
    std::lock_guard lock(mutex_);
    return events_.size();
}

}  // namespace shortscribe::store
