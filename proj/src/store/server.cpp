#include <httplib.h>

#include <charconv>
#include <chrono>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "shortscribe/error.hpp"
#include "shortscribe/store.hpp"
#include "shortscribe/util.hpp"

namespace shortscribe::store {

namespace {

using nlohmann::ordered_json;

constexpr std::size_t kDefaultPageSize = 10;
constexpr std::size_t kMaxPageSize = 100;

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotFound: return 404;
        case ErrorCode::InvalidCursor:
        case ErrorCode::UnknownControl:
        case ErrorCode::InvalidEvent:
        case ErrorCode::SchemaViolation: return 400;
        default: return 500;
    }
}

void send_json(httplib::Response& res, const ordered_json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["error"] = std::string(to_string(code));
    j["message"] = message;
    send_json(res, j, status_for(code));
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const Error& e) {
            send_error(res, e.code(), e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, ErrorCode::SchemaViolation, e.what());
        }
    };
}

std::string content_type_for(const std::filesystem::path& p) {
    const auto ext = util::to_lower(p.extension().string());
    if (ext == ".mp4" || ext == ".m4v") return "video/mp4";
    if (ext == ".webm") return "video/webm";
    if (ext == ".mov") return "video/quicktime";
    if (ext == ".mkv") return "video/x-matroska";
    return "application/octet-stream";
}

std::int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

}  // namespace

struct ApiServer::Impl {
    DocumentStore& store;
    EventLog& events;
    ServerOptions options;
    httplib::Server server;
    std::thread thread;

    Impl(DocumentStore& s, EventLog& e, ServerOptions o) : store(s), events(e), options(std::move(o)) {
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
        });
        routes();
    }

    void routes() {
        server.Get("/api/feed", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       std::size_t limit = kDefaultPageSize;
                       if (req.has_param("limit")) {
                           const auto raw = req.get_param_value("limit");
                           std::size_t parsed = 0;
                           const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), parsed);
                           if (ec != std::errc{} || ptr != raw.data() + raw.size() || parsed < 1 || parsed > kMaxPageSize)
                               throw Error(ErrorCode::InvalidCursor,
                                           fmt::format("limit must be between 1 and {}", kMaxPageSize));
                           limit = parsed;
                       }
                       const auto page = store.list_feed(req.get_param_value("cursor"), limit);
                       ordered_json j;
                       j["schema_version"] = kSchemaVersion;
                       j["items"] = ordered_json::array();
                       for (const auto& item : page.items) j["items"].push_back(to_json(item));
                       j["next_cursor"] = page.next_cursor ? ordered_json(*page.next_cursor) : ordered_json(nullptr);
                       send_json(res, j);
                   }));

        server.Get(R"(/api/videos/([A-Za-z0-9_-]+))",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       send_json(res, to_json(store.load_document(req.matches[1])));
                   }));

        server.Get(R"(/api/videos/([A-Za-z0-9_-]+)/descriptions)",
                   guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const auto doc = store.load_document(req.matches[1]);
                       if (!doc.description_set)
                           throw Error(ErrorCode::NotFound, fmt::format("video '{}' has no descriptions yet", doc.video_id));
                       ordered_json j;
                       j["schema_version"] = kSchemaVersion;
                       j["video_id"] = doc.video_id;
                       const auto set = to_json(*doc.description_set);
                       for (const auto& [k, v] : set.items()) j[k] = v;
                       send_json(res, j);
                   }));

        server.Post("/api/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
                        auto body = nlohmann::json::parse(req.body);
                        if (body.is_object() && !body.contains("timestamp")) body["timestamp"] = now_ms();
                        const auto event = interaction_event_from_json(body);
                        const auto seq = events.log_event(event);
                        ordered_json j;
                        j["schema_version"] = kSchemaVersion;
                        j["ack"] = true;
                        j["seq"] = seq;
                        send_json(res, j, 201);
                    }));

        server.Get(R"(/media/([A-Za-z0-9_-]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                       const std::string id = req.matches[1];
                       const auto path = store.contains(id) ? store.media_path(id) : std::nullopt;
                       if (!path) throw Error(ErrorCode::NotFound, fmt::format("no media for '{}'", id));
                       res.set_content(util::read_file(*path), content_type_for(*path));
                   }));

        if (!options.static_dir.empty() && std::filesystem::is_directory(options.static_dir))
            server.set_mount_point("/", options.static_dir.string());
    }
};

ApiServer::ApiServer(DocumentStore& store, EventLog& events, ServerOptions options)
    : impl_(std::make_unique<Impl>(store, events, std::move(options))) {}

ApiServer::~ApiServer() { stop(); }

void ApiServer::bind() {
    const auto& o = impl_->options;
    if (o.port == 0) {
        port_ = impl_->server.bind_to_any_port(o.host);
        if (port_ <= 0) throw Error(ErrorCode::PortInUse, fmt::format("cannot bind any port on {}", o.host));
    } else {
        if (!impl_->server.bind_to_port(o.host, o.port))
            throw Error(ErrorCode::PortInUse, fmt::format("port {} on {} is not available", o.port, o.host));
        port_ = o.port;
    }
}

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::start_background() {
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ApiServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace shortscribe::store
