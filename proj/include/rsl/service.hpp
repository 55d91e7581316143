#pragma once

// Many sessions behind one object. Each session is a single writer: its
// operations run under a per-session mutex on a copy, and the copy replaces
// the live state only after the new events reach the log. A failed append
// therefore leaves memory and disk in agreement.

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "rsl/error.hpp"
#include "rsl/events.hpp"
#include "rsl/layers.hpp"
#include "rsl/session.hpp"

namespace rsl {

/// One append-only NDJSON file per session under a directory. Every append
/// is fsynced before it returns.
class EventStore {
public:
    explicit EventStore(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec || !std::filesystem::is_directory(dir_))
            fail(ErrorCode::PersistenceFailure, "cannot use " + dir_.string() + " for session logs");
    }

    const std::filesystem::path& dir() const { return dir_; }

    std::filesystem::path path_for(const std::string& session_id) const { return dir_ / (session_id + ".ndjson"); }

    void append(const std::string& session_id, std::span<const EventRecord> events) const {
        if (events.empty()) return;
        std::string text;
        for (const auto& e : events) text += to_line(e) + '\n';
        const std::string path = path_for(session_id).string();
        const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
        if (fd < 0) fail(ErrorCode::PersistenceFailure, "open " + path + ": " + std::strerror(errno));
        std::size_t done = 0;
        while (done < text.size()) {
            const ssize_t n = ::write(fd, text.data() + done, text.size() - done);
            if (n < 0 && errno == EINTR) continue;
            if (n <= 0) {
                const std::string why = std::strerror(errno);
                ::close(fd);
                fail(ErrorCode::PersistenceFailure, "write " + path + ": " + why);
            }
            done += static_cast<std::size_t>(n);
        }
        if (::fsync(fd) != 0) {
            const std::string why = std::strerror(errno);
            ::close(fd);
            fail(ErrorCode::PersistenceFailure, "fsync " + path + ": " + why);
        }
        ::close(fd);
    }

    std::vector<EventRecord> load(const std::string& session_id) const { return load_file(path_for(session_id)); }

    /// Every log in the directory, in file-name order.
    std::vector<std::vector<EventRecord>> load_all() const {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(dir_))
            if (entry.is_regular_file() && entry.path().extension() == ".ndjson") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        std::vector<std::vector<EventRecord>> out;
        for (const auto& f : files) out.push_back(load_file(f));
        return out;
    }

private:
    static std::vector<EventRecord> load_file(const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) fail(ErrorCode::PersistenceFailure, "cannot read " + p.string());
        return read_event_log(in);
    }

    std::filesystem::path dir_;
};

struct CreateRequest {
    std::string participant_id;
    std::uint64_t seed = 0;
    std::optional<Treatment> treatment;
    std::optional<SessionConfig> config;
};

class SessionService {
public:
    /// Wall-clock milliseconds since the Unix epoch.
    using WallClock = std::function<std::int64_t()>;

    struct Options {
        std::optional<std::filesystem::path> log_dir;  // in-memory only when empty
        WallClock wall_clock;
    };

    explicit SessionService(Options options = {}) : wall_clock_(std::move(options.wall_clock)) {
        if (!wall_clock_)
            wall_clock_ = [] {
                using namespace std::chrono;
                return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
            };
        if (options.log_dir) {
            store_.emplace(*options.log_dir);
            for (const auto& log : store_->load_all()) {
                if (log.empty()) continue;
                const std::string id = log.front().session_id;
                const auto started = log.front().payload.value("started_at_unix_ms", std::int64_t{0});
                sessions_.emplace(id, std::make_shared<Entry>(Session::replay(log, clock_for(started))));
            }
        }
    }

    Session create(const CreateRequest& req) {
        if (req.participant_id.empty()) fail(ErrorCode::InvalidArgument, "participant_id must not be empty");
        const std::string id = Session::derive_session_id(req.participant_id, req.seed);
        std::unique_lock lock(map_mutex_);
        if (sessions_.count(id)) fail(ErrorCode::DuplicateSession, "session " + id + " already exists");
        Session::Options o;
        o.treatment_override = req.treatment;
        if (req.config) o.config = *req.config;
        o.started_at_unix_ms = wall_clock_();
        o.clock = clock_for(*o.started_at_unix_ms);
        Session s = Session::create(req.participant_id, req.seed, std::move(o));
        if (store_) store_->append(id, s.events());
        sessions_.emplace(id, std::make_shared<Entry>(s));
        return s;
    }

    /// Runs `op` on a copy of the session under its lock, persists the new
    /// events, then publishes the copy. Returns whatever `op` returns.
    template <class Op>
    auto mutate(const std::string& id, Op&& op) {
        const auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        Session next = entry->session;
        const std::size_t before = next.events().size();
        if constexpr (std::is_void_v<decltype(op(next))>) {
            op(next);
            commit(*entry, std::move(next), before);
        } else {
            auto out = op(next);
            commit(*entry, std::move(next), before);
            return out;
        }
    }

    /// Consistent snapshot of one session.
    Session snapshot(const std::string& id) const {
        const auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        return entry->session;
    }

    EvaluateOutcome evaluate(const std::string& id, const DialInput& in) {
        return mutate(id, [&](Session& s) { return s.evaluate(in); });
    }
    TaskResult finalize(const std::string& id) {
        return mutate(id, [](Session& s) { return s.finalize(); });
    }
    void start_next_task(const std::string& id) {
        mutate(id, [](Session& s) { s.start_next_task(); });
    }
    Json view(const std::string& id) const { return snapshot(id).participant_view(); }
    Cents bonus(const std::string& id) const { return snapshot(id).bonus(); }
    LayeredGrid export_layers(const std::string& id, int task) const {
        const Session s = snapshot(id);
        if (task < 0 || task >= kTaskCount) fail(ErrorCode::InvalidArgument, "task index " + std::to_string(task));
        return rsl::export_layers(s, task);
    }

    std::vector<std::string> session_ids() const {
        std::shared_lock lock(map_mutex_);
        std::vector<std::string> out;
        for (const auto& [id, _] : sessions_) out.push_back(id);
        return out;
    }

    std::size_t size() const {
        std::shared_lock lock(map_mutex_);
        return sessions_.size();
    }

private:
    struct Entry {
        explicit Entry(Session s) : session(std::move(s)) {}
        std::mutex mutex;
        Session session;
    };

    Session::Clock clock_for(std::int64_t started_at) const {
        return [wall = wall_clock_, started_at] { return wall() - started_at; };
    }

    std::shared_ptr<Entry> find(const std::string& id) const {
        std::shared_lock lock(map_mutex_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) fail(ErrorCode::UnknownSession, "no session " + id);
        return it->second;
    }

    void commit(Entry& entry, Session next, std::size_t before) {
        if (store_) {
            const auto& ev = next.events();
            store_->append(next.session_id(), std::span<const EventRecord>(ev).subspan(before));
        }
        entry.session = std::move(next);
    }

    WallClock wall_clock_;
    std::optional<EventStore> store_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace rsl
