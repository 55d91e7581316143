#pragma once

// Append-only event records. One record per line of newline-delimited JSON:
//
//   {"kind":"HumanInput","payload":{...},"seq":3,"session_id":"s...","v":1,"wall_clock_ms":1520}
//
// Keys are emitted in sorted order and doubles in shortest round-trip form,
// so re-serializing a parsed record reproduces the original bytes.

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rsl/codec.hpp"
#include "rsl/error.hpp"

namespace rsl {

inline constexpr int kProtocolVersion = 1;

enum class EventKind { SessionCreated, TaskStarted, HumanInput, HelperQuery, HelperChoice, Feedback, Finalized, BonusComputed };

inline std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::SessionCreated: return "SessionCreated";
        case EventKind::TaskStarted: return "TaskStarted";
        case EventKind::HumanInput: return "HumanInput";
        case EventKind::HelperQuery: return "HelperQuery";
        case EventKind::HelperChoice: return "HelperChoice";
        case EventKind::Feedback: return "Feedback";
        case EventKind::Finalized: return "Finalized";
        case EventKind::BonusComputed: return "BonusComputed";
    }
    return "Unknown";
}

inline EventKind parse_event_kind(std::string_view s) {
    for (EventKind k : {EventKind::SessionCreated, EventKind::TaskStarted, EventKind::HumanInput, EventKind::HelperQuery,
                        EventKind::HelperChoice, EventKind::Feedback, EventKind::Finalized, EventKind::BonusComputed})
        if (to_string(k) == s) return k;
    fail(ErrorCode::ParseError, "unknown event kind '" + std::string(s) + "'");
}

struct EventRecord {
    std::string session_id;
    std::int64_t sequence = 0;
    EventKind kind = EventKind::SessionCreated;
    Json payload = Json::object();
    std::optional<std::int64_t> wall_clock_ms;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Payload keys that carry clock readings rather than content.
inline bool is_clock_key(std::string_view key) { return key == "timestamp_ms" || key == "started_at_unix_ms"; }

inline Json without_clock(const Json& j) {
    if (j.is_object()) {
        Json out = Json::object();
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!is_clock_key(it.key())) out[it.key()] = without_clock(it.value());
        return out;
    }
    if (j.is_array()) {
        Json out = Json::array();
        for (const auto& v : j) out.push_back(without_clock(v));
        return out;
    }
    return j;
}

/// Equality of everything except clock readings.
inline bool same_content(const EventRecord& a, const EventRecord& b) {
    return a.session_id == b.session_id && a.sequence == b.sequence && a.kind == b.kind &&
           without_clock(a.payload) == without_clock(b.payload);
}

inline Json to_json(const EventRecord& e) {
    Json j{{"v", kProtocolVersion},
           {"session_id", e.session_id},
           {"seq", e.sequence},
           {"kind", std::string(to_string(e.kind))},
           {"payload", e.payload}};
    if (e.wall_clock_ms) j["wall_clock_ms"] = *e.wall_clock_ms;
    return j;
}

inline std::string to_line(const EventRecord& e) { return to_json(e).dump(); }

inline EventRecord event_from_json(const Json& j) {
    try {
        if (j.value("v", kProtocolVersion) != kProtocolVersion)
            fail(ErrorCode::ParseError, "unsupported event version " + j.at("v").dump());
        EventRecord e;
        e.session_id = j.at("session_id").get<std::string>();
        e.sequence = j.at("seq").get<std::int64_t>();
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        e.payload = j.value("payload", Json::object());
        if (j.contains("wall_clock_ms") && !j.at("wall_clock_ms").is_null())
            e.wall_clock_ms = j.at("wall_clock_ms").get<std::int64_t>();
        return e;
    } catch (const Json::exception& ex) {
        fail(ErrorCode::ParseError, std::string("bad event record: ") + ex.what());
    }
}

inline EventRecord event_from_line(const std::string& line) {
    Json j;
    try {
        j = Json::parse(line);
    } catch (const Json::exception& ex) {
        fail(ErrorCode::ParseError, std::string("bad event line: ") + ex.what());
    }
    return event_from_json(j);
}

/// Reads a whole log, skipping blank lines. Sequence numbers must be gapless
/// from zero within one session.
inline std::vector<EventRecord> read_event_log(std::istream& is) {
    std::vector<EventRecord> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        EventRecord e = event_from_line(line);
        if (e.sequence != static_cast<std::int64_t>(out.size()))
            fail(ErrorCode::InconsistentRecord, "event sequence " + std::to_string(e.sequence) + " where " +
                                                    std::to_string(out.size()) + " expected");
        if (!out.empty() && e.session_id != out.front().session_id)
            fail(ErrorCode::InconsistentRecord, "mixed session ids in one log");
        out.push_back(std::move(e));
    }
    return out;
}

inline void write_event_log(std::ostream& os, const std::vector<EventRecord>& events) {
    for (const auto& e : events) os << to_line(e) << '\n';
}

}  // namespace rsl
