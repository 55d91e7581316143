#pragma once

// One participant's run through the four incentivized tasks: two solo tasks
// followed by two team tasks with the annealing helper, each phase holding a
// one-peak and a four-peak landscape in random order.
//
// All randomness derives from (participant_id, master_seed). Every state
// change is also emitted as an event; feeding a log back through replay()
// rebuilds the same session.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rsl/codec.hpp"
#include "rsl/error.hpp"
#include "rsl/events.hpp"
#include "rsl/helper.hpp"
#include "rsl/landscape.hpp"
#include "rsl/moves.hpp"
#include "rsl/random.hpp"

namespace rsl {

inline constexpr int kTaskCount = 4;

enum class Phase { Solo, Team };
enum class PeakCount { One = 1, Four = 4 };
enum class SessionState { Active, BetweenTasks, Completed };

inline std::string_view to_string(Phase p) { return p == Phase::Solo ? "solo" : "team"; }
inline int peak_number(PeakCount p) { return static_cast<int>(p); }
inline std::string_view to_string(SessionState s) {
    switch (s) {
        case SessionState::Active: return "active";
        case SessionState::BetweenTasks: return "between_tasks";
        case SessionState::Completed: return "completed";
    }
    return "unknown";
}

struct Treatment {
    Frame frame = Frame::Gain;
    bool anchored = false;

    friend bool operator==(const Treatment&, const Treatment&) = default;
};

inline constexpr std::array<Treatment, 4> kTreatmentCells{
    {{Frame::Gain, false}, {Frame::Gain, true}, {Frame::Loss, false}, {Frame::Loss, true}}};

inline std::string_view anchor_label(bool anchored) { return anchored ? "on" : "off"; }

inline Json to_json(const Treatment& t) { return Json{{"frame", std::string(to_string(t.frame))}, {"anchored", t.anchored}}; }

inline Treatment treatment_from_json(const Json& j) {
    return {parse_frame(j.at("frame").get<std::string>()), j.at("anchored").get<bool>()};
}

struct SessionConfig {
    LandscapeConfig landscape;  // peak_count and seed are set per task
    HelperConfig helper;        // seed is set per task
    DialSetting initial_dial{0, 0};

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

inline Json to_json(const SessionConfig& c) {
    return Json{{"landscape", to_json(c.landscape)}, {"helper", to_json(c.helper)}, {"initial_dial", to_json(c.initial_dial)}};
}

inline SessionConfig session_config_from_json(const Json& j) {
    SessionConfig c;
    if (j.contains("landscape")) c.landscape = landscape_config_from_json(j.at("landscape"));
    if (j.contains("helper")) c.helper = helper_config_from_json(j.at("helper"));
    if (j.contains("initial_dial")) c.initial_dial = dial_from_json(j.at("initial_dial"));
    return c;
}

struct TaskSpec {
    int index = 0;
    Phase phase = Phase::Solo;
    PeakCount peaks = PeakCount::One;
    FramedLandscape landscape;
    std::optional<double> anchor_value;
    std::uint64_t helper_seed = 0;

    friend bool operator==(const TaskSpec&, const TaskSpec&) = default;
};

struct Evaluation {
    int sequence = 0;  // 1-based position in the task's feedback list
    int human_x = 0;
    std::optional<int> human_y;  // solo only
    std::optional<int> helper_y;  // team only
    DialSetting setting;
    double raw_value = 0.0;
    double displayed_value = 0.0;
    MoveClass move_class = MoveClass::Explore;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const Evaluation&, const Evaluation&) = default;
};

inline Json to_json(const Evaluation& e) {
    Json j{{"sequence", e.sequence},
           {"human_x", e.human_x},
           {"setting", to_json(e.setting)},
           {"letters", to_letters(e.setting)},
           {"raw_value", e.raw_value},
           {"displayed_value", e.displayed_value},
           {"move_class", std::string(to_string(e.move_class))},
           {"timestamp_ms", e.timestamp_ms}};
    j["human_y"] = e.human_y ? Json(*e.human_y) : Json(nullptr);
    j["helper_y"] = e.helper_y ? Json(*e.helper_y) : Json(nullptr);
    return j;
}

inline Evaluation evaluation_from_json(const Json& j) {
    Evaluation e;
    e.sequence = j.at("sequence").get<int>();
    e.human_x = j.at("human_x").get<int>();
    if (!j.at("human_y").is_null()) e.human_y = j.at("human_y").get<int>();
    if (!j.at("helper_y").is_null()) e.helper_y = j.at("helper_y").get<int>();
    e.setting = dial_from_json(j.at("setting"));
    e.raw_value = j.at("raw_value").get<double>();
    e.displayed_value = j.at("displayed_value").get<double>();
    e.move_class = parse_move_class(j.at("move_class").get<std::string>());
    e.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    return e;
}

struct TaskResult {
    DialSetting final_setting;
    double raw_score = 0.0;
    double displayed_score = 0.0;

    friend bool operator==(const TaskResult&, const TaskResult&) = default;
};

/// What the metrics module consumes for one task.
struct TaskRecord {
    int index = 0;
    Phase phase = Phase::Solo;
    PeakCount peaks = PeakCount::One;
    std::vector<Evaluation> evaluations;
    std::optional<TaskResult> result;
};

/// Participant input for one evaluation: both dials on solo tasks, the left
/// dial only on team tasks.
struct DialInput {
    int x = 0;
    std::optional<int> y;
};

struct EvaluateOutcome {
    Evaluation evaluation;
    std::optional<HelperTurn> helper;
};

/// Whole cents, to keep rounding out of downstream arithmetic.
struct Cents {
    std::int64_t value = 0;

    friend bool operator==(const Cents&, const Cents&) = default;

    std::string to_string() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(value / 100),
                      static_cast<long long>(value % 100));
        return buf;
    }
};

/// Per-task normalized score on [0, 1]: 0 at or below the landscape mean,
/// 1 at the global peak.
inline double normalized_score(double raw_score, double mean_elevation, double elevation_max) {
    return std::clamp((raw_score - mean_elevation) / (elevation_max - mean_elevation), 0.0, 1.0);
}

inline constexpr double kMaxBonusDollars = 2.00;

class Session {
public:
    /// Milliseconds since session start.
    using Clock = std::function<std::int64_t()>;

    struct Options {
        std::optional<Treatment> treatment_override;
        SessionConfig config;
        std::optional<std::string> session_id;
        std::optional<std::int64_t> started_at_unix_ms;
        Clock clock;
    };

    static std::string derive_session_id(const std::string& participant_id, std::uint64_t master_seed) {
        char buf[24];
        std::snprintf(buf, sizeof buf, "s%016llx",
                      static_cast<unsigned long long>(derive_seed(master_seed, "session-id:" + participant_id)));
        return buf;
    }

    static Session create(std::string participant_id, std::uint64_t master_seed, Options options = {}) {
        Session s;
        s.participant_id_ = std::move(participant_id);
        s.master_seed_ = master_seed;
        s.config_ = options.config;
        s.treatment_override_ = options.treatment_override;
        s.session_id_ = options.session_id.value_or(derive_session_id(s.participant_id_, master_seed));
        s.install_clock(std::move(options.clock), options.started_at_unix_ms);

        const std::uint64_t base = derive_seed(master_seed, "participant:" + s.participant_id_);
        Engine treatment_rng(derive_seed(base, "treatment"));
        const Treatment drawn = kTreatmentCells[uniform_index(treatment_rng, kTreatmentCells.size())];
        s.treatment_ = options.treatment_override.value_or(drawn);

        Engine order_rng(derive_seed(base, "order"));
        const bool solo_one_first = coin_flip(order_rng);
        const bool team_one_first = coin_flip(order_rng);

        for (int i = 0; i < kTaskCount; ++i) {
            TaskSpec t;
            t.index = i;
            t.phase = i < 2 ? Phase::Solo : Phase::Team;
            const bool one_first = t.phase == Phase::Solo ? solo_one_first : team_one_first;
            const bool first_of_phase = (i % 2) == 0;
            t.peaks = (first_of_phase == one_first) ? PeakCount::One : PeakCount::Four;

            LandscapeConfig lc = s.config_.landscape;
            lc.peak_count = peak_number(t.peaks);
            lc.seed = derive_seed(base, "task.landscape", static_cast<std::uint64_t>(i));
            Engine frame_rng(derive_seed(base, "task.frame", static_cast<std::uint64_t>(i)));
            t.landscape = apply_frame(generate(lc), s.treatment_.frame, frame_rng);
            if (s.treatment_.anchored) t.anchor_value = t.landscape.best_displayed();
            t.helper_seed = derive_seed(base, "task.helper", static_cast<std::uint64_t>(i));
            s.tasks_.push_back(std::move(t));
        }
        s.config_.helper.check();
        if (!s.config_.landscape.contains(s.config_.initial_dial))
            fail(ErrorCode::InvalidArgument, "initial dial outside landscape");
        s.histories_.resize(kTaskCount);
        s.results_.resize(kTaskCount);
        s.helpers_.resize(kTaskCount);

        s.now_ = s.clock_();
        Json tasks = Json::array();
        for (const auto& t : s.tasks_) {
            tasks.push_back({{"index", t.index},
                             {"phase", std::string(to_string(t.phase))},
                             {"peaks", peak_number(t.peaks)},
                             {"offset", t.landscape.offset},
                             {"anchor_value", t.anchor_value ? Json(*t.anchor_value) : Json(nullptr)}});
        }
        s.emit(EventKind::SessionCreated,
               {{"participant_id", s.participant_id_},
                {"master_seed", seed_to_json(master_seed)},
                {"treatment_override", s.treatment_override_ ? to_json(*s.treatment_override_) : Json(nullptr)},
                {"treatment", to_json(s.treatment_)},
                {"config", to_json(s.config_)},
                {"started_at_unix_ms", s.started_at_unix_ms_},
                {"tasks", std::move(tasks)}});
        s.begin_task(0);
        return s;
    }

    /// Rebuilds a session from its log. Only SessionCreated and the input
    /// events (HumanInput, Finalized, TaskStarted for tasks after the first)
    /// drive the rebuild; derived events are regenerated.
    static Session replay(std::span<const EventRecord> events, Clock clock = {}) {
        if (events.empty() || events.front().kind != EventKind::SessionCreated)
            fail(ErrorCode::InconsistentRecord, "log must start with SessionCreated");
        const EventRecord& created = events.front();
        const Json& p = created.payload;
        auto replay_time = std::make_shared<std::int64_t>(created.wall_clock_ms.value_or(0));
        Options opts;
        try {
            if (p.contains("treatment_override") && !p.at("treatment_override").is_null())
                opts.treatment_override = treatment_from_json(p.at("treatment_override"));
            if (p.contains("config")) opts.config = session_config_from_json(p.at("config"));
            opts.started_at_unix_ms = p.value("started_at_unix_ms", std::int64_t{0});
        } catch (const Json::exception& ex) {
            fail(ErrorCode::ParseError, std::string("bad SessionCreated payload: ") + ex.what());
        }
        opts.session_id = created.session_id;
        opts.clock = [replay_time] { return *replay_time; };
        const std::string participant = p.at("participant_id").get<std::string>();
        Session s = create(participant, seed_from_json(p.at("master_seed")), std::move(opts));

        for (const EventRecord& e : events.subspan(1)) {
            *replay_time = e.wall_clock_ms.value_or(0);
            switch (e.kind) {
                case EventKind::HumanInput: {
                    DialInput in{e.payload.at("x").get<int>(), std::nullopt};
                    if (e.payload.contains("y") && !e.payload.at("y").is_null()) in.y = e.payload.at("y").get<int>();
                    s.evaluate(in);
                    break;
                }
                case EventKind::Finalized: s.finalize(); break;
                case EventKind::TaskStarted:
                    if (e.payload.at("task").get<int>() > 0) s.start_next_task();
                    break;
                default: break;
            }
        }
        s.install_clock(std::move(clock), s.started_at_unix_ms_);
        return s;
    }

    EvaluateOutcome evaluate(const DialInput& in) {
        require_active();
        const TaskSpec& task = tasks_[current_task_];
        if (task.phase == Phase::Team && in.y)
            fail(ErrorCode::TaskIsTeamButFullSettingGiven, "team tasks take the left dial only");
        if (task.phase == Phase::Solo && !in.y)
            fail(ErrorCode::TaskIsSoloButPartialSettingGiven, "solo tasks take both dials");
        const auto& lc = task.landscape.landscape.config;
        if (in.x < 0 || in.x >= lc.width || (in.y && (*in.y < 0 || *in.y >= lc.height)))
            fail(ErrorCode::InvalidArgument, "dial position out of range");

        now_ = clock_();
        Json input{{"task", current_task_}, {"x", in.x}};
        if (in.y) input["y"] = *in.y;
        emit(EventKind::HumanInput, std::move(input));

        EvaluateOutcome out;
        DialSetting setting{in.x, in.y.value_or(0)};
        if (task.phase == Phase::Team) {
            const Landscape& raw = task.landscape.landscape;
            const ElevationOracle lookup = landscape_oracle(raw);
            const ElevationOracle oracle = [&](int hx, int hy) {
                const double v = lookup(hx, hy);
                emit(EventKind::HelperQuery, {{"task", current_task_}, {"x", hx}, {"y", hy}, {"raw_value", v}});
                return v;
            };
            HelperTurn turn = helper_turn(*helpers_[current_task_], in.x, oracle);
            helpers_[current_task_] = turn.state;
            emit(EventKind::HelperChoice, {{"task", current_task_},
                                           {"turn", turn.state.turn_index - 1},
                                           {"temperature", turn.temperature},
                                           {"previous", turn.previous},
                                           {"candidate", turn.candidate},
                                           {"chosen", turn.chosen},
                                           {"accepted_worse", turn.accepted_worse}});
            setting.y = turn.chosen;
            out.helper = std::move(turn);
        }

        auto& history = histories_[current_task_];
        std::vector<DialSetting> prior;
        prior.reserve(history.size());
        for (const auto& h : history) prior.push_back(h.setting);

        Evaluation e;
        e.sequence = static_cast<int>(history.size()) + 1;
        e.human_x = in.x;
        e.human_y = in.y;
        if (task.phase == Phase::Team) e.helper_y = setting.y;
        e.setting = setting;
        e.raw_value = task.landscape.raw(setting);
        e.displayed_value = task.landscape.displayed(setting);
        e.move_class = classify(prior, setting, lc.width, lc.height);
        e.timestamp_ms = now_;
        history.push_back(e);
        dial_ = setting;
        emit(EventKind::Feedback, {{"task", current_task_}, {"evaluation", to_json(e)}});
        out.evaluation = std::move(e);
        return out;
    }

    EvaluateOutcome evaluate_solo(const DialSetting& s) { return evaluate({s.x, s.y}); }
    EvaluateOutcome evaluate_team(int x) { return evaluate({x, std::nullopt}); }

    /// Closes the current task on its most recent evaluation.
    TaskResult finalize() {
        require_active();
        const auto& history = histories_[current_task_];
        if (history.empty()) fail(ErrorCode::NothingEvaluated, "task " + std::to_string(current_task_) + " has no evaluations");
        now_ = clock_();
        const Evaluation& last = history.back();
        TaskResult r{last.setting, last.raw_value, last.displayed_value};
        results_[current_task_] = r;
        emit(EventKind::Finalized, {{"task", current_task_},
                                    {"final_setting", to_json(r.final_setting)},
                                    {"raw_score", r.raw_score},
                                    {"displayed_score", r.displayed_score}});
        if (current_task_ + 1 == kTaskCount) {
            state_ = SessionState::Completed;
            emit(EventKind::BonusComputed, {{"cents", bonus().value}});
        } else {
            state_ = SessionState::BetweenTasks;
        }
        return r;
    }

    void start_next_task() {
        if (state_ != SessionState::BetweenTasks)
            fail(ErrorCode::SessionNotActive, std::string("cannot start next task while ") + std::string(to_string(state_)));
        now_ = clock_();
        begin_task(current_task_ + 1);
    }

    /// 2.00 x the mean normalized score over the four tasks, in cents.
    Cents bonus() const {
        if (state_ != SessionState::Completed) fail(ErrorCode::SessionNotCompleted, "bonus needs a completed session");
        double sum = 0.0;
        for (int i = 0; i < kTaskCount; ++i) {
            const auto& l = tasks_[i].landscape.landscape;
            sum += normalized_score(results_[i]->raw_score, mean_elevation(l), l.config.elevation_max);
        }
        return Cents{std::llround(kMaxBonusDollars * 100.0 * sum / kTaskCount)};
    }

    TaskRecord task_record(int index) const {
        check_task_index(index);
        const TaskSpec& t = tasks_[index];
        return TaskRecord{t.index, t.phase, t.peaks, histories_[index], results_[index]};
    }

    const std::string& session_id() const { return session_id_; }
    const std::string& participant_id() const { return participant_id_; }
    std::uint64_t master_seed() const { return master_seed_; }
    const Treatment& treatment() const { return treatment_; }
    const SessionConfig& config() const { return config_; }
    const std::vector<TaskSpec>& tasks() const { return tasks_; }
    const TaskSpec& task(int index) const {
        check_task_index(index);
        return tasks_[index];
    }
    int current_task() const { return current_task_; }
    SessionState state() const { return state_; }
    DialSetting dial() const { return dial_; }
    const std::vector<Evaluation>& history(int index) const {
        check_task_index(index);
        return histories_[index];
    }
    const std::optional<TaskResult>& result(int index) const {
        check_task_index(index);
        return results_[index];
    }
    const std::optional<HelperState>& helper_state(int index) const {
        check_task_index(index);
        return helpers_[index];
    }
    const std::vector<EventRecord>& events() const { return events_; }
    std::int64_t started_at_unix_ms() const { return started_at_unix_ms_; }

    /// Everything except the clock function.
    friend bool operator==(const Session& a, const Session& b) {
        return a.session_id_ == b.session_id_ && a.participant_id_ == b.participant_id_ &&
               a.master_seed_ == b.master_seed_ && a.treatment_ == b.treatment_ &&
               a.treatment_override_ == b.treatment_override_ && a.config_ == b.config_ && a.tasks_ == b.tasks_ &&
               a.current_task_ == b.current_task_ && a.state_ == b.state_ && a.dial_ == b.dial_ &&
               a.histories_ == b.histories_ && a.results_ == b.results_ && a.helpers_ == b.helpers_ &&
               a.events_ == b.events_ && a.started_at_unix_ms_ == b.started_at_unix_ms_;
    }

    /// The state a participant may see: no landscape, no offsets, no raw
    /// values. Displayed values are rounded to one decimal.
    Json participant_view() const {
        auto round1 = [](double v) { return std::round(v * 10.0) / 10.0; };
        const TaskSpec& t = tasks_[current_task_];
        Json history = Json::array();
        for (const auto& e : histories_[current_task_])
            history.push_back({{"n", e.sequence},
                               {"x", e.setting.x},
                               {"y", e.setting.y},
                               {"letters", to_letters(e.setting)},
                               {"displayed", round1(e.displayed_value)}});
        Json results = Json::array();
        for (int i = 0; i < kTaskCount; ++i)
            if (results_[i])
                results.push_back({{"task", i},
                                   {"letters", to_letters(results_[i]->final_setting)},
                                   {"displayed", round1(results_[i]->displayed_score)}});
        Json view{{"v", kProtocolVersion},
                  {"session_id", session_id_},
                  {"participant_id", participant_id_},
                  {"state", std::string(to_string(state_))},
                  {"frame", std::string(to_string(treatment_.frame))},
                  {"anchored", treatment_.anchored},
                  {"task_count", kTaskCount},
                  {"current_task", current_task_},
                  {"task",
                   {{"index", t.index},
                    {"phase", std::string(to_string(t.phase))},
                    {"right_dial_locked", t.phase == Phase::Team},
                    {"dial_positions",
                     {{"x", t.landscape.landscape.config.width}, {"y", t.landscape.landscape.config.height}}},
                    {"anchor", t.anchor_value ? Json(round1(*t.anchor_value)) : Json(nullptr)},
                    {"dial", {{"x", dial_.x}, {"y", dial_.y}, {"letters", to_letters(dial_)}}},
                    {"history", std::move(history)}}},
                  {"results", std::move(results)}};
        view["bonus"] = state_ == SessionState::Completed ? Json(bonus().to_string()) : Json(nullptr);
        return view;
    }

private:
    Session() = default;

    void install_clock(Clock clock, std::optional<std::int64_t> started_at) {
        using namespace std::chrono;
        if (clock) {
            clock_ = std::move(clock);
            started_at_unix_ms_ = started_at.value_or(0);
            return;
        }
        started_at_unix_ms_ = started_at.value_or(
            duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count());
        clock_ = [start = started_at_unix_ms_] {
            return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count() - start;
        };
    }

    void check_task_index(int index) const {
        if (index < 0 || index >= kTaskCount) fail(ErrorCode::InvalidArgument, "task index " + std::to_string(index));
    }

    void require_active() const {
        if (state_ != SessionState::Active)
            fail(ErrorCode::SessionNotActive, std::string("session is ") + std::string(to_string(state_)));
    }

    void begin_task(int index) {
        current_task_ = index;
        state_ = SessionState::Active;
        dial_ = config_.initial_dial;
        const TaskSpec& t = tasks_[index];
        if (t.phase == Phase::Team) {
            HelperConfig hc = config_.helper;
            hc.seed = t.helper_seed;
            helpers_[index] = helper_init(hc, dial_.y);
        }
        emit(EventKind::TaskStarted, {{"task", index},
                                      {"phase", std::string(to_string(t.phase))},
                                      {"anchor_value", t.anchor_value ? Json(*t.anchor_value) : Json(nullptr)}});
    }

    void emit(EventKind kind, Json payload) {
        events_.push_back(EventRecord{session_id_, static_cast<std::int64_t>(events_.size()), kind, std::move(payload), now_});
    }

    std::string session_id_;
    std::string participant_id_;
    std::uint64_t master_seed_ = 0;
    Treatment treatment_;
    std::optional<Treatment> treatment_override_;
    SessionConfig config_;
    std::vector<TaskSpec> tasks_;
    int current_task_ = 0;
    SessionState state_ = SessionState::Active;
    DialSetting dial_;
    std::vector<std::vector<Evaluation>> histories_;
    std::vector<std::optional<TaskResult>> results_;
    std::vector<std::optional<HelperState>> helpers_;
    std::vector<EventRecord> events_;
    std::int64_t started_at_unix_ms_ = 0;
    std::int64_t now_ = 0;
    Clock clock_;
};

}  // namespace rsl
