#pragma once

// Scripted participants for pipeline validation. Policies drive a session
// through the participant surface only (evaluate, finalize, start_next_task,
// participant_view), so any type exposing those members can be played.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rsl/error.hpp"
#include "rsl/metrics.hpp"
#include "rsl/random.hpp"
#include "rsl/session.hpp"

namespace rsl::synth {

enum class PolicyKind { RandomExplorer, GreedyClimber, EffortSatisficer };

inline std::string_view to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::RandomExplorer: return "random_explorer";
        case PolicyKind::GreedyClimber: return "greedy_climber";
        case PolicyKind::EffortSatisficer: return "effort_satisficer";
    }
    return "unknown";
}

struct Policy {
    PolicyKind kind = PolicyKind::RandomExplorer;
    double stop_threshold = 0.9;  // satisficer aspiration level
    int max_moves = 20;
    int patience = 4;         // climber: non-improving moves before stopping
    int explore_budget = 8;   // satisficer: moves before an unanchored reference exists
    std::uint64_t seed = 0;

    void check() const {
        if (max_moves < 1) fail(ErrorCode::InvalidArgument, "policy max_moves must be >= 1");
        if (!(stop_threshold > 0 && stop_threshold <= 1)) fail(ErrorCode::InvalidArgument, "stop_threshold must be in (0, 1]");
        if (patience < 1) fail(ErrorCode::InvalidArgument, "patience must be >= 1");
        if (explore_budget < 1) fail(ErrorCode::InvalidArgument, "explore_budget must be >= 1");
    }

    static Policy random_explorer(int max_moves = 20, std::uint64_t seed = 0) {
        return Policy{PolicyKind::RandomExplorer, 0.9, max_moves, 4, 8, seed};
    }
    static Policy greedy_climber(int patience = 4, int max_moves = 150, std::uint64_t seed = 0) {
        return Policy{PolicyKind::GreedyClimber, 0.9, max_moves, patience, 8, seed};
    }
    static Policy effort_satisficer(double stop_threshold = 0.9, int explore_budget = 8, int max_moves = 60,
                                    std::uint64_t seed = 0) {
        return Policy{PolicyKind::EffortSatisficer, stop_threshold, max_moves, 4, explore_budget, seed};
    }
};

/// The value a satisficer settles for given a reference. Equals
/// threshold * reference for non-negative references and extends to
/// loss-frame (negative) references by the same relative shortfall.
inline double aspiration(double stop_threshold, double reference) {
    return reference - (1.0 - stop_threshold) * std::abs(reference);
}

namespace detail {

struct TaskView {
    int index = 0;
    bool team = false;
    int width = 24;
    int height = 24;
    DialSetting dial;
    std::optional<double> anchor;
};

template <class SessionLike>
TaskView read_view(const SessionLike& s) {
    const Json v = s.participant_view();
    const Json& t = v.at("task");
    TaskView out;
    out.index = t.at("index").get<int>();
    out.team = t.at("right_dial_locked").get<bool>();
    out.width = t.at("dial_positions").at("x").get<int>();
    out.height = t.at("dial_positions").at("y").get<int>();
    out.dial = {t.at("dial").at("x").get<int>(), t.at("dial").at("y").get<int>()};
    if (!t.at("anchor").is_null()) out.anchor = t.at("anchor").get<double>();
    return out;
}

template <class SessionLike>
double submit(SessionLike& s, const TaskView& view, const DialSetting& d) {
    const auto out = view.team ? s.evaluate(DialInput{d.x, std::nullopt}) : s.evaluate(DialInput{d.x, d.y});
    return out.evaluation.displayed_value;
}

inline DialSetting random_setting(Engine& rng, const TaskView& v) {
    const int x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(v.width)));
    const int y = v.team ? v.dial.y : static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(v.height)));
    return {x, y};
}

template <class SessionLike>
void play_random(SessionLike& s, const Policy& p, const TaskView& v, Engine& rng) {
    for (int k = 0; k < p.max_moves; ++k) submit(s, v, random_setting(rng, v));
}

template <class SessionLike>
void play_climber_solo(SessionLike& s, const Policy& p, const TaskView& v, Engine& rng) {
    DialSetting best = v.dial;
    double best_value = submit(s, v, best);
    DialSetting last = best;
    int moves = 1, stale = 0;
    std::vector<DialSetting> pending;
    auto refill = [&] {
        pending = {{wrap(best.x + 1, v.width), best.y},
                   {wrap(best.x - 1, v.width), best.y},
                   {best.x, wrap(best.y + 1, v.height)},
                   {best.x, wrap(best.y - 1, v.height)}};
        for (std::size_t i = pending.size(); i > 1; --i)
            std::swap(pending[i - 1], pending[uniform_index(rng, i)]);
    };
    refill();
    bool flat = true;  // every rejected neighbor tied with the best
    // One move stays in reserve for resubmitting the best setting.
    while (moves < p.max_moves - 1) {
        DialSetting next;
        const bool jump = stale >= p.patience || pending.empty();
        if (jump && !flat) break;
        if (jump) {
            // Plateau: no direction to climb, so try elsewhere.
            next = random_setting(rng, v);
        } else {
            next = pending.back();
            pending.pop_back();
        }
        const double value = submit(s, v, next);
        last = next;
        ++moves;
        if (value > best_value || (jump && value == best_value)) {
            best = next;
            best_value = value;
            stale = 0;
            flat = true;
            refill();
        } else {
            ++stale;
            if (value != best_value) flat = false;
        }
    }
    if (last != best) submit(s, v, best);
}

template <class SessionLike>
void play_climber_team(SessionLike& s, const Policy& p, const TaskView& v, Engine& rng) {
    int best_x = v.dial.x;
    double best_value = submit(s, v, {best_x, v.dial.y});
    int moves = 1, stale = 0;
    while (moves < p.max_moves && stale < p.patience) {
        const int x = wrap(best_x + (coin_flip(rng) ? 1 : -1), v.width);
        const double value = submit(s, v, {x, v.dial.y});
        ++moves;
        if (value > best_value) {
            best_value = value;
            best_x = x;
            stale = 0;
        } else {
            ++stale;
        }
    }
}

// Stops once the latest value reaches the aspiration for the anchor (when
// one is shown) or, after the exploration budget, for the best value seen.
// The move sequence does not depend on the anchor, so an anchored run stops
// no later than an unanchored run on the same seeds.
template <class SessionLike>
void play_satisficer(SessionLike& s, const Policy& p, const TaskView& v, Engine& rng) {
    double best_value = -std::numeric_limits<double>::infinity();
    DialSetting best = v.dial;
    for (int k = 1; k <= p.max_moves; ++k) {
        DialSetting next;
        if (k <= p.explore_budget) {
            next = random_setting(rng, v);
        } else {
            const int dx = static_cast<int>(uniform_index(rng, 5)) - 2;
            const int dy = v.team ? 0 : static_cast<int>(uniform_index(rng, 5)) - 2;
            next = {wrap(best.x + dx, v.width), v.team ? v.dial.y : wrap(best.y + dy, v.height)};
        }
        const double value = submit(s, v, next);
        if (value > best_value) {
            best_value = value;
            best = next;
        }
        const bool settled = k >= p.explore_budget && value >= aspiration(p.stop_threshold, best_value);
        const bool anchored = v.anchor && value >= aspiration(p.stop_threshold, *v.anchor);
        if (settled || anchored) return;
    }
}

}  // namespace detail

/// Plays every task of a fresh session to completion.
template <class SessionLike>
void run_policy(const Policy& policy, SessionLike& session) {
    policy.check();
    for (int task = 0; task < kTaskCount; ++task) {
        if (task > 0) session.start_next_task();
        const detail::TaskView view = detail::read_view(session);
        if (view.index != task) fail(ErrorCode::InvalidArgument, "run_policy needs a fresh session");
        Engine rng(derive_seed(policy.seed, "policy.task", static_cast<std::uint64_t>(task)));
        switch (policy.kind) {
            case PolicyKind::RandomExplorer: detail::play_random(session, policy, view, rng); break;
            case PolicyKind::GreedyClimber:
                if (view.team)
                    detail::play_climber_team(session, policy, view, rng);
                else
                    detail::play_climber_solo(session, policy, view, rng);
                break;
            case PolicyKind::EffortSatisficer: detail::play_satisficer(session, policy, view, rng); break;
        }
        session.finalize();
    }
}

struct CohortCell {
    Policy policy;
    Treatment treatment;
    int count = 0;
};

struct CohortSpec {
    std::vector<CohortCell> cells;
    SessionConfig config;
};

struct CohortDataset {
    std::vector<Session> sessions;
    std::vector<PolicyKind> policies;
    std::vector<ParticipantMetrics> metrics;

    std::string metrics_table() const {
        std::ostringstream os;
        write_metrics_table(os, metrics);
        return os.str();
    }
};

inline std::string participant_label(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "p%04d", index);
    return buf;
}

/// Completed sessions with a fixed zero clock, so logs are reproducible.
inline CohortDataset run_cohort(const CohortSpec& spec, std::uint64_t master_seed) {
    CohortDataset out;
    int index = 0;
    for (const CohortCell& cell : spec.cells) {
        if (cell.count < 0) fail(ErrorCode::InvalidArgument, "negative cohort count");
        for (int k = 0; k < cell.count; ++k, ++index) {
            Session::Options opts;
            opts.treatment_override = cell.treatment;
            opts.config = spec.config;
            opts.clock = [] { return std::int64_t{0}; };
            Session s = Session::create(participant_label(index),
                                        derive_seed(master_seed, "cohort.session", static_cast<std::uint64_t>(index)),
                                        std::move(opts));
            Policy policy = cell.policy;
            policy.seed = derive_seed(master_seed ^ cell.policy.seed, "cohort.policy", static_cast<std::uint64_t>(index));
            run_policy(policy, s);
            out.metrics.push_back(participant_metrics(s));
            out.policies.push_back(policy.kind);
            out.sessions.push_back(std::move(s));
        }
    }
    return out;
}

/// `n` participants spread evenly over the four treatment cells and the
/// three default policies.
inline CohortSpec balanced_mixed_cohort(int n) {
    const std::vector<Policy> policies{Policy::random_explorer(), Policy::greedy_climber(), Policy::effort_satisficer()};
    CohortSpec spec;
    const int combos = static_cast<int>(policies.size() * kTreatmentCells.size());
    for (int c = 0; c < combos; ++c) {
        const int count = n / combos + (c < n % combos ? 1 : 0);
        if (count == 0) continue;
        spec.cells.push_back({policies[static_cast<std::size_t>(c) / kTreatmentCells.size()],
                              kTreatmentCells[static_cast<std::size_t>(c) % kTreatmentCells.size()], count});
    }
    return spec;
}

}  // namespace rsl::synth
