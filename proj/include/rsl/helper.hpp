#pragma once

// The AI teammate: a simulated-annealing search over the right dial. Each
// turn it takes the participant's new left-dial setting, proposes a move of
// its own dial whose size shrinks with temperature, and keeps the move under
// the Metropolis rule. Temperature cools geometrically per turn.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "rsl/error.hpp"
#include "rsl/landscape.hpp"
#include "rsl/random.hpp"

namespace rsl {

struct HelperConfig {
    double initial_temperature = 8.0;
    double cooling_rate = 0.9;
    int max_step = 12;
    int min_step = 1;
    int dial_size = 24;
    std::uint64_t seed = 0;

    friend bool operator==(const HelperConfig&, const HelperConfig&) = default;

    void check() const {
        auto bad = [](const std::string& m) { fail(ErrorCode::InvalidArgument, "helper config: " + m); };
        if (!(initial_temperature > 0)) bad("initial_temperature must be > 0");
        if (!(cooling_rate > 0 && cooling_rate < 1)) bad("cooling_rate must be in (0, 1)");
        if (dial_size < 2) bad("dial_size must be >= 2");
        if (!(1 <= min_step && min_step <= max_step && max_step <= dial_size / 2))
            bad("require 1 <= min_step <= max_step <= dial_size / 2");
    }
};

struct HelperState {
    HelperConfig config;
    int own_dial = 0;
    int turn_index = 0;
    Engine rng;

    /// initial_temperature * cooling_rate^turn_index.
    double temperature() const {
        return config.initial_temperature * std::pow(config.cooling_rate, turn_index);
    }

    friend bool operator==(const HelperState&, const HelperState&) = default;
};

inline HelperState helper_init(const HelperConfig& config, int start) {
    config.check();
    if (start < 0 || start >= config.dial_size)
        fail(ErrorCode::InvalidArgument, "helper start " + std::to_string(start) + " outside dial");
    return HelperState{config, start, 0, Engine(derive_seed(config.seed, "helper"))};
}

inline double acceptance_probability(double worsening, double temperature) {
    if (worsening <= 0) return 1.0;
    return std::exp(-worsening / temperature);
}

/// Step length before the direction is applied:
/// clamp(round(T * u), min_step, max_step), u uniform on (0, 1].
inline int step_length(double temperature, double u, const HelperConfig& config) {
    const long raw = std::lround(temperature * u);
    return static_cast<int>(std::clamp<long>(raw, config.min_step, config.max_step));
}

/// Draws a candidate own-dial position. Advances the state's generator only.
inline int propose(HelperState& state) {
    const bool up = coin_flip(state.rng);
    const double u = uniform01_open_low(state.rng);
    const int d = step_length(state.temperature(), u, state.config);
    return wrap(state.own_dial + (up ? d : -d), state.config.dial_size);
}

/// Elevation lookup over (participant dial, helper dial). The helper sees the
/// landscape only through this.
using ElevationOracle = std::function<double(int human_dial, int helper_dial)>;

struct HelperTurn {
    HelperState state;  // after the turn
    int chosen = 0;
    int previous = 0;
    int candidate = 0;
    double previous_value = 0.0;
    double candidate_value = 0.0;
    double temperature = 0.0;  // temperature used for the decision
    bool accepted_worse = false;
};

/// One helper turn: exactly two oracle queries, previous dial first.
inline HelperTurn helper_turn(HelperState state, int human_dial, const ElevationOracle& oracle) {
    HelperTurn out;
    out.previous = state.own_dial;
    out.temperature = state.temperature();
    out.previous_value = oracle(human_dial, state.own_dial);
    out.candidate = propose(state);
    out.candidate_value = oracle(human_dial, out.candidate);

    bool accept = out.candidate_value >= out.previous_value;
    if (!accept) {
        const double p = acceptance_probability(out.previous_value - out.candidate_value, out.temperature);
        accept = uniform01(state.rng) < p;
        out.accepted_worse = accept;
    }
    if (accept) state.own_dial = out.candidate;
    ++state.turn_index;
    out.chosen = state.own_dial;
    out.state = std::move(state);
    return out;
}

/// Oracle over the raw elevations of a landscape.
inline ElevationOracle landscape_oracle(const Landscape& landscape) {
    return [&landscape](int human_dial, int helper_dial) {
        const DialSetting s{human_dial, helper_dial};
        if (!landscape.config.contains(s)) fail(ErrorCode::OracleFailure, "query outside landscape: " + to_letters(s));
        return landscape.at(s);
    };
}

}  // namespace rsl
