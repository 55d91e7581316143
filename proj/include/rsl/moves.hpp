#pragma once

#include <limits>
#include <span>
#include <string_view>

#include "rsl/error.hpp"
#include "rsl/landscape.hpp"

namespace rsl {

enum class MoveClass { Explore, Exploit };

inline std::string_view to_string(MoveClass m) { return m == MoveClass::Explore ? "explore" : "exploit"; }

inline MoveClass parse_move_class(std::string_view s) {
    if (s == "explore") return MoveClass::Explore;
    if (s == "exploit") return MoveClass::Exploit;
    fail(ErrorCode::ParseError, "move class must be explore or exploit");
}

/// Settings at least this far (toroidal L1) from every prior observation explore.
inline constexpr int kExploreDistance = 3;

/// Explore iff nothing has been observed yet or every prior setting is at
/// least kExploreDistance away. Stops scanning at the first near setting.
inline MoveClass classify(std::span<const DialSetting> prior, const DialSetting& next, int width = 24,
                          int height = 24) {
    for (const DialSetting& p : prior)
        if (toroidal_l1(p, next, width, height) < kExploreDistance) return MoveClass::Exploit;
    return MoveClass::Explore;
}

}  // namespace rsl
