#pragma once

// JSON conversions for configuration values. 64-bit seeds travel as decimal
// strings so that JavaScript clients do not lose precision.

#include <cstdint>
#include <string>

#include <json.hpp>

#include "rsl/error.hpp"
#include "rsl/helper.hpp"
#include "rsl/landscape.hpp"

namespace rsl {

using Json = nlohmann::json;

inline Json seed_to_json(std::uint64_t seed) { return std::to_string(seed); }

inline std::uint64_t seed_from_json(const Json& j) {
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            fail(ErrorCode::ParseError, "seed must be a non-negative integer, got '" + s + "'");
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            fail(ErrorCode::ParseError, "seed out of range: " + s);
        }
    }
    fail(ErrorCode::ParseError, "seed must be a non-negative integer");
}

inline Json to_json(const DialSetting& s) { return Json{{"x", s.x}, {"y", s.y}}; }

inline DialSetting dial_from_json(const Json& j) { return {j.at("x").get<int>(), j.at("y").get<int>()}; }

inline Json to_json(const LandscapeConfig& c) {
    return Json{{"width", c.width},
                {"height", c.height},
                {"peak_count", c.peak_count},
                {"elevation_min", c.elevation_min},
                {"elevation_max", c.elevation_max},
                {"secondary_peak_low", c.secondary_peak_low},
                {"max_neighbor_delta", c.max_neighbor_delta},
                {"min_peak_separation", c.min_peak_separation},
                {"noise_amplitude", c.noise_amplitude},
                {"slope_min", c.slope_min},
                {"slope_max", c.slope_max},
                {"seed", seed_to_json(c.seed)}};
}

/// Missing keys keep the values already in `base`.
inline LandscapeConfig landscape_config_from_json(const Json& j, LandscapeConfig base = {}) {
    auto take = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("width", base.width);
    take("height", base.height);
    take("peak_count", base.peak_count);
    take("elevation_min", base.elevation_min);
    take("elevation_max", base.elevation_max);
    take("secondary_peak_low", base.secondary_peak_low);
    take("max_neighbor_delta", base.max_neighbor_delta);
    take("min_peak_separation", base.min_peak_separation);
    take("noise_amplitude", base.noise_amplitude);
    take("slope_min", base.slope_min);
    take("slope_max", base.slope_max);
    if (j.contains("seed")) base.seed = seed_from_json(j.at("seed"));
    return base;
}

inline Json to_json(const HelperConfig& c) {
    return Json{{"initial_temperature", c.initial_temperature},
                {"cooling_rate", c.cooling_rate},
                {"max_step", c.max_step},
                {"min_step", c.min_step},
                {"dial_size", c.dial_size},
                {"seed", seed_to_json(c.seed)}};
}

inline HelperConfig helper_config_from_json(const Json& j, HelperConfig base = {}) {
    auto take = [&j](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("initial_temperature", base.initial_temperature);
    take("cooling_rate", base.cooling_rate);
    take("max_step", base.max_step);
    take("min_step", base.min_step);
    take("dial_size", base.dial_size);
    if (j.contains("seed")) base.seed = seed_from_json(j.at("seed"));
    return base;
}

}  // namespace rsl
