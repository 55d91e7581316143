#pragma once

// Per-task search traces as stacked grids for image-style models.
//
// Layers, each height x width, row-major:
//   0 elevation    raw landscape value
//   1 visits       participant-visible evaluations at the cell
//   2 visit_order  rank of the first visit / duration, 0 if never visited
//   3 final_choice one-hot at the finalized setting

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "rsl/codec.hpp"
#include "rsl/error.hpp"
#include "rsl/session.hpp"

namespace rsl {

inline constexpr std::array<const char*, 4> kLayerNames{"elevation", "visits", "visit_order", "final_choice"};

struct LayeredGrid {
    std::string session_id;
    int task = 0;
    int width = 0;
    int height = 0;
    std::vector<double> values;  // layers * height * width

    static constexpr int layers = static_cast<int>(kLayerNames.size());

    double& at(int layer, int y, int x) { return values[index(layer, y, x)]; }
    double at(int layer, int y, int x) const { return values[index(layer, y, x)]; }

    std::size_t index(int layer, int y, int x) const {
        return (static_cast<std::size_t>(layer) * height + y) * width + x;
    }

    friend bool operator==(const LayeredGrid&, const LayeredGrid&) = default;
};

inline LayeredGrid export_layers(const Session& session, int task) {
    const auto& result = session.result(task);
    if (!result) fail(ErrorCode::TaskNotFinalized, "task " + std::to_string(task) + " is not finalized");
    const Landscape& l = session.task(task).landscape.landscape;
    const auto& history = session.history(task);

    LayeredGrid g;
    g.session_id = session.session_id();
    g.task = task;
    g.width = l.width();
    g.height = l.height();
    g.values.assign(static_cast<std::size_t>(LayeredGrid::layers) * g.width * g.height, 0.0);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) g.at(0, y, x) = l.at(x, y);
    const double duration = static_cast<double>(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        const DialSetting s = history[i].setting;
        if (g.at(1, s.y, s.x) == 0.0) g.at(2, s.y, s.x) = static_cast<double>(i + 1) / duration;
        g.at(1, s.y, s.x) += 1.0;
    }
    g.at(3, result->final_setting.y, result->final_setting.x) = 1.0;
    return g;
}

/// JSON with shape metadata; every value printed with six decimals so the
/// text is byte-stable.
inline std::string layered_grid_to_json(const LayeredGrid& g) {
    Json meta{{"v", kProtocolVersion}, {"session_id", g.session_id}, {"task", g.task}};
    std::string out = meta.dump();
    out.pop_back();  // reopen the object
    out += ",\"shape\":[" + std::to_string(LayeredGrid::layers) + "," + std::to_string(g.height) + "," +
           std::to_string(g.width) + "],\"layers\":[";
    for (std::size_t i = 0; i < kLayerNames.size(); ++i) out += (i ? ",\"" : "\"") + std::string(kLayerNames[i]) + "\"";
    out += "],\"values\":[";
    char buf[32];
    for (int layer = 0; layer < LayeredGrid::layers; ++layer) {
        out += layer ? ",[" : "[";
        for (int y = 0; y < g.height; ++y) {
            out += y ? ",[" : "[";
            for (int x = 0; x < g.width; ++x) {
                std::snprintf(buf, sizeof buf, x ? ",%.6f" : "%.6f", g.at(layer, y, x));
                out += buf;
            }
            out += "]";
        }
        out += "]";
    }
    out += "]}";
    return out;
}

inline LayeredGrid layered_grid_from_json(const std::string& text) {
    try {
        const Json j = Json::parse(text);
        LayeredGrid g;
        g.session_id = j.at("session_id").get<std::string>();
        g.task = j.at("task").get<int>();
        const auto shape = j.at("shape").get<std::vector<int>>();
        if (shape.size() != 3 || shape[0] != LayeredGrid::layers) fail(ErrorCode::ParseError, "bad layered grid shape");
        g.height = shape[1];
        g.width = shape[2];
        const Json& v = j.at("values");
        for (int layer = 0; layer < LayeredGrid::layers; ++layer)
            for (int y = 0; y < g.height; ++y)
                for (int x = 0; x < g.width; ++x) g.values.push_back(v.at(layer).at(y).at(x).get<double>());
        return g;
    } catch (const Json::exception& ex) {
        fail(ErrorCode::ParseError, std::string("bad layered grid: ") + ex.what());
    }
}

}  // namespace rsl
