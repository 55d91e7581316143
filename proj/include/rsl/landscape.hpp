#pragma once

// Rugged toroidal landscapes: generation, lookup, framing, validation and a
// portable text format.
//
// Generation places the global peak, rejection-samples secondary peaks at a
// minimum toroidal-L1 separation, takes the max over linear cones around the
// peaks, adds smooth periodic value noise, then projects onto the neighbor
// slope bound with peak cells pinned and clamps to the elevation range.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rsl/error.hpp"
#include "rsl/random.hpp"

namespace rsl {

/// A pair of dial positions. x is the left (east-west) dial, y the right.
struct DialSetting {
    int x = 0;
    int y = 0;

    friend bool operator==(const DialSetting&, const DialSetting&) = default;
    friend auto operator<=>(const DialSetting&, const DialSetting&) = default;
};

inline char dial_letter(int position) { return static_cast<char>('A' + position); }

inline int dial_position(char letter) {
    if (letter >= 'a' && letter <= 'z') letter = static_cast<char>(letter - 'a' + 'A');
    if (letter < 'A' || letter > 'Z') fail(ErrorCode::ParseError, std::string("not a dial letter: ") + letter);
    return letter - 'A';
}

/// Renders as "[A,D]".
inline std::string to_letters(const DialSetting& s) {
    return std::string{'[', dial_letter(s.x), ',', dial_letter(s.y), ']'};
}

/// Parses "[A,D]", "A,D" or "AD".
inline DialSetting parse_letters(std::string_view text) {
    std::string letters;
    for (char c : text) {
        if (c == '[' || c == ']' || c == ',' || c == ' ') continue;
        letters.push_back(c);
    }
    if (letters.size() != 2) fail(ErrorCode::ParseError, "expected two dial letters, got '" + std::string(text) + "'");
    return {dial_position(letters[0]), dial_position(letters[1])};
}

inline int wrap(int v, int size) {
    const int r = v % size;
    return r < 0 ? r + size : r;
}

inline int toroidal_l1(const DialSetting& a, const DialSetting& b, int width, int height) {
    const int dx = std::abs(a.x - b.x);
    const int dy = std::abs(a.y - b.y);
    return std::min(dx, width - dx) + std::min(dy, height - dy);
}

struct LandscapeConfig {
    int width = 24;
    int height = 24;
    int peak_count = 1;
    double elevation_min = 0.0;
    double elevation_max = 32.0;
    double secondary_peak_low = 26.0;
    double max_neighbor_delta = 3.3;  // 10% of the 33-unit value range
    int min_peak_separation = 8;
    double noise_amplitude = 0.5;
    double slope_min = 1.5;
    double slope_max = 2.8;
    std::uint64_t seed = 0;

    friend bool operator==(const LandscapeConfig&, const LandscapeConfig&) = default;

    bool contains(const DialSetting& s) const {
        return s.x >= 0 && s.x < width && s.y >= 0 && s.y < height;
    }

    /// Throws InvalidArgument when an invariant fails. The slope and noise
    /// bounds guarantee that the generator never needs to repair a peak
    /// neighbor and never creates spurious summits.
    void check() const {
        auto bad = [](const std::string& m) { fail(ErrorCode::InvalidArgument, "landscape config: " + m); };
        if (width < 4 || height < 4) bad("width and height must be >= 4");
        if (min_peak_separation < 1) bad("min_peak_separation must be >= 1");
        const long cap = (static_cast<long>(width) * height) / (static_cast<long>(min_peak_separation) * min_peak_separation);
        if (peak_count < 1 || peak_count > cap) bad("peak_count out of range [1, " + std::to_string(cap) + "]");
        if (!(elevation_min < secondary_peak_low && secondary_peak_low < elevation_max))
            bad("require elevation_min < secondary_peak_low < elevation_max");
        if (!(max_neighbor_delta > 0)) bad("max_neighbor_delta must be > 0");
        if (!(noise_amplitude >= 0)) bad("noise_amplitude must be >= 0");
        if (!(slope_min > 0 && slope_min <= slope_max)) bad("require 0 < slope_min <= slope_max");
        if (slope_max + noise_amplitude > max_neighbor_delta + 1e-12)
            bad("slope_max + noise_amplitude must not exceed max_neighbor_delta");
        if (1.5 * noise_amplitude >= slope_min) bad("noise_amplitude too large for slope_min");
        if (peak_count > 1 &&
            elevation_max - slope_min * (min_peak_separation - 2) + noise_amplitude >= secondary_peak_low)
            bad("min_peak_separation too small to separate peaks by valleys");
    }
};

struct Peak {
    DialSetting cell;
    double elevation = 0.0;

    friend bool operator==(const Peak&, const Peak&) = default;
};

struct Landscape {
    LandscapeConfig config;
    std::vector<double> grid;  // row-major: index = y * width + x
    std::vector<Peak> peaks;   // peaks[0] is the global peak
    DialSetting global_peak;

    friend bool operator==(const Landscape&, const Landscape&) = default;

    int width() const { return config.width; }
    int height() const { return config.height; }
    std::size_t index(const DialSetting& s) const {
        return static_cast<std::size_t>(s.y) * config.width + s.x;
    }
    double at(const DialSetting& s) const { return grid[index(s)]; }
    double at(int x, int y) const { return grid[static_cast<std::size_t>(y) * config.width + x]; }
};

inline int toroidal_l1(const DialSetting& a, const DialSetting& b, const LandscapeConfig& config) {
    return toroidal_l1(a, b, config.width, config.height);
}

inline double elevation(const Landscape& landscape, const DialSetting& setting) {
    return landscape.at(setting);
}

inline double mean_elevation(const Landscape& landscape) {
    double sum = 0.0;
    for (double v : landscape.grid) sum += v;
    return sum / static_cast<double>(landscape.grid.size());
}

namespace detail {

// Smooth periodic value noise: random node values on a coarse toroidal
// lattice, smoothstep-interpolated. Adjacent cells differ by at most
// 1.5 * 2 * amplitude / spacing, with spacing >= 2.
class PeriodicValueNoise {
public:
    PeriodicValueNoise(int width, int height, double amplitude, Engine& eng)
        : nx_(std::max(2, static_cast<int>(std::lround(width / 6.0)))),
          ny_(std::max(2, static_cast<int>(std::lround(height / 6.0)))),
          sx_(static_cast<double>(width) / nx_),
          sy_(static_cast<double>(height) / ny_),
          nodes_(static_cast<std::size_t>(nx_) * ny_) {
        for (double& v : nodes_) v = uniform_real(eng, -amplitude, amplitude);
    }

    double operator()(int x, int y) const {
        const double fx = x / sx_;
        const double fy = y / sy_;
        const int x0 = static_cast<int>(std::floor(fx));
        const int y0 = static_cast<int>(std::floor(fy));
        const double tx = smoothstep(fx - x0);
        const double ty = smoothstep(fy - y0);
        const double a = node(x0, y0), b = node(x0 + 1, y0);
        const double c = node(x0, y0 + 1), d = node(x0 + 1, y0 + 1);
        const double top = a + (b - a) * tx;
        const double bottom = c + (d - c) * tx;
        return top + (bottom - top) * ty;
    }

private:
    static double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }
    double node(int i, int j) const {
        return nodes_[static_cast<std::size_t>(wrap(j, ny_)) * nx_ + wrap(i, nx_)];
    }

    int nx_, ny_;
    double sx_, sy_;
    std::vector<double> nodes_;
};

inline constexpr std::array<std::array<int, 2>, 4> kNeighbors4{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
inline constexpr std::array<std::array<int, 2>, 8> kNeighbors8{
    {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

}  // namespace detail

inline constexpr int kPeakCandidateBudget = 10'000;
inline constexpr double kTieNudge = 1e-6;

/// Peak placement gives up with ConfigInfeasible after `candidate_budget`
/// rejected or accepted secondary-peak candidates.
inline Landscape generate(const LandscapeConfig& config, int candidate_budget = kPeakCandidateBudget) {
    config.check();
    const int w = config.width;
    const int h = config.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;

    // Separate streams so that the same seed yields the same global peak,
    // slope and noise field regardless of the peak count.
    Engine peak_rng(derive_seed(config.seed, "landscape.peaks"));
    Engine secondary_rng(derive_seed(config.seed, "landscape.secondary"));
    Engine slope_rng(derive_seed(config.seed, "landscape.slope"));
    Engine noise_rng(derive_seed(config.seed, "landscape.noise"));

    Landscape out;
    out.config = config;
    const auto cell_at = [w](std::uint64_t i) {
        return DialSetting{static_cast<int>(i % w), static_cast<int>(i / w)};
    };

    out.global_peak = cell_at(uniform_index(peak_rng, n));
    out.peaks.push_back({out.global_peak, config.elevation_max});

    int candidates = 0;
    while (static_cast<int>(out.peaks.size()) < config.peak_count) {
        if (candidates++ >= candidate_budget)
            fail(ErrorCode::ConfigInfeasible, "could not place " + std::to_string(config.peak_count) +
                                                  " peaks with separation " +
                                                  std::to_string(config.min_peak_separation));
        const DialSetting c = cell_at(uniform_index(secondary_rng, n));
        const bool separated = std::all_of(out.peaks.begin(), out.peaks.end(), [&](const Peak& p) {
            return toroidal_l1(p.cell, c, config) >= config.min_peak_separation;
        });
        if (!separated) continue;
        out.peaks.push_back({c, uniform_real(secondary_rng, config.secondary_peak_low, config.elevation_max)});
    }

    const double slope = uniform_real(slope_rng, config.slope_min, config.slope_max);
    const detail::PeriodicValueNoise noise(w, h, config.noise_amplitude, noise_rng);

    std::vector<double> e(n);
    std::vector<char> pinned(n, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double base = -std::numeric_limits<double>::infinity();
            for (const Peak& p : out.peaks)
                base = std::max(base, p.elevation - slope * toroidal_l1(p.cell, {x, y}, config));
            e[static_cast<std::size_t>(y) * w + x] = base + (config.noise_amplitude > 0 ? noise(x, y) : 0.0);
        }
    }
    for (const Peak& p : out.peaks) {
        e[out.index(p.cell)] = p.elevation;
        pinned[out.index(p.cell)] = 1;
    }

    // Lipschitz projection: lower any cell that exceeds a neighbor by more
    // than the bound. Monotone decreasing, so it terminates.
    for (std::size_t pass = 0; pass <= n; ++pass) {
        bool changed = false;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                if (pinned[i]) continue;
                double cap = e[i];
                for (const auto& d : detail::kNeighbors4) {
                    const std::size_t j = static_cast<std::size_t>(wrap(y + d[1], h)) * w + wrap(x + d[0], w);
                    cap = std::min(cap, e[j] + config.max_neighbor_delta);
                }
                if (cap < e[i]) {
                    e[i] = cap;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }

    const std::size_t top = out.index(out.global_peak);
    for (std::size_t i = 0; i < n; ++i) {
        e[i] = std::clamp(e[i], config.elevation_min, config.elevation_max);
        if (i != top && e[i] >= config.elevation_max) e[i] = config.elevation_max - kTieNudge;
    }
    e[top] = config.elevation_max;
    out.grid = std::move(e);
    return out;
}

enum class Frame { Gain, Loss };

inline std::string_view to_string(Frame f) { return f == Frame::Gain ? "gain" : "loss"; }

inline Frame parse_frame(std::string_view s) {
    if (s == "gain") return Frame::Gain;
    if (s == "loss") return Frame::Loss;
    fail(ErrorCode::ParseError, "frame must be gain or loss, got '" + std::string(s) + "'");
}

/// Offset range keeping displayed values on [0, 100] (gain) or [-100, 0] (loss).
inline std::pair<double, double> frame_offset_range(Frame frame, const LandscapeConfig& config) {
    // Gain leaves one unit of headroom below 100: the range counts 33 units over [0, 32].
    const double span = config.elevation_max - config.elevation_min + 1.0;
    if (frame == Frame::Gain) return {0.0 - config.elevation_min, 100.0 - config.elevation_min - span};
    return {-100.0 - config.elevation_min, 0.0 - config.elevation_max};
}

struct FramedLandscape {
    Landscape landscape;
    Frame frame = Frame::Gain;
    double offset = 0.0;

    friend bool operator==(const FramedLandscape&, const FramedLandscape&) = default;

    double displayed(const DialSetting& s) const { return landscape.at(s) + offset; }
    double raw(const DialSetting& s) const { return landscape.at(s); }
    /// Framed value of the global peak, shown by the anchor message.
    double best_displayed() const { return landscape.config.elevation_max + offset; }
};

inline FramedLandscape make_framed(Landscape landscape, Frame frame, double offset) {
    const auto [lo, hi] = frame_offset_range(frame, landscape.config);
    if (offset < lo || offset > hi)
        fail(ErrorCode::InvalidArgument, "frame offset " + std::to_string(offset) + " outside [" +
                                             std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return FramedLandscape{std::move(landscape), frame, offset};
}

inline FramedLandscape apply_frame(Landscape landscape, Frame frame, Engine& rng) {
    const auto [lo, hi] = frame_offset_range(frame, landscape.config);
    const double offset = uniform_real(rng, lo, hi);
    return FramedLandscape{std::move(landscape), frame, offset};
}

struct Violation {
    enum class Kind { GridSize, Bounds, GlobalPeak, NotUniqueMaximum, PeakNotLocalMax, PeakCount, PeakSeparation, Slope };
    Kind kind;
    std::string message;
    std::vector<DialSetting> cells;
};

inline std::string_view to_string(Violation::Kind k) {
    switch (k) {
        case Violation::Kind::GridSize: return "grid-size";
        case Violation::Kind::Bounds: return "bounds";
        case Violation::Kind::GlobalPeak: return "global-peak";
        case Violation::Kind::NotUniqueMaximum: return "unique-maximum";
        case Violation::Kind::PeakNotLocalMax: return "peak-not-local-max";
        case Violation::Kind::PeakCount: return "peak-count";
        case Violation::Kind::PeakSeparation: return "peak-separation";
        case Violation::Kind::Slope: return "slope";
    }
    return "unknown";
}

inline bool is_strict_local_max(const Landscape& l, const DialSetting& c) {
    const double v = l.at(c);
    for (const auto& d : detail::kNeighbors8) {
        const DialSetting nb{wrap(c.x + d[0], l.width()), wrap(c.y + d[1], l.height())};
        if (nb == c) continue;
        if (!(v > l.at(nb))) return false;
    }
    return true;
}

inline std::vector<DialSetting> strict_local_maxima(const Landscape& l) {
    std::vector<DialSetting> out;
    for (int y = 0; y < l.height(); ++y)
        for (int x = 0; x < l.width(); ++x)
            if (is_strict_local_max(l, {x, y})) out.push_back({x, y});
    return out;
}

/// Independent check of every landscape constraint. `slope_tolerance` covers
/// floating error (1e-9 in memory; files carry 6 decimals, so loaded
/// landscapes need ~1e-6).
inline std::vector<Violation> validate(const Landscape& l, double slope_tolerance = 1e-9) {
    using K = Violation::Kind;
    std::vector<Violation> out;
    const auto& cfg = l.config;
    const int w = cfg.width, h = cfg.height;
    if (w < 1 || h < 1 || l.grid.size() != static_cast<std::size_t>(w) * h) {
        out.push_back({K::GridSize, "grid has " + std::to_string(l.grid.size()) + " cells, expected " +
                                        std::to_string(static_cast<long>(w) * h), {}});
        return out;
    }
    auto cell_str = [](const DialSetting& c) { return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")"; };

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = l.at(x, y);
            if (!(v >= cfg.elevation_min && v <= cfg.elevation_max))
                out.push_back({K::Bounds, "elevation " + std::to_string(v) + " at " + cell_str({x, y}) +
                                              " outside [" + std::to_string(cfg.elevation_min) + ", " +
                                              std::to_string(cfg.elevation_max) + "]",
                               {{x, y}}});
        }

    if (!cfg.contains(l.global_peak)) {
        out.push_back({K::GlobalPeak, "global peak out of bounds", {l.global_peak}});
    } else {
        if (l.at(l.global_peak) != cfg.elevation_max)
            out.push_back({K::GlobalPeak, "global peak " + cell_str(l.global_peak) + " has elevation " +
                                              std::to_string(l.at(l.global_peak)),
                           {l.global_peak}});
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (DialSetting{x, y} != l.global_peak && l.at(x, y) >= l.at(l.global_peak))
                    out.push_back({K::NotUniqueMaximum, "cell " + cell_str({x, y}) + " ties or exceeds global peak",
                                   {{x, y}, l.global_peak}});
    }

    for (const Peak& p : l.peaks) {
        if (!cfg.contains(p.cell)) {
            out.push_back({K::PeakNotLocalMax, "peak out of bounds", {p.cell}});
            continue;
        }
        if (!is_strict_local_max(l, p.cell))
            out.push_back({K::PeakNotLocalMax, "peak " + cell_str(p.cell) + " is not a strict local maximum", {p.cell}});
    }
    for (std::size_t i = 0; i < l.peaks.size(); ++i)
        for (std::size_t j = i + 1; j < l.peaks.size(); ++j) {
            const int d = toroidal_l1(l.peaks[i].cell, l.peaks[j].cell, cfg);
            if (d < cfg.min_peak_separation)
                out.push_back({K::PeakSeparation, "peaks " + cell_str(l.peaks[i].cell) + " and " +
                                                      cell_str(l.peaks[j].cell) + " are " + std::to_string(d) +
                                                      " apart",
                               {l.peaks[i].cell, l.peaks[j].cell}});
        }

    const auto maxima = strict_local_maxima(l);
    if (static_cast<int>(maxima.size()) != cfg.peak_count || l.peaks.size() != maxima.size())
        out.push_back({K::PeakCount, std::to_string(maxima.size()) + " strict local maxima, " +
                                         std::to_string(l.peaks.size()) + " listed peaks, expected " +
                                         std::to_string(cfg.peak_count),
                       maxima});

    // Right and down neighbors with wrap cover every 4-adjacent pair once,
    // including the seams.
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const DialSetting a{x, y};
            for (const DialSetting b : {DialSetting{wrap(x + 1, w), y}, DialSetting{x, wrap(y + 1, h)}}) {
                const double delta = std::abs(l.at(a) - l.at(b));
                if (delta > cfg.max_neighbor_delta + slope_tolerance)
                    out.push_back({K::Slope, "cells " + cell_str(a) + " and " + cell_str(b) + " differ by " +
                                                 std::to_string(delta),
                                   {a, b}});
            }
        }
    return out;
}

inline std::string format_fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

/// Text format: `width height peak_count seed`, then `height` rows of
/// `width` elevations, then one `x y elevation` line per peak (global first).
inline void write_landscape(std::ostream& os, const Landscape& l) {
    os << l.width() << ' ' << l.height() << ' ' << l.config.peak_count << ' ' << l.config.seed << '\n';
    for (int y = 0; y < l.height(); ++y) {
        for (int x = 0; x < l.width(); ++x) {
            if (x) os << ' ';
            os << format_fixed6(l.at(x, y));
        }
        os << '\n';
    }
    for (const Peak& p : l.peaks) os << p.cell.x << ' ' << p.cell.y << ' ' << format_fixed6(p.elevation) << '\n';
}

inline std::string landscape_to_text(const Landscape& l) {
    std::ostringstream os;
    write_landscape(os, l);
    return os.str();
}

/// Fields not carried by the file take their defaults.
inline Landscape read_landscape(std::istream& is, LandscapeConfig base = {}) {
    Landscape l;
    l.config = base;
    if (!(is >> l.config.width >> l.config.height >> l.config.peak_count >> l.config.seed))
        fail(ErrorCode::ParseError, "landscape header must be 'width height peak_count seed'");
    if (l.config.width < 1 || l.config.height < 1 || l.config.width > 4096 || l.config.height > 4096 ||
        l.config.peak_count < 1)
        fail(ErrorCode::ParseError, "landscape header out of range");
    l.grid.resize(static_cast<std::size_t>(l.config.width) * l.config.height);
    for (double& v : l.grid)
        if (!(is >> v)) fail(ErrorCode::ParseError, "truncated elevation grid");
    Peak p;
    while (is >> p.cell.x >> p.cell.y >> p.elevation) l.peaks.push_back(p);
    if (!is.eof()) fail(ErrorCode::ParseError, "malformed peak line");
    if (static_cast<int>(l.peaks.size()) != l.config.peak_count)
        fail(ErrorCode::ParseError, "expected " + std::to_string(l.config.peak_count) + " peak lines, got " +
                                        std::to_string(l.peaks.size()));
    l.global_peak = l.peaks.front().cell;
    return l;
}

inline Landscape landscape_from_text(const std::string& text, LandscapeConfig base = {}) {
    std::istringstream is(text);
    return read_landscape(is, base);
}

}  // namespace rsl
