#pragma once

// Behavioral metrics per task (search duration, explore fraction, adjusted
// score), cohort summaries and the per-task metrics table.

#include <array>
#include <cstdio>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rsl/error.hpp"
#include "rsl/landscape.hpp"
#include "rsl/moves.hpp"
#include "rsl/session.hpp"
#include "rsl/stats.hpp"

namespace rsl {

struct TaskMetrics {
    int search_duration = 0;
    int explore_count = 0;
    double explore_fraction = 0.0;
    double raw_score = 0.0;
    double adjusted_score = 0.0;

    friend bool operator==(const TaskMetrics&, const TaskMetrics&) = default;
};

/// Labels every evaluation of a task from scratch.
inline std::vector<MoveClass> classify_history(std::span<const Evaluation> evaluations, int width, int height) {
    std::vector<MoveClass> out;
    std::vector<DialSetting> seen;
    for (const auto& e : evaluations) {
        out.push_back(classify(seen, e.setting, width, height));
        seen.push_back(e.setting);
    }
    return out;
}

inline TaskMetrics task_metrics(const TaskRecord& task, const Landscape& landscape) {
    if (!task.result) fail(ErrorCode::TaskNotFinalized, "task " + std::to_string(task.index) + " is not finalized");
    const auto labels = classify_history(task.evaluations, landscape.width(), landscape.height());
    TaskMetrics m;
    m.search_duration = static_cast<int>(task.evaluations.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != task.evaluations[i].move_class)
            fail(ErrorCode::InconsistentRecord, "stored move label differs at evaluation " + std::to_string(i + 1));
        if (labels[i] == MoveClass::Explore) ++m.explore_count;
    }
    m.explore_fraction = m.search_duration ? static_cast<double>(m.explore_count) / m.search_duration : 0.0;
    m.raw_score = task.result->raw_score;
    m.adjusted_score = m.raw_score / mean_elevation(landscape);
    return m;
}

struct ParticipantMetrics {
    std::string participant_id;
    Treatment treatment;
    std::array<Phase, kTaskCount> phases{};
    std::array<PeakCount, kTaskCount> peaks{};
    std::array<TaskMetrics, kTaskCount> tasks{};
};

/// Only finalized tasks are included in `finalized`; a completed session
/// has all four.
struct PartialParticipantMetrics {
    ParticipantMetrics metrics;
    std::array<bool, kTaskCount> finalized{};
};

inline PartialParticipantMetrics partial_participant_metrics(const Session& s) {
    PartialParticipantMetrics out;
    out.metrics.participant_id = s.participant_id();
    out.metrics.treatment = s.treatment();
    for (int i = 0; i < kTaskCount; ++i) {
        const TaskSpec& t = s.task(i);
        out.metrics.phases[i] = t.phase;
        out.metrics.peaks[i] = t.peaks;
        if (s.result(i)) {
            out.metrics.tasks[i] = task_metrics(s.task_record(i), t.landscape.landscape);
            out.finalized[i] = true;
        }
    }
    return out;
}

inline ParticipantMetrics participant_metrics(const Session& s) {
    if (s.state() != SessionState::Completed) fail(ErrorCode::SessionNotCompleted, "participant metrics need all four tasks");
    return partial_participant_metrics(s).metrics;
}

enum class Measure { AdjustedScore, Duration, ExploreFraction };
enum class Contrast { SoloMinusTeam, OneMinusFour };
enum class Grouping { All, Frame, Anchor, Cell };

inline std::string_view to_string(Measure m) {
    switch (m) {
        case Measure::AdjustedScore: return "adjusted_score";
        case Measure::Duration: return "duration";
        case Measure::ExploreFraction: return "explore_fraction";
    }
    return "unknown";
}

inline std::string_view to_string(Contrast c) { return c == Contrast::SoloMinusTeam ? "solo_minus_team" : "one_minus_four"; }

/// Per-participant totals over the two tasks in each arm of a contrast.
/// Explore fraction pools explores over submissions across both tasks.
inline std::pair<double, double> contrast_totals(const ParticipantMetrics& p, Contrast contrast, Measure measure) {
    std::array<double, 2> total{};
    std::array<int, 2> explores{}, duration{};
    for (int i = 0; i < kTaskCount; ++i) {
        const int arm = contrast == Contrast::SoloMinusTeam ? (p.phases[i] == Phase::Solo ? 0 : 1)
                                                            : (p.peaks[i] == PeakCount::One ? 0 : 1);
        const TaskMetrics& m = p.tasks[i];
        if (measure == Measure::AdjustedScore) total[arm] += m.adjusted_score;
        if (measure == Measure::Duration) total[arm] += m.search_duration;
        explores[arm] += m.explore_count;
        duration[arm] += m.search_duration;
    }
    if (measure == Measure::ExploreFraction)
        for (int arm = 0; arm < 2; ++arm)
            total[arm] = duration[arm] ? static_cast<double>(explores[arm]) / duration[arm] : 0.0;
    return {total[0], total[1]};
}

struct SummaryRow {
    std::string group;
    Contrast contrast = Contrast::SoloMinusTeam;
    Measure measure = Measure::AdjustedScore;
    std::size_t n = 0;
    double mean_a = 0.0, sd_a = 0.0;
    double mean_b = 0.0, sd_b = 0.0;
    double mean_difference = 0.0, sd_difference = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
};

inline std::string group_label(const Treatment& t, Grouping g) {
    switch (g) {
        case Grouping::All: return "all";
        case Grouping::Frame: return std::string(to_string(t.frame));
        case Grouping::Anchor: return std::string("anchor_") + std::string(anchor_label(t.anchored));
        case Grouping::Cell:
            return std::string(to_string(t.frame)) + "/anchor_" + std::string(anchor_label(t.anchored));
    }
    return "unknown";
}

/// Mean, SD, paired mean difference and its 95% CI for each group and both
/// contrasts. Groups appear in label order.
inline std::vector<SummaryRow> cohort_summary(std::span<const ParticipantMetrics> cohort, Grouping grouping,
                                              Measure measure) {
    std::map<std::string, std::vector<const ParticipantMetrics*>> groups;
    for (const auto& p : cohort) groups[group_label(p.treatment, grouping)].push_back(&p);
    if (groups.empty()) fail(ErrorCode::InsufficientData, "empty cohort");
    std::vector<SummaryRow> out;
    for (const auto& [label, members] : groups) {
        if (members.size() < 2)
            fail(ErrorCode::InsufficientData, "group '" + label + "' has " + std::to_string(members.size()) + " participant(s)");
        for (Contrast c : {Contrast::SoloMinusTeam, Contrast::OneMinusFour}) {
            std::vector<double> a, b, d;
            for (const auto* p : members) {
                const auto [x, y] = contrast_totals(*p, c, measure);
                a.push_back(x);
                b.push_back(y);
                d.push_back(x - y);
            }
            SummaryRow row;
            row.group = label;
            row.contrast = c;
            row.measure = measure;
            row.n = members.size();
            row.mean_a = stats::mean(a);
            row.sd_a = std::sqrt(stats::variance(a));
            row.mean_b = stats::mean(b);
            row.sd_b = std::sqrt(stats::variance(b));
            row.mean_difference = stats::mean(d);
            row.sd_difference = std::sqrt(stats::variance(d));
            const double half = stats::t_critical(static_cast<double>(row.n - 1)) * row.sd_difference /
                                std::sqrt(static_cast<double>(row.n));
            row.ci_low = row.mean_difference - half;
            row.ci_high = row.mean_difference + half;
            out.push_back(std::move(row));
        }
    }
    return out;
}

inline constexpr const char* kMetricsTableHeader =
    "participant,treatment_frame,treatment_anchor,task_index,phase,peaks,duration,explores,explore_fraction,raw_score,"
    "adjusted_score";

inline std::string metrics_row(const ParticipantMetrics& p, int task) {
    const TaskMetrics& m = p.tasks[task];
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%d,%s,%d,%d,%d,%.6f,%.6f,%.6f", std::string(to_string(p.treatment.frame)).c_str(),
                  std::string(anchor_label(p.treatment.anchored)).c_str(), task,
                  std::string(to_string(p.phases[task])).c_str(), peak_number(p.peaks[task]), m.search_duration,
                  m.explore_count, m.explore_fraction, m.raw_score, m.adjusted_score);
    return p.participant_id + "," + buf;
}

inline void write_metrics_table(std::ostream& os, std::span<const ParticipantMetrics> cohort) {
    os << kMetricsTableHeader << '\n';
    for (const auto& p : cohort)
        for (int i = 0; i < kTaskCount; ++i) os << metrics_row(p, i) << '\n';
}

/// Rows for finalized tasks only.
inline void write_metrics_rows(std::ostream& os, const PartialParticipantMetrics& p) {
    for (int i = 0; i < kTaskCount; ++i)
        if (p.finalized[i]) os << metrics_row(p.metrics, i) << '\n';
}

}  // namespace rsl
