#include <gtest/gtest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <map>
#include <sstream>

#include "rsl/metrics.hpp"
#include "rsl/synth.hpp"

using namespace rsl;

namespace {

// Quadratic scan over every prior pair, spelled out without the library's
// distance helper.
int brute_explores(const std::vector<DialSetting>& walk) {
    int explores = 0;
    for (std::size_t i = 0; i < walk.size(); ++i) {
        int nearest = 1 << 20;
        for (std::size_t j = 0; j < i; ++j) {
            int dx = std::abs(walk[i].x - walk[j].x), dy = std::abs(walk[i].y - walk[j].y);
            dx = std::min(dx, 24 - dx);
            dy = std::min(dy, 24 - dy);
            nearest = std::min(nearest, dx + dy);
        }
        explores += nearest >= 3;
    }
    return explores;
}

TaskRecord record_for(const std::vector<DialSetting>& walk, const Landscape& l) {
    TaskRecord r;
    const auto labels = [&] {
        std::vector<Evaluation> ev;
        for (const auto& s : walk) ev.push_back(Evaluation{0, s.x, s.y, std::nullopt, s, l.at(s), l.at(s), {}, 0});
        return classify_history(ev, 24, 24);
    }();
    for (std::size_t i = 0; i < walk.size(); ++i)
        r.evaluations.push_back(Evaluation{static_cast<int>(i + 1), walk[i].x, walk[i].y, std::nullopt, walk[i],
                                           l.at(walk[i]), l.at(walk[i]), labels[i], 0});
    r.result = TaskResult{walk.back(), l.at(walk.back()), l.at(walk.back())};
    return r;
}

Landscape test_landscape(std::uint64_t seed, int peaks = 1) {
    LandscapeConfig c;
    c.seed = seed;
    c.peak_count = peaks;
    return generate(c);
}

}  // namespace

TEST(Classify, WorkedExamples) {
    const std::vector<DialSetting> aa{parse_letters("[A,A]")};
    EXPECT_EQ(classify(aa, parse_letters("[A,D]")), MoveClass::Explore);
    EXPECT_EQ(classify(aa, parse_letters("[X,C]")), MoveClass::Explore);
    EXPECT_EQ(classify(aa, parse_letters("[A,B]")), MoveClass::Exploit);
    EXPECT_EQ(classify(aa, parse_letters("[A,C]")), MoveClass::Exploit);
    EXPECT_EQ(classify({}, parse_letters("[M,M]")), MoveClass::Explore);
    EXPECT_EQ(classify(aa, parse_letters("[A,A]")), MoveClass::Exploit);
}

TEST(Classify, PrefixMonotone) {
    Engine rng(3);
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<DialSetting> prior;
        const DialSetting next{static_cast<int>(uniform_index(rng, 24)), static_cast<int>(uniform_index(rng, 24))};
        bool exploited = false;
        for (int k = 0; k < 15; ++k) {
            prior.push_back({static_cast<int>(uniform_index(rng, 24)), static_cast<int>(uniform_index(rng, 24))});
            const MoveClass m = classify(prior, next);
            if (exploited) {
                ASSERT_EQ(m, MoveClass::Exploit);
            }
            exploited = m == MoveClass::Exploit;
        }
    }
}

TEST(TaskMetrics, SinglePeakEvaluation) {
    Landscape l = test_landscape(1);
    const double rest = (16.0 * 576 - 32.0) / 575.0;
    for (double& v : l.grid) v = rest;
    l.grid[l.index(l.global_peak)] = 32.0;
    ASSERT_NEAR(mean_elevation(l), 16.0, 1e-12);
    const TaskMetrics m = task_metrics(record_for({l.global_peak}, l), l);
    EXPECT_EQ(m.search_duration, 1);
    EXPECT_EQ(m.explore_count, 1);
    EXPECT_EQ(m.explore_fraction, 1.0);
    EXPECT_EQ(m.raw_score, 32.0);
    EXPECT_NEAR(m.adjusted_score, 2.0, 1e-12);
}

TEST(TaskMetrics, RandomWalksMatchBruteForce) {
    const Landscape l = test_landscape(2);
    Engine rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<DialSetting> walk{{static_cast<int>(uniform_index(rng, 24)), static_cast<int>(uniform_index(rng, 24))}};
        for (int k = 1; k < 20; ++k) {
            const int step = static_cast<int>(uniform_index(rng, 4));
            const int len = 1 + static_cast<int>(uniform_index(rng, 4));
            DialSetting s = walk.back();
            if (step == 0) s.x = wrap(s.x + len, 24);
            if (step == 1) s.x = wrap(s.x - len, 24);
            if (step == 2) s.y = wrap(s.y + len, 24);
            if (step == 3) s.y = wrap(s.y - len, 24);
            walk.push_back(s);
        }
        const TaskMetrics m = task_metrics(record_for(walk, l), l);
        ASSERT_EQ(m.search_duration, 20);
        ASSERT_EQ(m.explore_count, brute_explores(walk));
        ASSERT_DOUBLE_EQ(m.explore_fraction, brute_explores(walk) / 20.0);
    }
}

TEST(TaskMetrics, Errors) {
    const Landscape l = test_landscape(3);
    TaskRecord r = record_for({{0, 0}, {5, 5}}, l);
    TaskRecord open = r;
    open.result.reset();
    try {
        task_metrics(open, l);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TaskNotFinalized);
    }
    r.evaluations[1].move_class = MoveClass::Exploit;
    try {
        task_metrics(r, l);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InconsistentRecord);
    }
}

TEST(TaskMetrics, SessionLabelsAgreeAndDurationMatchesHistory) {
    Session::Options o;
    o.clock = [] { return std::int64_t{0}; };
    Session s = Session::create("m", 5, o);
    synth::run_policy(synth::Policy::random_explorer(17, 9), s);
    const ParticipantMetrics pm = participant_metrics(s);
    for (int i = 0; i < kTaskCount; ++i) {
        EXPECT_EQ(pm.tasks[i].search_duration, static_cast<int>(s.history(i).size()));
        std::vector<DialSetting> walk;
        for (const auto& e : s.history(i)) walk.push_back(e.setting);
        EXPECT_EQ(pm.tasks[i].explore_count, brute_explores(walk));
        EXPECT_GT(pm.tasks[i].adjusted_score, 0.0);
    }
}

TEST(Summary, NullContrastAndInsufficientGroups) {
    ParticipantMetrics p;
    p.phases = {Phase::Solo, Phase::Solo, Phase::Team, Phase::Team};
    p.peaks = {PeakCount::One, PeakCount::Four, PeakCount::Four, PeakCount::One};
    std::vector<ParticipantMetrics> cohort;
    for (int i = 0; i < 5; ++i) {
        p.participant_id = "p" + std::to_string(i);
        const double v = 1.0 + i;
        for (auto& t : p.tasks) t.adjusted_score = v;
        p.tasks[0].adjusted_score += 0.1 * i;
        p.tasks[2].adjusted_score += 0.1 * i;
        cohort.push_back(p);
    }
    const auto rows = cohort_summary(cohort, Grouping::All, Measure::AdjustedScore);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].contrast, Contrast::SoloMinusTeam);
    EXPECT_NEAR(rows[0].mean_difference, 0.0, 1e-12);
    EXPECT_LE(rows[0].ci_low, 0.0);
    EXPECT_GE(rows[0].ci_high, 0.0);

    cohort[0].treatment = {Frame::Loss, false};
    try {
        cohort_summary(cohort, Grouping::Frame, Measure::AdjustedScore);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
    }
}

TEST(Summary, MatchesIndependentRecomputation) {
    const synth::CohortDataset data = synth::run_cohort(synth::balanced_mixed_cohort(100), 31337);
    ASSERT_EQ(data.metrics.size(), 100u);
    for (Measure measure : {Measure::AdjustedScore, Measure::Duration, Measure::ExploreFraction}) {
        const auto rows = cohort_summary(data.metrics, Grouping::Cell, measure);
        ASSERT_EQ(rows.size(), 8u);
        for (const SummaryRow& row : rows) {
            // Rebuild the group from the sessions, not from the metrics.
            std::vector<double> diffs;
            for (const Session& s : data.sessions) {
                const Treatment t = s.treatment();
                const std::string label = std::string(to_string(t.frame)) + "/anchor_" + (t.anchored ? "on" : "off");
                if (label != row.group) continue;
                double arm[2] = {0, 0};
                int exp[2] = {0, 0}, dur[2] = {0, 0};
                for (int i = 0; i < 4; ++i) {
                    const auto& task = s.task(i);
                    const int a = row.contrast == Contrast::SoloMinusTeam ? (task.phase == Phase::Solo ? 0 : 1)
                                                                          : (task.peaks == PeakCount::One ? 0 : 1);
                    const Landscape& l = task.landscape.landscape;
                    double total = 0;
                    for (double v : l.grid) total += v;
                    std::vector<DialSetting> walk;
                    for (const auto& e : s.history(i)) walk.push_back(e.setting);
                    if (measure == Measure::AdjustedScore) arm[a] += s.result(i)->raw_score / (total / l.grid.size());
                    if (measure == Measure::Duration) arm[a] += static_cast<double>(walk.size());
                    exp[a] += brute_explores(walk);
                    dur[a] += static_cast<int>(walk.size());
                }
                if (measure == Measure::ExploreFraction)
                    for (int a = 0; a < 2; ++a) arm[a] = static_cast<double>(exp[a]) / dur[a];
                diffs.push_back(arm[0] - arm[1]);
            }
            ASSERT_EQ(diffs.size(), row.n);
            double sum = 0, ss = 0;
            for (double d : diffs) sum += d;
            const double m = sum / diffs.size();
            for (double d : diffs) ss += (d - m) * (d - m);
            const double sd = std::sqrt(ss / (diffs.size() - 1));
            boost::math::students_t dist(static_cast<double>(diffs.size() - 1));
            const double half = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(diffs.size()));
            EXPECT_NEAR(row.mean_difference, m, 1e-9);
            EXPECT_NEAR(row.sd_difference, sd, 1e-9);
            EXPECT_NEAR(row.ci_low, m - half, 1e-9);
            EXPECT_NEAR(row.ci_high, m + half, 1e-9);
        }
    }
}

TEST(Table, HeaderAndRowFormat) {
    const synth::CohortDataset data = synth::run_cohort(synth::balanced_mixed_cohort(3), 1);
    std::istringstream is(data.metrics_table());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line,
              "participant,treatment_frame,treatment_anchor,task_index,phase,peaks,duration,explores,explore_fraction,"
              "raw_score,adjusted_score");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 10);
    }
    EXPECT_EQ(rows, 12);
    const std::string first = metrics_row(data.metrics[0], 0);
    EXPECT_EQ(first.rfind("p0000,", 0), 0u);
}

TEST(Table, HandWrittenThreeEventLog) {
    std::istringstream log(
        R"({"v":1,"session_id":"s-hand","seq":0,"kind":"SessionCreated","payload":{"participant_id":"p-hand","master_seed":"42"}})"
        "\n"
        R"({"v":1,"session_id":"s-hand","seq":1,"kind":"HumanInput","payload":{"task":0,"x":5,"y":7}})"
        "\n"
        R"({"v":1,"session_id":"s-hand","seq":2,"kind":"Finalized","payload":{"task":0}})"
        "\n");
    const Session s = Session::replay(read_event_log(log));
    const PartialParticipantMetrics p = partial_participant_metrics(s);
    EXPECT_TRUE(p.finalized[0]);
    EXPECT_FALSE(p.finalized[1]);
    const TaskMetrics& t = p.metrics.tasks[0];
    EXPECT_EQ(t.search_duration, 1);
    // From [A,A] to [F,H] is far beyond any local step.
    EXPECT_EQ(t.explore_count, 1);
    EXPECT_DOUBLE_EQ(t.explore_fraction, 1.0);
    const Session fresh = Session::create("p-hand", 42);
    EXPECT_DOUBLE_EQ(t.raw_score, fresh.task(0).landscape.landscape.at(5, 7));

    std::ostringstream os;
    write_metrics_rows(os, p);
    const std::string rows = os.str();
    EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 1);
}
