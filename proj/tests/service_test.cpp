#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <thread>

#include "rsl/server.hpp"

using namespace rsl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rsl_service_test_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    return p;
}

SessionService::Options options_at(const fs::path& dir) {
    SessionService::Options o;
    o.log_dir = dir;
    std::shared_ptr<std::int64_t> t = std::make_shared<std::int64_t>(1'700'000'000'000);
    o.wall_clock = [t] { return *t += 250; };
    return o;
}

struct RunningServer {
    SessionService service;
    Server server;
    int port = 0;
    std::thread thread;

    RunningServer(SessionService::Options o, HelperDelay d) : service(std::move(o)), server(service, d) {
        port = server.bind("127.0.0.1", 0);
        thread = std::thread([this] { server.run(); });
        server.wait_until_ready();
    }
    ~RunningServer() {
        server.stop();
        thread.join();
    }
};

Json parse(const httplib::Result& r) { return Json::parse(r->body); }

}  // namespace

TEST(Store, AppendAndLoad) {
    const fs::path dir = scratch("store");
    EventStore store(dir);
    Session::Options o;
    o.clock = [] { return std::int64_t{5}; };
    Session s = Session::create("p", 1, o);
    store.append(s.session_id(), s.events());
    EXPECT_EQ(store.load(s.session_id()), s.events());
    EXPECT_EQ(store.load_all().size(), 1u);
    fs::remove_all(dir);
}

TEST(Store, UnusableDirectory) {
    const fs::path file = scratch("file");
    std::ofstream(file) << "x";
    try {
        EventStore store(file);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::PersistenceFailure);
    }
    fs::remove(file);
}

TEST(Service, DuplicateAndUnknown) {
    SessionService svc;
    svc.create({"p", 1, std::nullopt, std::nullopt});
    try {
        svc.create({"p", 1, std::nullopt, std::nullopt});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateSession);
    }
    try {
        svc.view("nope");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownSession);
    }
}

TEST(Service, FailedOperationLeavesStateAlone) {
    SessionService svc;
    const std::string id = svc.create({"p", 2, std::nullopt, std::nullopt}).session_id();
    const Session before = svc.snapshot(id);
    EXPECT_THROW(svc.finalize(id), Error);
    EXPECT_THROW(svc.evaluate(id, {30, 1}), Error);
    EXPECT_EQ(svc.snapshot(id), before);
}

TEST(Service, RestartResumesIdenticalState) {
    const fs::path dir = scratch("restart");
    std::string id;
    Session before = [&] {
        SessionService svc(options_at(dir));
        id = svc.create({"restart", 9, Treatment{Frame::Loss, true}, std::nullopt}).session_id();
        svc.evaluate(id, {1, 2});
        svc.evaluate(id, {9, 2});
        svc.finalize(id);
        svc.start_next_task(id);
        svc.evaluate(id, {0, 0});
        svc.finalize(id);
        svc.start_next_task(id);
        svc.evaluate(id, {5, std::nullopt});
        return svc.snapshot(id);
    }();
    SessionService again(options_at(dir));
    const Session after = again.snapshot(id);
    EXPECT_EQ(after, before);
    // The resumed session keeps going.
    again.evaluate(id, {6, std::nullopt});
    again.finalize(id);
    EXPECT_EQ(again.snapshot(id).current_task(), 2);
    fs::remove_all(dir);
}

TEST(Service, ConcurrentEvaluatesAreSerialized) {
    const fs::path dir = scratch("concurrent");
    SessionService svc(options_at(dir));
    const std::string id = svc.create({"c", 3, std::nullopt, std::nullopt}).session_id();
    std::vector<std::thread> threads;
    for (int k = 0; k < 8; ++k)
        threads.emplace_back([&, k] {
            for (int i = 0; i < 10; ++i) svc.evaluate(id, {(k + i) % 24, k});
        });
    for (auto& t : threads) t.join();
    const Session s = svc.snapshot(id);
    EXPECT_EQ(s.history(0).size(), 80u);
    for (std::size_t i = 0; i < s.history(0).size(); ++i) EXPECT_EQ(s.history(0)[i].sequence, static_cast<int>(i + 1));
    EventStore store(dir);
    const auto log = store.load(id);  // read_event_log checks gapless sequence numbers
    EXPECT_EQ(log, s.events());
    fs::remove_all(dir);
}

TEST(Layers, SingleMoveAtPeak) {
    SessionService svc;
    const std::string id = svc.create({"l", 4, std::nullopt, std::nullopt}).session_id();
    const DialSetting peak = svc.snapshot(id).task(0).landscape.landscape.global_peak;
    svc.evaluate(id, {peak.x, peak.y});
    svc.finalize(id);
    const LayeredGrid g = svc.export_layers(id, 0);
    double visits = 0, onehot = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            visits += g.at(1, y, x);
            onehot += g.at(3, y, x);
        }
    EXPECT_EQ(visits, 1.0);
    EXPECT_EQ(onehot, 1.0);
    EXPECT_EQ(g.at(1, peak.y, peak.x), 1.0);
    EXPECT_EQ(g.at(3, peak.y, peak.x), 1.0);
    EXPECT_EQ(g.at(2, peak.y, peak.x), 1.0);
    EXPECT_EQ(g.at(0, peak.y, peak.x), 32.0);
    try {
        svc.export_layers(id, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TaskNotFinalized);
    }
}

TEST(Layers, InvariantsAndStableBytes) {
    SessionService svc;
    const std::string id = svc.create({"m", 5, std::nullopt, std::nullopt}).session_id();
    for (DialSetting d : {DialSetting{1, 1}, {1, 1}, {7, 3}, {20, 20}, {7, 4}}) svc.evaluate(id, {d.x, d.y});
    svc.finalize(id);
    const LayeredGrid g = svc.export_layers(id, 0);
    const Session snap = svc.snapshot(id);
    const Landscape& l = snap.task(0).landscape.landscape;
    double visits = 0;
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) {
            EXPECT_EQ(g.at(0, y, x), l.at(x, y));
            visits += g.at(1, y, x);
            EXPECT_GE(g.at(2, y, x), 0.0);
            EXPECT_LE(g.at(2, y, x), 1.0);
        }
    EXPECT_EQ(visits, 5.0);
    EXPECT_EQ(g.at(1, 1, 1), 2.0);
    EXPECT_DOUBLE_EQ(g.at(2, 1, 1), 1.0 / 5.0);
    EXPECT_DOUBLE_EQ(g.at(2, 3, 7), 3.0 / 5.0);
    const std::string a = layered_grid_to_json(g);
    EXPECT_EQ(a, layered_grid_to_json(svc.export_layers(id, 0)));
    const LayeredGrid back = layered_grid_from_json(a);
    EXPECT_EQ(layered_grid_to_json(back), a);
    EXPECT_EQ(Json::parse(a).at("shape"), Json::parse("[4,24,24]"));
}

TEST(Delay, Parsing) {
    const HelperDelay d = parse_delay("10:20");
    EXPECT_EQ(d.min_ms, 10);
    EXPECT_EQ(d.max_ms, 20);
    EXPECT_THROW(parse_delay("20:10"), Error);
    EXPECT_THROW(parse_delay("abc"), Error);
    EXPECT_THROW(parse_delay("1:2x"), Error);
}

TEST(Http, HappyPathThroughBonus) {
    RunningServer rs(SessionService::Options{}, HelperDelay{0, 0, false});
    httplib::Client cli("127.0.0.1", rs.port);
    auto health = cli.Get("/v1/health");
    ASSERT_TRUE(health);
    EXPECT_EQ(parse(health).at("status"), "ok");

    auto created = cli.Post("/v1/sessions", R"({"participant_id":"web","seed":"42"})", "application/json");
    ASSERT_TRUE(created);
    ASSERT_EQ(created->status, 201);
    const std::string id = parse(created).at("session_id");
    const std::string base = "/v1/sessions/" + id;

    for (int i = 0; i < 3; ++i) {
        auto r = cli.Post(base + "/evaluate", Json{{"x", i}, {"y", 2 * i}}.dump(), "application/json");
        ASSERT_EQ(r->status, 200);
        EXPECT_EQ(parse(r).at("evaluation").at("n"), i + 1);
        EXPECT_EQ(parse(r).at("view").at("task").at("history").size(), static_cast<std::size_t>(i + 1));
    }
    EXPECT_EQ(cli.Get(base + "/bonus")->status, 409);
    for (int t = 0; t < 4; ++t) {
        if (t > 0) {
            ASSERT_EQ(cli.Post(base + "/next", "", "application/json")->status, 200);
            const std::string body = t < 2 ? R"({"x":5,"y":5})" : R"({"x":5})";
            ASSERT_EQ(cli.Post(base + "/evaluate", body, "application/json")->status, 200);
        }
        auto f = cli.Post(base + "/finalize", "", "application/json");
        ASSERT_EQ(f->status, 200);
    }
    auto bonus = cli.Get(base + "/bonus");
    ASSERT_EQ(bonus->status, 200);
    const Json b = parse(bonus);
    EXPECT_EQ(b.at("bonus").get<std::string>(), rs.service.bonus(id).to_string());
    EXPECT_EQ(parse(cli.Get(base)).at("state"), "completed");
    auto ex = cli.Get(base + "/export/0");
    ASSERT_EQ(ex->status, 200);
    EXPECT_EQ(ex->body, layered_grid_to_json(rs.service.export_layers(id, 0)));
}

TEST(Http, ErrorsCarryCodes) {
    RunningServer rs(SessionService::Options{}, HelperDelay{0, 0, false});
    httplib::Client cli("127.0.0.1", rs.port);
    auto missing = cli.Get("/v1/sessions/none");
    EXPECT_EQ(missing->status, 404);
    EXPECT_EQ(parse(missing).at("error").at("code"), "UnknownSession");
    EXPECT_EQ(cli.Post("/v1/sessions", "{oops", "application/json")->status, 400);
    EXPECT_EQ(cli.Post("/v1/sessions", R"({"seed":1})", "application/json")->status, 400);
    const std::string req = R"({"participant_id":"dup","seed":1})";
    EXPECT_EQ(cli.Post("/v1/sessions", req, "application/json")->status, 201);
    EXPECT_EQ(cli.Post("/v1/sessions", req, "application/json")->status, 409);
    const std::string id = Session::derive_session_id("dup", 1);
    auto partial = cli.Post("/v1/sessions/" + id + "/evaluate", R"({"x":1})", "application/json");
    EXPECT_EQ(partial->status, 400);
    EXPECT_EQ(parse(partial).at("error").at("code"), "TaskIsSoloButPartialSettingGiven");
    auto empty = cli.Post("/v1/sessions/" + id + "/finalize", "", "application/json");
    EXPECT_EQ(parse(empty).at("error").at("code"), "NothingEvaluated");
    EXPECT_EQ(cli.Get("/v1/sessions/" + id + "/export/x")->status, 400);
}

TEST(Http, DelayChangesTimingNotContent) {
    auto play = [](HelperDelay d, std::chrono::milliseconds& team_time) {
        SessionService::Options o;
        o.wall_clock = [] { return std::int64_t{0}; };
        RunningServer rs(std::move(o), d);
        httplib::Client cli("127.0.0.1", rs.port);
        const std::string id =
            parse(cli.Post("/v1/sessions", R"({"participant_id":"d","seed":8})", "application/json")).at("session_id");
        const std::string base = "/v1/sessions/" + id;
        std::vector<std::string> bodies;
        team_time = std::chrono::milliseconds(0);
        for (int t = 0; t < 4; ++t) {
            if (t > 0) cli.Post(base + "/next", "", "application/json");
            for (int k = 0; k < 3; ++k) {
                const std::string body = t < 2 ? Json{{"x", k}, {"y", k}}.dump() : Json{{"x", k}}.dump();
                const auto start = std::chrono::steady_clock::now();
                bodies.push_back(cli.Post(base + "/evaluate", body, "application/json")->body);
                if (t >= 2)
                    team_time += std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
            }
            bodies.push_back(cli.Post(base + "/finalize", "", "application/json")->body);
        }
        return bodies;
    };
    std::chrono::milliseconds slow{}, fast{};
    const auto delayed = play(HelperDelay{40, 60, true}, slow);
    const auto immediate = play(HelperDelay{40, 60, false}, fast);
    EXPECT_EQ(delayed, immediate);
    EXPECT_GE(slow.count(), 6 * 40);
}

TEST(Http, BindFailure) {
    SessionService svc;
    Server a(svc, HelperDelay{0, 0, false});
    const int port = a.bind("127.0.0.1", 0);
    Server b(svc, HelperDelay{0, 0, false});
    try {
        b.bind("127.0.0.1", port);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BindFailure);
    }
}
