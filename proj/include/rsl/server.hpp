#pragma once

// HTTP/JSON front end for SessionService. Routes and bodies are documented
// in README.md.

#include <atomic>
#include <chrono>
#include <mutex>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>

#include "rsl/codec.hpp"
#include "rsl/error.hpp"
#include "rsl/layers.hpp"
#include "rsl/service.hpp"

namespace rsl {

/// Simulated "helper is working" pause before team-task responses.
struct HelperDelay {
    int min_ms = 600;
    int max_ms = 1200;
    bool enabled = true;

    void check() const {
        if (min_ms < 0 || max_ms < min_ms) fail(ErrorCode::InvalidArgument, "delay bounds need 0 <= lo <= hi");
    }
};

/// Parses "lo:hi" in milliseconds.
inline HelperDelay parse_delay(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) fail(ErrorCode::InvalidArgument, "delay must be lo:hi, got '" + text + "'");
    HelperDelay d;
    try {
        std::size_t used = 0;
        d.min_ms = std::stoi(text.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument(text);
        const std::string hi = text.substr(colon + 1);
        d.max_ms = std::stoi(hi, &used);
        if (used != hi.size()) throw std::invalid_argument(text);
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidArgument, "delay must be lo:hi, got '" + text + "'");
    }
    d.check();
    return d;
}

inline int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownSession: return 404;
        case ErrorCode::SessionNotActive:
        case ErrorCode::SessionNotCompleted:
        case ErrorCode::TaskNotFinalized:
        case ErrorCode::DuplicateSession: return 409;
        case ErrorCode::PersistenceFailure:
        case ErrorCode::OracleFailure:
        case ErrorCode::InconsistentRecord:
        case ErrorCode::ConfigInfeasible: return 500;
        default: return 400;
    }
}

inline Json error_body(ErrorCode code, const std::string& message) {
    return Json{{"v", kProtocolVersion}, {"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
}

inline Json evaluation_row(const Evaluation& e) {
    return Json{{"n", e.sequence},
                {"x", e.setting.x},
                {"y", e.setting.y},
                {"letters", to_letters(e.setting)},
                {"displayed", std::round(e.displayed_value * 10.0) / 10.0}};
}

inline CreateRequest create_request_from_json(const Json& j) {
    CreateRequest r;
    try {
        r.participant_id = j.at("participant_id").get<std::string>();
        r.seed = j.contains("seed") ? seed_from_json(j.at("seed")) : 0;
        if (j.contains("treatment") && !j.at("treatment").is_null()) r.treatment = treatment_from_json(j.at("treatment"));
        if (j.contains("config") && !j.at("config").is_null()) r.config = session_config_from_json(j.at("config"));
    } catch (const Json::exception& ex) {
        fail(ErrorCode::ParseError, std::string("bad create request: ") + ex.what());
    }
    return r;
}

inline DialInput dial_input_from_json(const Json& j) {
    try {
        DialInput in{j.at("x").get<int>(), std::nullopt};
        if (j.contains("y") && !j.at("y").is_null()) in.y = j.at("y").get<int>();
        return in;
    } catch (const Json::exception& ex) {
        fail(ErrorCode::ParseError, std::string("bad evaluate request: ") + ex.what());
    }
}

class Server {
public:
    Server(SessionService& service, HelperDelay delay) : service_(service), delay_(delay), delay_rng_(std::random_device{}()) {
        delay_.check();
        // SO_REUSEADDR only: with SO_REUSEPORT a second instance would share the port.
        http_.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
        });
        routes();
    }

    /// Binds without serving. Port 0 picks a free port. Returns the port.
    int bind(const std::string& host, int port) {
        const int bound = port == 0 ? http_.bind_to_any_port(host) : (http_.bind_to_port(host, port) ? port : -1);
        if (bound < 0) fail(ErrorCode::BindFailure, "cannot bind " + host + ":" + std::to_string(port));
        return bound;
    }

    /// Serves until stop(). Call after bind().
    void run() { http_.listen_after_bind(); }

    void stop() { http_.stop(); }
    void wait_until_ready() const { http_.wait_until_ready(); }

private:
    using Request = httplib::Request;
    using Response = httplib::Response;

    static void reply(Response& res, int status, const Json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    template <class Handler>
    static httplib::Server::Handler guarded(Handler h) {
        return [h](const Request& req, Response& res) {
            try {
                h(req, res);
            } catch (const Error& e) {
                reply(res, http_status(e.code()), error_body(e.code(), e.what()));
            } catch (const Json::exception& e) {
                reply(res, 400, error_body(ErrorCode::ParseError, e.what()));
            }
        };
    }

    static Json body_json(const Request& req) {
        if (req.body.empty()) return Json::object();
        try {
            return Json::parse(req.body);
        } catch (const Json::exception& e) {
            fail(ErrorCode::ParseError, std::string("request body is not JSON: ") + e.what());
        }
    }

    static int task_param(const std::string& s) {
        try {
            std::size_t used = 0;
            const int t = std::stoi(s, &used);
            if (used == s.size()) return t;
        } catch (const std::exception&) {
        }
        fail(ErrorCode::InvalidArgument, "task must be an integer");
    }

    void pause_for_helper() {
        if (!delay_.enabled || delay_.max_ms == 0) return;
        int ms;
        {
            std::lock_guard lock(delay_mutex_);
            ms = std::uniform_int_distribution<int>(delay_.min_ms, delay_.max_ms)(delay_rng_);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    }

    void routes() {
        http_.Get("/v1/health", guarded([this](const Request&, Response& res) {
                      reply(res, 200, {{"v", kProtocolVersion}, {"status", "ok"}, {"sessions", service_.size()}});
                  }));
        http_.Post("/v1/sessions", guarded([this](const Request& req, Response& res) {
                       const Session s = service_.create(create_request_from_json(body_json(req)));
                       reply(res, 201, s.participant_view());
                   }));
        http_.Get(R"(/v1/sessions/([^/]+))", guarded([this](const Request& req, Response& res) {
                      reply(res, 200, service_.view(req.matches[1]));
                  }));
        http_.Post(R"(/v1/sessions/([^/]+)/evaluate)", guarded([this](const Request& req, Response& res) {
                       const std::string id = req.matches[1];
                       const DialInput in = dial_input_from_json(body_json(req));
                       const auto [out, view] = service_.mutate(id, [&](Session& s) {
                           EvaluateOutcome o = s.evaluate(in);
                           return std::pair{std::move(o), s.participant_view()};
                       });
                       Json body{{"v", kProtocolVersion},
                                 {"evaluation", evaluation_row(out.evaluation)},
                                 {"helper_moved", out.helper.has_value()},
                                 {"view", view}};
                       // Outside the session lock: the pause only delays this reply.
                       if (out.helper) pause_for_helper();
                       reply(res, 200, body);
                   }));
        http_.Post(R"(/v1/sessions/([^/]+)/finalize)", guarded([this](const Request& req, Response& res) {
                       const std::string id = req.matches[1];
                       const auto [r, view] = service_.mutate(id, [](Session& s) {
                           const TaskResult t = s.finalize();
                           return std::pair{t, s.participant_view()};
                       });
                       reply(res, 200,
                             {{"v", kProtocolVersion},
                              {"result",
                               {{"letters", to_letters(r.final_setting)},
                                {"displayed", std::round(r.displayed_score * 10.0) / 10.0}}},
                              {"view", view}});
                   }));
        http_.Post(R"(/v1/sessions/([^/]+)/next)", guarded([this](const Request& req, Response& res) {
                       const std::string id = req.matches[1];
                       reply(res, 200, service_.mutate(id, [](Session& s) {
                           s.start_next_task();
                           return s.participant_view();
                       }));
                   }));
        http_.Get(R"(/v1/sessions/([^/]+)/export/([^/]+))", guarded([this](const Request& req, Response& res) {
                      const LayeredGrid g = service_.export_layers(req.matches[1], task_param(req.matches[2]));
                      res.status = 200;
                      res.set_content(layered_grid_to_json(g), "application/json");
                  }));
        http_.Get(R"(/v1/sessions/([^/]+)/bonus)", guarded([this](const Request& req, Response& res) {
                      const Cents c = service_.bonus(req.matches[1]);
                      reply(res, 200, {{"v", kProtocolVersion}, {"bonus", c.to_string()}, {"cents", c.value}});
                  }));
    }

    SessionService& service_;
    HelperDelay delay_;
    std::mutex delay_mutex_;
    std::mt19937 delay_rng_;
    httplib::Server http_;
};

}  // namespace rsl
