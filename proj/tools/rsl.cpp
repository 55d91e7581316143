// rsl: operator command line for the landscape experiment platform.
//
//   rsl generate --peaks 4 --seed 7 --out land.txt
//   rsl validate land.txt
//   rsl simulate --cohort 100 --seed 7 --out metrics.csv --logs logs/
//   rsl metrics logs/ --out metrics.csv
//   rsl export-layers logs/s0123.ndjson --task 2
//   rsl serve --bind 127.0.0.1:8080 --logs logs/
//
// Every flag can also come from an RSL_* environment variable, e.g.
// RSL_SEED=7. Usage errors exit 2, validation failures exit 1.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "rsl/landscape.hpp"
#include "rsl/layers.hpp"
#include "rsl/metrics.hpp"
#include "rsl/server.hpp"
#include "rsl/service.hpp"
#include "rsl/session.hpp"
#include "rsl/synth.hpp"

namespace fs = std::filesystem;
using namespace rsl;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitFailure = 1;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

SessionConfig load_config(const std::string& path) {
    SessionConfig c;
    if (path.empty()) return c;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path);
    try {
        return session_config_from_json(Json::parse(in));
    } catch (const Json::exception& e) {
        throw UsageError("bad config " + path + ": " + e.what());
    }
}

// Writes to the file at `path`, or stdout for "" and "-".
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
    if (path.empty() || path == "-") {
        fn(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::PersistenceFailure, "cannot write " + path);
    fn(out);
    if (!out) fail(ErrorCode::PersistenceFailure, "write failed for " + path);
}

std::vector<EventRecord> read_log_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) fail(ErrorCode::PersistenceFailure, "cannot read " + p.string());
    return read_event_log(in);
}

// Files given directly, plus every *.ndjson inside given directories.
std::vector<fs::path> expand_logs(const std::vector<std::string>& inputs) {
    std::vector<fs::path> out;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(in))
                if (e.is_regular_file() && e.path().extension() == ".ndjson") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            out.insert(out.end(), found.begin(), found.end());
        } else if (fs::exists(in)) {
            out.emplace_back(in);
        } else {
            throw UsageError("no such log: " + in);
        }
    }
    return out;
}

std::optional<Treatment> treatment_from_flags(const std::string& frame, const std::string& anchor) {
    if (frame.empty() && anchor.empty()) return std::nullopt;
    if (frame.empty() || anchor.empty()) throw UsageError("--frame and --anchor must be given together");
    return Treatment{parse_frame(frame), anchor == "on"};
}

std::pair<std::string, int> parse_bind(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw UsageError("--bind needs host:port");
    try {
        std::size_t used = 0;
        const std::string port = text.substr(colon + 1);
        const int p = std::stoi(port, &used);
        if (used != port.size() || p < 0 || p > 65535) throw std::out_of_range(port);
        return {text.substr(0, colon), p};
    } catch (const std::exception&) {
        throw UsageError("bad port in --bind " + text);
    }
}

synth::Policy policy_named(const std::string& name) {
    if (name == "random") return synth::Policy::random_explorer();
    if (name == "climber") return synth::Policy::greedy_climber();
    if (name == "satisficer") return synth::Policy::effort_satisficer();
    throw UsageError("unknown policy " + name);
}

Server* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rugged-landscape search experiment platform"};
    app.require_subcommand(1);

    std::string config_path, out_path, frame, anchor, bind = "127.0.0.1:8080", delay_text = "600:1200", logs_dir,
                                                        policy = "mixed";
    std::uint64_t seed = 0;
    int peaks = 1, cohort = 0, task = 0;
    bool no_delay = false;
    std::vector<std::string> inputs;
    std::string landscape_file;

    auto add_config = [&](CLI::App* c) {
        c->add_option("--config", config_path, "JSON session config (landscape, helper, initial_dial)")
            ->envname("RSL_CONFIG");
    };
    auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "Master seed")->envname("RSL_SEED"); };
    auto add_out = [&](CLI::App* c) {
        c->add_option("--out", out_path, "Output file (default stdout)")->envname("RSL_OUT");
    };
    auto add_treatment = [&](CLI::App* c) {
        c->add_option("--frame", frame, "Force the frame for every session")
            ->check(CLI::IsMember({"gain", "loss"}))
            ->envname("RSL_FRAME");
        c->add_option("--anchor", anchor, "Force the anchor for every session")
            ->check(CLI::IsMember({"on", "off"}))
            ->envname("RSL_ANCHOR");
    };

    auto* gen = app.add_subcommand("generate", "Write a landscape file");
    add_config(gen);
    add_seed(gen);
    add_out(gen);
    gen->add_option("--peaks", peaks, "Peak count")->check(CLI::IsMember({1, 4}))->envname("RSL_PEAKS");

    auto* val = app.add_subcommand("validate", "Check a landscape file against the constraints");
    add_config(val);
    val->add_option("file", landscape_file, "Landscape file")->required();

    auto* sim = app.add_subcommand("simulate", "Run a synthetic cohort and write its metrics table");
    add_config(sim);
    add_seed(sim);
    add_out(sim);
    add_treatment(sim);
    sim->add_option("--cohort", cohort, "Participants")->required()->check(CLI::NonNegativeNumber)->envname("RSL_COHORT");
    sim->add_option("--policy", policy, "mixed, random, climber or satisficer")
        ->check(CLI::IsMember({"mixed", "random", "climber", "satisficer"}))
        ->envname("RSL_POLICY");
    sim->add_option("--logs", logs_dir, "Also write each session's event log here")->envname("RSL_LOGS");

    auto* met = app.add_subcommand("metrics", "Metrics table from event logs");
    add_out(met);
    met->add_option("logs", inputs, "Log files or directories")->required();

    auto* exp = app.add_subcommand("export-layers", "Layered grid for one finalized task of a log");
    add_out(exp);
    exp->add_option("log", landscape_file, "Event log")->required();
    exp->add_option("--task", task, "Task index")->check(CLI::Range(0, kTaskCount - 1))->envname("RSL_TASK");

    auto* srv = app.add_subcommand("serve", "Run the session service");
    srv->add_option("--bind", bind, "host:port")->envname("RSL_BIND");
    srv->add_option("--logs", logs_dir, "Event log directory")->required()->envname("RSL_LOGS");
    srv->add_option("--delay-ms", delay_text, "Helper delay bounds lo:hi")->envname("RSL_DELAY_MS");
    srv->add_flag("--no-delay", no_delay, "Disable the helper delay")->envname("RSL_NO_DELAY");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*gen) {
            LandscapeConfig lc = load_config(config_path).landscape;
            lc.peak_count = peaks;
            lc.seed = seed;
            const Landscape l = generate(lc);
            with_output(out_path, [&](std::ostream& os) { write_landscape(os, l); });
            return 0;
        }

        if (*val) {
            std::ifstream in(landscape_file);
            if (!in) throw UsageError("cannot read " + landscape_file);
            const Landscape l = read_landscape(in, load_config(config_path).landscape);
            // Files carry six decimals, so slopes are checked to that precision.
            const auto violations = validate(l, 1e-6);
            for (const auto& v : violations) {
                std::cout << to_string(v.kind) << ": " << v.message;
                for (const auto& c : v.cells) std::cout << ' ' << to_letters(c);
                std::cout << '\n';
            }
            if (!violations.empty()) return kExitFailure;
            std::cout << "ok\n";
            return 0;
        }

        if (*sim) {
            synth::CohortSpec spec;
            spec.config = load_config(config_path);
            const auto forced = treatment_from_flags(frame, anchor);
            if (policy == "mixed") {
                spec = synth::balanced_mixed_cohort(cohort);
                spec.config = load_config(config_path);
                if (forced)
                    for (auto& c : spec.cells) c.treatment = *forced;
            } else if (forced) {
                spec.cells.push_back({policy_named(policy), *forced, cohort});
            } else {
                for (std::size_t i = 0; i < kTreatmentCells.size(); ++i) {
                    const int n = cohort / 4 + (static_cast<int>(i) < cohort % 4 ? 1 : 0);
                    if (n) spec.cells.push_back({policy_named(policy), kTreatmentCells[i], n});
                }
            }
            const synth::CohortDataset data = synth::run_cohort(spec, seed);
            if (!logs_dir.empty()) {
                const EventStore store(logs_dir);
                for (const Session& s : data.sessions) {
                    fs::remove(store.path_for(s.session_id()));
                    store.append(s.session_id(), s.events());
                }
            }
            with_output(out_path, [&](std::ostream& os) { os << data.metrics_table(); });
            return 0;
        }

        if (*met) {
            const auto files = expand_logs(inputs);
            with_output(out_path, [&](std::ostream& os) {
                os << kMetricsTableHeader << '\n';
                for (const auto& f : files) write_metrics_rows(os, partial_participant_metrics(Session::replay(read_log_file(f))));
            });
            return 0;
        }

        if (*exp) {
            const Session s = Session::replay(read_log_file(landscape_file));
            const std::string text = layered_grid_to_json(export_layers(s, task));
            with_output(out_path, [&](std::ostream& os) { os << text << '\n'; });
            return 0;
        }

        if (*srv) {
            HelperDelay delay = parse_delay(delay_text);
            delay.enabled = !no_delay;
            const auto [host, port] = parse_bind(bind);
            SessionService::Options o;
            o.log_dir = logs_dir;
            SessionService service(std::move(o));
            Server server(service, delay);
            const int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "rsl: serving " << service.size() << " session(s) on " << host << ':' << bound << '\n';
            server.run();
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "rsl: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "rsl: " << to_string(e.code()) << ": " << e.what() << '\n';
        const bool usage = e.code() == ErrorCode::InvalidArgument || e.code() == ErrorCode::ParseError;
        return usage && !*met && !*exp ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "rsl: " << e.what() << '\n';
        return kExitFailure;
    }
    return 0;
}
