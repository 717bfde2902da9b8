// dgmc: run, verify and compare Allen-Cahn experiments.
//
//   dgmc run <config>      full evolution, criteria, CSV and JSON artifacts
//   dgmc verify <config>   invariant suite on the initial data, no evolution
//   dgmc ladder <config>   one run per (eps, n) rung plus the trend report
//   dgmc report <dir>      trend report rebuilt from rung run.json files
//
// Exit codes: 0 all pass, 1 criterion failure, 2 configuration error,
// 3 numerical blow-up.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dgmc/dgmc.hpp"
#include "json_io.hpp"

namespace fs = std::filesystem;
using namespace dgmc;
using namespace dgmc::harness;

namespace {

enum Exit { kPass = 0, kCriterionFailure = 1, kConfigError = 2, kBlowUp = 3 };

struct Flags {
    std::string target;
    std::string out;
    int stride = 0;
    bool quiet = false;
    long checkpoint_every = -1;
    std::string resume;
};

void print_criteria(const std::vector<Criterion>& cs, bool quiet) {
    if (quiet) return;
    for (const auto& c : cs) {
        std::printf("%s  %-42s %-24s %s %g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), format_number(c.value).c_str(),
                    c.relation.c_str(), c.tolerance);
    }
}

void write_json(const fs::path& p, const cli::ordered_json& j) { write_text(p.string(), j.dump(2) + "\n"); }

RunOptions options(const Flags& f, const std::string& out_dir) {
    RunOptions o;
    o.out_dir = out_dir;
    o.stride = f.stride;
    o.quiet = f.quiet;
    o.checkpoint_every = f.checkpoint_every;
    o.resume = f.resume;
    return o;
}

/// Runs one config into `dir`; writes run.json and summary.json next to the CSV.
RunSummary run_into(const RunConfig& cfg, const Flags& f, const fs::path& dir) {
    fs::create_directories(dir);
    RunSummary s = run(cfg, options(f, dir.string()));
    if (s.completed) {
        write_json(dir / "run.json", cli::run_json(s));
        write_json(dir / "summary.json", cli::summary_json(s));
    }
    return s;
}

std::string out_dir(const Flags& f, const RunConfig& cfg) { return f.out.empty() ? cfg.out : f.out; }

int cmd_run(const Flags& f) {
    const RunConfig cfg = load_config(f.target);
    if (!cfg.ladder.empty()) throw ConfigError("config defines a ladder; use 'dgmc ladder'");
    const fs::path dir = out_dir(f, cfg);
    const RunSummary s = run_into(cfg, f, dir);
    print_criteria(s.criteria, f.quiet);
    if (!f.quiet) std::printf("%s: %ld steps, dt %s, artifacts in %s\n", s.pass() ? "pass" : "FAIL", s.steps,
                              format_number(s.dt).c_str(), dir.string().c_str());
    return s.pass() ? kPass : kCriterionFailure;
}

int cmd_verify(const Flags& f) {
    const RunConfig cfg = load_config(f.target);
    const VerifyReport rep = verify(cfg);
    print_criteria(rep.checks, f.quiet);
    if (!f.out.empty()) {
        fs::create_directories(f.out);
        write_json(fs::path(f.out) / "verify.json", cli::verify_json(rep));
    }
    return rep.pass() ? kPass : kCriterionFailure;
}

void print_ladder(const LadderReport& rep, bool quiet) {
    if (quiet) return;
    std::printf("ladder '%s'%s\n", rep.scenario.c_str(), rep.refined ? "" : ": no refinement");
    for (const auto& r : rep.rungs) {
        std::printf("  eps %-8s n %-5d %s\n", format_number(r.eps).c_str(), r.n, r.pass ? "pass" : "FAIL");
    }
    for (const auto& t : rep.trends) {
        std::string vals;
        for (double v : t.values) vals += " " + format_number(v);
        std::printf("%s  %-28s %-10s%s\n", t.pass ? "PASS" : "FAIL", t.name.c_str(), t.expectation.c_str(), vals.c_str());
    }
}

int cmd_ladder(const Flags& f) {
    const RunConfig cfg = load_config(f.target);
    if (cfg.ladder.size() < 2) throw ConfigError("ladder requires ≥ 2 rungs");
    if (!f.resume.empty()) throw ConfigError("--resume applies to a single run");
    const fs::path dir = out_dir(f, cfg);
    std::vector<RungSummary> rungs;
    for (std::size_t k = 0; k < cfg.ladder.size(); ++k) {
        const RunConfig rc = rung_config(cfg, k);
        const fs::path rd = dir / ("rung" + std::to_string(k));
        if (!f.quiet) std::printf("rung %zu: eps %s, n %d\n", k, format_number(rc.eps).c_str(), rc.n);
        const RunSummary s = run_into(rc, f, rd);
        print_criteria(s.criteria, f.quiet);
        rungs.push_back(rung_summary(s));
    }
    const LadderReport rep = ladder_report(rungs);
    write_json(dir / "ladder.json", cli::ladder_json(rep));
    print_ladder(rep, f.quiet);
    return rep.pass() ? kPass : kCriterionFailure;
}

int cmd_report(const Flags& f) {
    const fs::path dir = f.target;
    if (!fs::is_directory(dir)) throw ConfigError("'" + f.target + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() == "run.json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RungSummary> rungs;
    for (const auto& p : files) {
        try {
            rungs.push_back(cli::rung_from_json(cli::ordered_json::parse(read_text(p.string())).at("rung")));
        } catch (const cli::ordered_json::exception& e) {
            throw ConfigError(p.string() + ": " + e.what());
        }
    }
    LadderReport rep;
    try {
        rep = ladder_report(rungs);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const fs::path out = f.out.empty() ? dir : fs::path(f.out);
    fs::create_directories(out);
    write_json(out / "ladder.json", cli::ladder_json(rep));
    print_ladder(rep, f.quiet);
    return rep.pass() ? kPass : kCriterionFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Allen-Cahn to mean curvature flow experiment harness"};
    app.require_subcommand(1);
    Flags f;
    auto add_flags = [&](CLI::App* sub, const char* what) {
        sub->add_option("target", f.target, what)->required();
        sub->add_option("--out", f.out, "output directory (overrides the config)");
        sub->add_flag("--quiet", f.quiet, "suppress per-criterion lines");
    };
    auto add_run_flags = [&](CLI::App* sub) {
        sub->add_option("--stride", f.stride, "sample every N steps")->check(CLI::PositiveNumber);
        sub->add_option("--checkpoint-every", f.checkpoint_every, "write a checkpoint every N steps")
            ->check(CLI::NonNegativeNumber);
    };
    auto* run_cmd = app.add_subcommand("run", "run one configuration");
    add_flags(run_cmd, "config file");
    add_run_flags(run_cmd);
    run_cmd->add_option("--resume", f.resume, "resume from a checkpoint file");
    auto* verify_cmd = app.add_subcommand("verify", "invariant suite without full evolution");
    add_flags(verify_cmd, "config file");
    auto* ladder_cmd = app.add_subcommand("ladder", "run every rung of a ladder config");
    add_flags(ladder_cmd, "config file");
    add_run_flags(ladder_cmd);
    auto* report_cmd = app.add_subcommand("report", "trend report from a directory of runs");
    add_flags(report_cmd, "directory holding rung run.json files");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kConfigError;
    }

    try {
        if (*run_cmd) return cmd_run(f);
        if (*verify_cmd) return cmd_verify(f);
        if (*ladder_cmd) return cmd_ladder(f);
        return cmd_report(f);
    } catch (const BlowUpError& e) {
        std::fprintf(stderr, "dgmc: %s\n", e.what());
        return kBlowUp;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "dgmc: configuration error: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "dgmc: %s\n", e.what());
        return kConfigError;
    }
}
