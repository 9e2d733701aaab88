// kleinlab: run desk-scale experiments on explicit Kleinian-group families,
// render limit sets, and execute the numeric property suites.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "kleinlab/experiments.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitSpec = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitFamily = 4;
constexpr int kExitVerify = 5;

std::string load_spec_text(const std::string& specPath, const std::string& presetName) {
    if (!presetName.empty()) {
        const auto& table = kleinlab::presets();
        auto it = table.find(presetName);
        if (it == table.end())
            throw kleinlab::SpecError("unknown preset '" + presetName + "'");
        return it->second;
    }
    std::ifstream f(specPath, std::ios::binary);
    if (!f) throw kleinlab::SpecError("cannot open spec file " + specPath);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct RunArgs {
    std::string spec;
    std::string preset;
    std::string kindOverride;
    std::string outDir = "out";
    std::vector<std::string> formats = {"csv", "json"};
    uint64_t seed = 0;
    bool seedSet = false;
    int jobs = 0;
};

int execute(const RunArgs& args, const char* forcedKind) {
    kleinlab::ExperimentSpec spec;
    try {
        spec = kleinlab::load_experiment(load_spec_text(args.spec, args.preset));
        if (!args.kindOverride.empty()) spec.kind = kleinlab::kind_from_string(args.kindOverride);
        if (forcedKind) spec.kind = kleinlab::kind_from_string(forcedKind);
        if (args.seedSet) spec.seed = args.seed;
        if (args.jobs > 0) spec.jobs = args.jobs;
    } catch (const kleinlab::SpecError& e) {
        std::fprintf(stderr, "spec error: %s\n", e.what());
        return kExitSpec;
    }
    try {
        kleinlab::ExperimentResult result =
            kleinlab::run_experiment(spec, args.outDir, args.formats);
        for (const auto& a : result.artifacts) std::printf("wrote %s\n", a.c_str());
        std::printf("verdict: %s\n", result.verdict.c_str());
        return kExitOk;
    } catch (const kleinlab::CertificateError& e) {
        std::fprintf(stderr, "family failure: %s\n", e.what());
        return kExitFamily;
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        if (what.find("empty") != std::string::npos) {
            std::fprintf(stderr, "empty result: %s\n", what.c_str());
            return kExitEmpty;
        }
        std::fprintf(stderr, "family failure: %s\n", what.c_str());
        return kExitFamily;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "spec error: %s\n", e.what());
        return kExitSpec;
    }
}

void add_common(CLI::App* cmd, RunArgs& args, bool withKind) {
    cmd->add_option("--spec", args.spec, "experiment spec file");
    cmd->add_option("--preset", args.preset,
                    "shipped preset: fuchsian-333, schottky-strong, cyclic-remark57, constant-seq");
    if (withKind)
        cmd->add_option("--kind", args.kindOverride,
                        "override the experiment kind declared in the spec");
    cmd->add_option("--out", args.outDir, "output directory");
    cmd->add_option("--format", args.formats, "artifact formats: csv|json|ppm|png");
    cmd->add_option_function<uint64_t>(
        "--seed", [&args](uint64_t v) { args.seed = v; args.seedSet = true; }, "seed override");
    cmd->add_option("--jobs", args.jobs, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kleinlab: Kleinian-group limit-set and boundary-map laboratory"};
    app.require_subcommand(1);

    RunArgs runArgs, renderArgs, convergeArgs;
    CLI::App* run = app.add_subcommand("run", "run the experiment a spec declares");
    add_common(run, runArgs, true);
    CLI::App* render = app.add_subcommand("render", "rasterize a limit-set sample");
    add_common(render, renderArgs, false);
    CLI::App* converge = app.add_subcommand("converge", "boundary-map convergence report");
    add_common(converge, convergeArgs, false);

    std::string suite = "all";
    uint64_t vseed = 20240817;
    int trials = 10000;
    double faultScale = 1.0;
    CLI::App* verify = app.add_subcommand("verify", "run the numeric property suites");
    verify->add_option("--suite", suite, "moebius | hypgeo | floyd | all");
    verify->add_option("--seed", vseed, "suite seed");
    verify->add_option("--trials", trials, "trial count per property");
    verify->add_option("--fault-scale", faultScale,
                       "test fixture: scale computed distances to force failures")
        ->group("");  // hidden

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return execute(runArgs, nullptr);
    if (render->parsed()) return execute(renderArgs, "render");
    if (converge->parsed()) return execute(convergeArgs, "ct-converge");

    if (verify->parsed()) {
        kleinlab::FaultInjection fault;
        fault.dist_scale = faultScale;
        std::vector<kleinlab::VerifyReport> reports;
        try {
            if (suite == "all") {
                reports = kleinlab::verify_all(vseed, trials, fault);
            } else if (suite == "moebius") {
                reports = {kleinlab::verify_moebius(vseed, trials, fault)};
            } else if (suite == "hypgeo") {
                reports = {kleinlab::verify_hypgeo(vseed, trials, fault)};
            } else if (suite == "floyd") {
                reports = {kleinlab::verify_floyd(vseed, trials, fault)};
            } else {
                std::fprintf(stderr, "spec error: unknown suite '%s'\n", suite.c_str());
                return kExitSpec;
            }
        } catch (const std::exception& e) {
            std::fprintf(stderr, "verification error: %s\n", e.what());
            return kExitVerify;
        }
        bool ok = true;
        for (const auto& r : reports) {
            std::printf("[%s] %s: %d checks, %zu failures\n", r.passed() ? "PASS" : "FAIL",
                        r.suite.c_str(), r.checks, r.witnesses.size());
            for (const auto& w : r.warnings) std::printf("  warning: %s\n", w.c_str());
            for (const auto& w : r.witnesses) std::printf("  witness: %s\n", w.c_str());
            ok = ok && r.passed();
        }
        return ok ? kExitOk : kExitVerify;
    }
    return kExitSpec;
}
