#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kleinlab/experiments.hpp"
#include "kleinlab/verify.hpp"

using namespace kleinlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    REQUIRE(f.good());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    std::string cmd = std::string(KLEINLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& tag) {
    fs::path dir = fs::temp_directory_path() / ("kleinlab-test-" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("spec grammar") {
    SpecNode root = parse_spec("a = 1\nsec {\n  b = two\n  arr = [1, 2, 3]\n}\n# comment\n");
    CHECK(root.number("a") == 1.0);
    const SpecNode* sec = root.find_section("sec");
    REQUIRE(sec);
    CHECK(sec->text("b") == "two");
    REQUIRE(sec->find_array("arr"));
    CHECK(sec->find_array("arr")->size() == 3);

    CHECK_THROWS_AS(parse_spec("sec {\n"), SpecError);
    CHECK_THROWS_AS(parse_spec("}\n"), SpecError);
    CHECK_THROWS_AS(parse_spec("novalue =\n"), SpecError);

    // unknown keys are refused at validation
    CHECK_THROWS_WITH(load_experiment("experiment {\n kind = render\n bogus = 1\n family {\n "
                                      "type = schottky\n }\n}\n"),
                      Catch::Matchers::ContainsSubstring("unknown key"));
    CHECK_THROWS_WITH(load_experiment("experiment {\n kind = render\n family {\n type = "
                                      "schottky\n wat = 2\n }\n}\n"),
                      Catch::Matchers::ContainsSubstring("unknown key"));

    // hash is over the exact bytes
    ExperimentSpec one = load_experiment(presets().at("fuchsian-333"));
    ExperimentSpec two = load_experiment(presets().at("fuchsian-333") + "\n");
    CHECK(one.hash != two.hash);
}

TEST_CASE("preset files match the embedded presets") {
    for (const auto& [name, text] : presets()) {
        fs::path file = fs::path(KLEINLAB_PRESET_DIR) / (name + ".klab");
        REQUIRE(fs::exists(file));
        CHECK(slurp(file) == text);
        CHECK_NOTHROW(load_experiment(text));
    }
}

TEST_CASE("experiment runner writes stamped artifacts") {
    fs::path dir = fresh_dir("runner");
    ExperimentSpec spec = load_experiment(presets().at("cyclic-remark57"));
    ExperimentResult res = run_experiment(spec, dir.string(), {"csv", "json"});
    REQUIRE(res.artifacts.size() == 2);
    std::string csv = slurp(res.artifacts[0]);
    CHECK(csv.find("tool-version = " + std::string(kToolVersion)) != std::string::npos);
    CHECK(csv.find("spec-hash = " + hex64(spec.hash)) != std::string::npos);
    CHECK(res.verdict == "uep violating");
}

TEST_CASE("cli exit codes") {
    fs::path dir = fresh_dir("exitcodes");
    // 0: success
    CHECK(run_cli("run --preset cyclic-remark57 --out " + dir.string()) == 0);
    // 2: missing spec file
    CHECK(run_cli("run --spec /nonexistent/sp.klab --out " + dir.string()) == 2);
    // 2: bad spec content
    fs::path bad = dir / "bad.klab";
    std::ofstream(bad) << "experiment {\n kind = render\n family {\n type = nope\n }\n}\n";
    CHECK(run_cli("run --spec " + bad.string() + " --out " + dir.string()) == 2);
    // 2: unknown preset
    CHECK(run_cli("run --preset no-such --out " + dir.string()) == 2);
    // 4: family failure (overlapping interpolation path)
    fs::path overlap = dir / "overlap.klab";
    std::ofstream(overlap) << "experiment {\n kind = ct-converge\n seed = 1\n family {\n"
                              " name = crash\n type = schottky-interpolation\n"
                              " center-start = 3\n center-end = 0.5\n radius = 1\n steps = 16\n"
                              " }\n}\n";
    CHECK(run_cli("run --spec " + overlap.string() + " --out " + dir.string()) == 4);
    // 5: verification failure under the injected fault
    CHECK(run_cli("verify --suite moebius --trials 200 --fault-scale 1.001") == 5);
    // 0: verify passes honestly
    CHECK(run_cli("verify --suite floyd --trials 100") == 0);
}

TEST_CASE("artifacts are byte-identical across runs") {
    fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
    for (const std::string preset : {"cyclic-remark57", "constant-seq"}) {
        REQUIRE(run_cli("run --preset " + preset + " --out " + d1.string()) == 0);
        REQUIRE(run_cli("run --preset " + preset + " --out " + d2.string()) == 0);
    }
    REQUIRE(run_cli("render --preset fuchsian-333 --format ppm --out " + d1.string()) == 0);
    REQUIRE(run_cli("render --preset fuchsian-333 --format ppm --out " + d2.string()) == 0);
    size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(d1)) {
        fs::path other = d2 / entry.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(entry.path()) == slurp(other));
        ++compared;
    }
    CHECK(compared >= 5);
}

TEST_CASE("verification suites") {
    // honest pass at moderate trial counts
    for (const auto& rep : verify_all(20240817, 800)) {
        INFO(rep.suite);
        for (const auto& w : rep.witnesses) INFO(w);
        CHECK(rep.passed());
        CHECK(rep.checks > 0);
    }

    // zero trials: vacuous pass plus a warning
    VerifyReport vac = verify_moebius(1, 0);
    CHECK(vac.passed());
    REQUIRE(!vac.warnings.empty());

    // the meta-test: an injected distance fault must produce witnesses
    FaultInjection fault;
    fault.dist_scale = 1.001;
    VerifyReport broken = verify_moebius(20240817, 200, fault);
    CHECK(!broken.passed());
    CHECK(!broken.witnesses.empty());
    VerifyReport brokenGeo = verify_hypgeo(20240817, 200, fault);
    CHECK(!brokenGeo.passed());
}

TEST_CASE("experiment kinds cover the spec surface") {
    fs::path dir = fresh_dir("kinds");
    // floyd on the torus preset
    ExperimentSpec torus = load_experiment(presets().at("fuchsian-333"));
    torus.kind = ExperimentKind::floyd;
    ExperimentResult floydRes = run_experiment(torus, dir.string(), {"csv"});
    CHECK(floydRes.verdict.find("log-escape") != std::string::npos);

    // uepp + hausdorff-curve + ep + geom-verify on a small interpolation
    std::string smallStrong =
        "experiment {\n kind = uepp\n seed = 9\n family {\n name = mini\n"
        " type = schottky-interpolation\n center-start = 3\n center-end = 3.4\n"
        " radius = 1\n steps = 8\n }\n caps {\n table-max = 8\n pool-per-depth = 16\n"
        " sample-depth = 6\n grid-depth = 4\n grid-size = 24\n path-reps = 10\n"
        " ep-word = a\n ep-path-reps = 20\n }\n}\n";
    ExperimentSpec mini = load_experiment(smallStrong);
    CHECK(run_experiment(mini, dir.string(), {"csv"}).verdict == "uepp consistent");
    mini.kind = ExperimentKind::hausdorff_curve;
    ExperimentResult hres = run_experiment(mini, dir.string(), {"csv", "json"});
    CHECK(hres.verdict.find("decreasing") != std::string::npos);
    mini.kind = ExperimentKind::ep;
    CHECK(run_experiment(mini, dir.string(), {"csv"}).verdict.find("bounded-blocks") !=
          std::string::npos);
    mini.kind = ExperimentKind::geom_verify;
    ExperimentResult gres = run_experiment(mini, dir.string(), {"csv"});
    CHECK(gres.verdict.find("matched 2 of 2") != std::string::npos);

    // geom-verify on the cyclic family finds the extra parabolic
    ExperimentSpec cyc = load_experiment(presets().at("cyclic-remark57"));
    cyc.kind = ExperimentKind::geom_verify;
    ExperimentResult cres = run_experiment(cyc, dir.string(), {"csv"});
    CHECK(cres.verdict.find("matched 2 of 2") != std::string::npos);
}
