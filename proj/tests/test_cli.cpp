#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lyam/cli.hpp"

namespace fs = std::filesystem;
using namespace lyam;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "lyam");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("lyam_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

std::size_t count_lines(const fs::path& p) {
    const auto text = slurp(p);
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

std::size_t count_prefix(const fs::path& p, const std::string& prefix) {
    std::ifstream f(p);
    std::size_t n = 0;
    for (std::string line; std::getline(f, line);) n += line.rfind(prefix, 0) == 0;
    return n;
}

const char* kSphere = "[task]\nkind = sphere\ndim = 2\n[optimizer]\neta0 = 0.05\n[run]\nmax_steps = 60\n";

}  // namespace

TEST_CASE("trace writes telemetry, plots and manifest") {
    TempDir tmp;
    const auto cfg = tmp.write("sphere.ini", kSphere);
    const auto r = invoke({"trace", "--config", cfg, "--out", tmp.sub("a")});
    REQUIRE(r.code == 0);
    const fs::path a = tmp.sub("a");
    CHECK(count_lines(a / "trajectory.csv") == 61);
    CHECK(slurp(a / "trajectory.csv").rfind("step,loss,grad_norm,mean_eta,min_eta,max_eta,delta_v,"
                                            "drift_bound,bound_ok\n", 0) == 0);
    CHECK(fs::exists(a / "loss.svg"));
    CHECK(fs::exists(a / "eta.svg"));
    const auto manifest = slurp(a / "manifest.txt");
    CHECK(manifest.find("config_hash: fnv1a64:") != std::string::npos);
    CHECK(manifest.find("seeds: 0") != std::string::npos);
    CHECK(manifest.find("build: lyam") != std::string::npos);

    SUBCASE("byte-identical reruns") {
        REQUIRE(invoke({"trace", "-c", cfg, "-o", tmp.sub("b")}).code == 0);
        CHECK(slurp(a / "trajectory.csv") == slurp(tmp.sub("b") + "/trajectory.csv"));
        CHECK(slurp(a / "loss.svg") == slurp(tmp.sub("b") + "/loss.svg"));
    }
    SUBCASE("refuses to overwrite without --force") {
        const auto again = invoke({"trace", "-c", cfg, "-o", a.string()});
        CHECK(again.code == 2);
        CHECK(again.err.find("--force") != std::string::npos);
        CHECK(invoke({"trace", "-c", cfg, "-o", a.string(), "--force"}).code == 0);
    }
    SUBCASE("overrides and seed") {
        REQUIRE(invoke({"trace", "-c", cfg, "-o", tmp.sub("c"), "--set", "run.max_steps=5",
                        "--seed", "9"})
                    .code == 0);
        CHECK(count_lines(tmp.sub("c") + "/trajectory.csv") == 6);
        CHECK(slurp(tmp.sub("c") + "/manifest.txt").find("seeds: 9") != std::string::npos);
    }
    SUBCASE("divergence is reported, not an error") {
        const auto rosen = tmp.write("rosen.ini",
                                     "[task]\nkind = rosenbrock\ninitial = -1.2, 1\n"
                                     "[optimizer]\nkind = sgd\neta0 = 10\n[run]\nmax_steps = 1000\n");
        const auto d = invoke({"trace", "-c", rosen, "-o", tmp.sub("d")});
        CHECK(d.code == 0);
        CHECK(d.out.find("diverged: yes") != std::string::npos);
    }
}

TEST_CASE("usage and config errors exit 2 without outputs") {
    TempDir tmp;
    const auto missing = invoke({"trace", "--config", tmp.sub("nope.ini"), "--out", tmp.sub("x")});
    CHECK(missing.code == 2);
    CHECK_FALSE(fs::exists(tmp.sub("x")));
    CHECK(invoke({}).code == 2);
    CHECK(invoke({"frobnicate"}).code == 2);
    CHECK(invoke({"trace"}).code == 2);
    CHECK(invoke({"--help"}).code == 0);

    const auto bad = tmp.write("bad.ini", "[optimizer]\nkind = rmsprop\n");
    const auto r = invoke({"bench", "-c", bad, "-o", tmp.sub("y")});
    CHECK(r.code == 2);
    CHECK(r.err.find("AdaBelief") != std::string::npos);
    CHECK_FALSE(fs::exists(tmp.sub("y")));

    const auto grid = tmp.write("grid.ini", "[grid]\nbeta1 = 0.1;0.5\n");
    CHECK(invoke({"ablate", "-c", grid, "-o", tmp.sub("z")}).code == 2);
    const auto cfg = tmp.write("s.ini", kSphere);
    CHECK(invoke({"trace", "-c", cfg, "-o", tmp.sub("w"), "--set", "bogus"}).code == 2);
}

TEST_CASE("output directory from the environment") {
    TempDir tmp;
    const auto cfg = tmp.write("sphere.ini", kSphere);
    ::setenv(cli::kOutputDirEnv, tmp.sub("env").c_str(), 1);
    const auto r = invoke({"trace", "-c", cfg});
    ::unsetenv(cli::kOutputDirEnv);
    CHECK(r.code == 0);
    CHECK(fs::exists(tmp.sub("env") + "/trajectory.csv"));
}

TEST_CASE("bench rows") {
    TempDir tmp;
    const auto cfg = tmp.write("b.ini", std::string(kSphere) + "seeds = 0, 1, 2\n");
    REQUIRE(invoke({"bench", "-c", cfg, "-o", tmp.sub("all")}).code == 0);
    const fs::path csv = tmp.sub("all") + "/comparison.csv";
    CHECK(count_prefix(csv, "seed,") == 18);
    CHECK(count_prefix(csv, "aggregate,") == 6);
    CHECK(fs::exists(tmp.sub("all") + "/comparison.svg"));

    REQUIRE(invoke({"bench", "-c", cfg, "-o", tmp.sub("one"), "--optimizer", "adam"}).code == 0);
    CHECK(count_prefix(tmp.sub("one") + "/comparison.csv", "aggregate,") == 1);
    CHECK(invoke({"bench", "-c", cfg, "-o", tmp.sub("bad"), "--optimizer", "nadam"}).code == 2);
}

TEST_CASE("ablate rows") {
    TempDir tmp;
    const auto cfg = tmp.write("a.ini", "[task]\nkind = sphere\n[run]\nmax_steps = 20\n");
    REQUIRE(invoke({"ablate", "-c", cfg, "-o", tmp.sub("full")}).code == 0);
    const fs::path csv = tmp.sub("full") + "/ablation.csv";
    CHECK(count_lines(csv) == 19);
    CHECK(slurp(csv).rfind("setup,beta1,beta2,eta0,benign_acc,poisoned_acc", 0) == 0);
    CHECK(count_prefix(csv, "Setup R,0.9,0.99,0.003,") == 1);

    REQUIRE(invoke({"ablate", "-c", cfg, "-o", tmp.sub("sub"), "--set", "grid.eta0=0.003",
                    "--set", "grid.beta1=0.9"})
                .code == 0);
    CHECK(count_lines(tmp.sub("sub") + "/ablation.csv") == 4);
}

TEST_CASE("gradcheck") {
    TempDir tmp;
    const auto ok = invoke({"gradcheck", "-o", tmp.sub("ok")});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("PASS") != std::string::npos);

    const auto bad = invoke({"gradcheck", "-o", tmp.sub("bad"), "--corrupt-gradient", "7"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("worst_index=7") != std::string::npos);
    CHECK(bad.out.find("layer 0") != std::string::npos);

    const auto loose = invoke({"gradcheck", "-o", tmp.sub("loose"), "--tolerance", "1e-20"});
    CHECK(loose.code == 1);

    const auto analytic = tmp.write("s.ini", kSphere);
    CHECK(invoke({"gradcheck", "-c", analytic, "-o", tmp.sub("x")}).code == 2);
    const auto mlp = tmp.write("m.ini", "[task]\nkind = mlp\nactivation = relu\n[run]\nseeds = 1,2\n");
    const auto r = invoke({"gradcheck", "-c", mlp, "-o", tmp.sub("m")});
    CHECK(r.code == 0);
    CHECK(count_prefix(tmp.sub("m") + "/gradcheck.txt", "PASS") == 2);
}

TEST_CASE("driftcheck") {
    TempDir tmp;
    const auto quad = tmp.write("q.ini",
                                "[task]\nkind = quadratic\neigenvalues = 0.5, 2\n"
                                "[optimizer]\nbeta1 = 0\neta0 = 0.1\n[run]\nmax_steps = 200\nseeds = 0,1\n");
    const auto r = invoke({"driftcheck", "-c", quad, "-o", tmp.sub("q")});
    CHECK(r.code == 0);
    CHECK(r.out.find("violations: 0") != std::string::npos);
    CHECK(r.out.find("enforced") != std::string::npos);

    // A zero tolerance exposes rounding-level excess; with no allowance that
    // fails only on quadratic tasks.
    const auto strict =
        invoke({"driftcheck", "-c", quad, "-o", tmp.sub("strict"), "--set", "run.drift_tolerance=-1"});
    CHECK(strict.code == 1);
    const auto allowed = invoke({"driftcheck", "-c", quad, "-o", tmp.sub("allowed"), "--set",
                                 "run.drift_tolerance=-1", "--set", "run.violation_allowance=100000"});
    CHECK(allowed.code == 0);

    const auto rast = tmp.write("r.ini",
                                "[task]\nkind = rastrigin\n[optimizer]\neta0 = 0.5\n[run]\n"
                                "max_steps = 100\ndrift_tolerance = -1\n");
    const auto report_only = invoke({"driftcheck", "-c", rast, "-o", tmp.sub("r")});
    CHECK(report_only.code == 0);
    CHECK(report_only.out.find("report-only") != std::string::npos);
}
