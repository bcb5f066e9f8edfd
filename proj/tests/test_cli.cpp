#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
    static int counter = 0;
    const std::string cap = (fs::temp_directory_path() / "rfa_cli_cap").string() +
                            std::to_string(counter++) + ".txt";
    const std::string cmd = std::string("'") + RFA_BIN + "' " + args + " > " + cap + " 2>&1";
    const int raw = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    std::ifstream f(cap);
    std::stringstream ss;
    ss << f.rdbuf();
    r.output = ss.str();
    fs::remove(cap);
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("simulate writes all artifacts and a manifest") {
    const fs::path dir = fresh_dir("rfa_cli_sim");
    spit(dir / "scen.cfg", "persons 2\nduration 240\n");
    auto r = run("simulate --config " + (dir / "scen.cfg").string() + " --seed 5 --out " +
                 (dir / "out").string());
    REQUIRE(r.code == 0);
    CHECK(r.output.starts_with("simulate config="));
    CHECK(r.output.find("seed=5") != std::string::npos);
    for (const char* f : {"heatmaps.rfhm", "skeleton.txt", "labels.txt", "classes.txt",
                          "links.txt"})
        CHECK(fs::exists(dir / "out" / f));
}

TEST_CASE("simulate is reproducible from its seed") {
    const fs::path dir = fresh_dir("rfa_cli_repro");
    spit(dir / "scen.cfg", "persons 2\nduration 120\n");
    auto r1 = run("simulate --config " + (dir / "scen.cfg").string() + " --seed 9 --out " +
                  (dir / "a").string());
    auto r2 = run("simulate --config " + (dir / "scen.cfg").string() + " --seed 9 --out " +
                  (dir / "b").string());
    REQUIRE(r1.code == 0);
    REQUIRE(r2.code == 0);
    CHECK(slurp(dir / "a" / "skeleton.txt") == slurp(dir / "b" / "skeleton.txt"));
    CHECK(slurp(dir / "a" / "labels.txt") == slurp(dir / "b" / "labels.txt"));
}

TEST_CASE("eval of a label file against itself reports perfect mAP") {
    const fs::path dir = fresh_dir("rfa_cli_self");
    spit(dir / "scen.cfg", "persons 2\nduration 240\n");
    REQUIRE(run("simulate --config " + (dir / "scen.cfg").string() + " --seed 1 --out " +
                (dir / "out").string())
                .code == 0);
    auto r = run("eval " + (dir / "out" / "labels.txt").string() + " " +
                 (dir / "out" / "labels.txt").string() + " --iou 0.1,0.5");
    REQUIRE(r.code == 0);
    CHECK(r.output.find("map@0.100000 1.000000") != std::string::npos);
    CHECK(r.output.find("map@0.500000 1.000000") != std::string::npos);
}

TEST_CASE("corrupt label files exit with code 2 and name the line") {
    const fs::path dir = fresh_dir("rfa_cli_corrupt");
    spit(dir / "good.txt", "#labels v1\n0 10 20 0\n");
    spit(dir / "bad.txt", "#labels v1\n0 10 twenty 0\n");
    auto r = run("eval " + (dir / "bad.txt").string() + " " + (dir / "good.txt").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("line 2") != std::string::npos);
}

TEST_CASE("unknown config keys and bad flag values are format errors") {
    const fs::path dir = fresh_dir("rfa_cli_badcfg");
    spit(dir / "scen.cfg", "persons 2\nwavelength 5\n");
    auto r = run("simulate --config " + (dir / "scen.cfg").string() + " --out " +
                 (dir / "out").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("wavelength") != std::string::npos);

    spit(dir / "train.cfg", "steps 1\nscenarios 1\nduration 90\n");
    auto m = run("train --config " + (dir / "train.cfg").string() + " --mode sideways --out " +
                 (dir / "t").string());
    CHECK(m.code == 2);

    auto f = run("train --definitely-not-a-flag");
    CHECK(f.code == 2);
}

TEST_CASE("missing inputs are runtime failures") {
    const fs::path dir = fresh_dir("rfa_cli_missing");
    auto r = run("predict " + (dir / "no.rfa1").string() + " " + (dir / "no.rfhm").string() +
                 " --out " + (dir / "p.txt").string());
    CHECK(r.code != 0);
}

TEST_CASE("train, predict, and eval compose end to end") {
    const fs::path dir = fresh_dir("rfa_cli_e2e");
    spit(dir / "train.cfg",
         "steps 4\nscenarios 1\nskel_scenarios 1\nduration 90\ncheckpoint_every 2\n");
    auto t = run("train --config " + (dir / "train.cfg").string() + " --seed 3 --out " +
                 (dir / "run").string());
    REQUIRE(t.code == 0);
    CHECK(t.output.starts_with("train config="));
    CHECK(fs::exists(dir / "run" / "checkpoint.rfa1"));
    const std::string log = slurp(dir / "run" / "metrics.log");
    CHECK(log.find("step 1 ") != std::string::npos);
    CHECK(log.find("step 4 ") != std::string::npos);

    spit(dir / "scen.cfg", "persons 2\nduration 90\n");
    REQUIRE(run("simulate --config " + (dir / "scen.cfg").string() + " --seed 21 --out " +
                (dir / "sim").string())
                .code == 0);
    auto p = run("predict " + (dir / "run" / "checkpoint.rfa1").string() + " " +
                 (dir / "sim" / "heatmaps.rfhm").string() + " --out " +
                 (dir / "pred.txt").string() + " --skeleton-out " + (dir / "skel.txt").string());
    REQUIRE(p.code == 0);
    CHECK(p.output.starts_with("predict config="));
    REQUIRE(fs::exists(dir / "pred.txt"));
    CHECK(slurp(dir / "pred.txt").starts_with("#labels v1"));

    auto e = run("eval " + (dir / "pred.txt").string() + " " +
                 (dir / "sim" / "labels.txt").string() + " --iou 0.1 --table " +
                 (dir / "table.tsv").string());
    REQUIRE(e.code == 0);
    CHECK(e.output.find("map@0.100000") != std::string::npos);
    CHECK(slurp(dir / "table.tsv").starts_with("metric\ttheta\tclass\tvalue"));
}
