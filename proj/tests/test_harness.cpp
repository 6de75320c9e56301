#include <doctest.h>

#include "ldpspde/cli.hpp"
#include "ldpspde/config.hpp"
#include "ldpspde/errors.hpp"
#include "ldpspde/experiments.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace ldp;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "ldpspde");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ldpspde-harness-" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

std::string error_of(const std::string& text) {
    try {
        parse_config(text, "cfg.ini");
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

}  // namespace

TEST_CASE("config parsing") {
    const auto c = parse_config("[model]\nname = linear\ndim = 4\n\n[run]\neps = 0.5, 0.25\ntrajectories = 10,20\nseed = 9\n");
    CHECK(c.model.name == "linear");
    CHECK(c.model.dim == 4);
    CHECK(c.run.eps == std::vector<double>{0.5, 0.25});
    CHECK(c.run.trajectories == std::vector<std::size_t>{10, 20});
    CHECK(c.run.seed == 9);
    CHECK(c.target.predicate == "all");
}

TEST_CASE("config errors name the line") {
    CHECK(error_of("[model]\nname = linear\nbogus = 1\n") == "cfg.ini:3: unknown key 'bogus' in [model]");
    CHECK(error_of("[run]\n\nseed = x\n").rfind("cfg.ini:3:", 0) == 0);
    CHECK(error_of("[model]\nname = a\nname = b\n").rfind("cfg.ini:3:", 0) == 0);
    CHECK(error_of("[nope]\nx = 1\n").find("unknown section [nope]") != std::string::npos);
    CHECK(error_of("[run\n").rfind("cfg.ini:1:", 0) == 0);
    CHECK(error_of("[run]\neps = 0.1, abc\n").rfind("cfg.ini:2:", 0) == 0);
}

TEST_CASE("config invariants") {
    ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    c.run.eps = {0.1, 0.2};
    c.run.trajectories = {1};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = ExperimentConfig{};
    c.run.trajectories = {1, 2};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = ExperimentConfig{};
    c.noise.masses = {1.0, 2.0};
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = ExperimentConfig{};
    c.control.partition = "edges";
    CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("render round trip") {
    ExperimentConfig c;
    c.model.name = "burgers";
    c.model.x0 = {0.1, -0.2, 1.0 / 3.0};
    c.run.eps = {0.3, 0.15};
    c.run.trajectories = {7, 8};
    c.run.strict_order = true;
    c.target.predicate = "|XT|>=0.5";
    const std::string text = render_config(c);
    const auto back = parse_config(text);
    CHECK(render_config(back) == text);
    CHECK(back.model.x0 == c.model.x0);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("run_indexed is thread-count independent") {
    for (std::size_t threads : {1, 2, 5}) {
        std::vector<int> slots(100, 0);
        std::atomic<int> calls{0};
        run_indexed(slots.size(), threads, [&](std::size_t i) {
            slots[i] = static_cast<int>(i * i);
            ++calls;
        });
        CHECK(calls == 100);
        for (std::size_t i = 0; i < slots.size(); ++i) CHECK(slots[i] == static_cast<int>(i * i));
    }
    CHECK(trajectory_stream(kTagNaive, 2, 5) == ((1ull << 56) | (2ull << 40) | 5ull));
    const std::vector<double> x{1.0, 2.0, 3.0};
    const auto ms = mean_se(x);
    CHECK(ms.mean == 2.0);
    CHECK(ms.se == doctest::Approx(std::sqrt(1.0 / 3.0)));
}

TEST_CASE("cli exit codes") {
    const auto dir = scratch("codes");
    CHECK(run_cli({"check-conditions", "--out", (dir / "ok").string()}) == 0);
    CHECK(fs::exists(dir / "ok" / "conditions.csv"));
    CHECK(fs::exists(dir / "ok" / "manifest.json"));

    CHECK(run_cli({"no-such-command"}) == 2);
    CHECK(run_cli({"simulate", "--model", "nope", "--out", (dir / "bad").string()}) == 2);
    CHECK_FALSE(fs::exists(dir / "bad"));
    write(dir / "bad.ini", "[run]\nseed = 1\nfoo = 2\n");
    CHECK(run_cli({"simulate", "--config", (dir / "bad.ini").string(), "--out", (dir / "bad2").string()}) == 2);
    CHECK_FALSE(fs::exists(dir / "bad2"));
    CHECK(run_cli({"rate", "--target", "XT[5]>=1", "--out", (dir / "bad3").string()}) == 2);
    CHECK(run_cli({"simulate", "--control", (dir / "missing.txt").string(), "--out", (dir / "bad4").string()}) == 2);

    // explicit Burgers steps from a huge state overflow
    write(dir / "blow.ini", "[model]\nname = burgers\ndim = 8\nx0 = 10000\n[noise]\nkind = zero\n[run]\ndt = 0.1\n");
    CHECK(run_cli({"simulate", "--config", (dir / "blow.ini").string(), "--out", (dir / "blow").string()}) == 3);
    CHECK_FALSE(fs::exists(dir / "blow"));
}

TEST_CASE("cli outputs") {
    const auto dir = scratch("outputs");
    CHECK(run_cli({"simulate", "--out", (dir / "sim").string()}) == 0);
    CHECK(slurp(dir / "sim" / "path.csv").rfind("t,jump,x1,", 0) == 0);
    CHECK(run_cli({"skeleton", "--out", (dir / "sk").string()}) == 0);
    CHECK(fs::exists(dir / "sk" / "skeleton.csv"));
    write(dir / "rate.ini", "[target]\npredicate = XT>=1.5\n[rate]\ngrid_points = 200\ngrid_hi = 5\n");
    CHECK(run_cli({"rate", "--config", (dir / "rate.ini").string(), "--out", (dir / "rate").string()}) == 0);
    for (const char* f : {"rate.csv", "trace.csv", "control.txt", "brute_force.csv", "manifest.json"}) {
        CHECK(fs::exists(dir / "rate" / f));
    }
    // the optimized control feeds back into simulate
    CHECK(run_cli({"simulate", "--control", (dir / "rate" / "control.txt").string(), "--out", (dir / "sim2").string()}) == 0);

    const auto j = nlohmann::json::parse(slurp(dir / "rate" / "manifest.json"));
    CHECK(j["command"] == "rate");
    CHECK(j["outputs"]["rate.csv"] == fnv1a_hex(slurp(dir / "rate" / "rate.csv")));
    CHECK(j["config_hash"] == fnv1a_hex(j["config"].get<std::string>()));
    CHECK(j["rungs"].size() == 4);
}

TEST_CASE("reruns are byte identical") {
    const auto dir = scratch("repro");
    write(dir / "small.ini",
          "[model]\nname = linear\n[target]\npredicate = XT[1]>=0.9\n[run]\neps = 0.4, 0.2\ntrajectories = 300\n"
          "dt = 0.01\nthreads = 3\n");
    const std::string cfg = (dir / "small.ini").string();
    REQUIRE(run_cli({"verify-ldp", "--config", cfg, "--out", (dir / "a").string()}) == 0);
    REQUIRE(run_cli({"verify-ldp", "--config", cfg, "--out", (dir / "b").string()}) == 0);
    REQUIRE(run_cli({"verify-ldp", "--config", cfg, "--strict-order", "--out", (dir / "c").string()}) == 0);
    for (const char* f : {"ldp.csv", "ldp_summary.csv", "control.txt", "manifest.json"}) {
        CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
    }
    // thread count does not change results
    CHECK(slurp(dir / "a" / "ldp.csv") == slurp(dir / "c" / "ldp.csv"));
    CHECK(run_cli({"verify-ldp", "--config", cfg, "--seed", "2", "--out", (dir / "d").string()}) == 0);
    CHECK(slurp(dir / "a" / "ldp.csv") != slurp(dir / "d" / "ldp.csv"));
}

TEST_CASE("output directory from the environment") {
    const auto dir = scratch("env");
    ::setenv("LDPSPDE_OUTPUT_DIR", (dir / "from-env").string().c_str(), 1);
    CHECK(run_cli({"check-conditions"}) == 0);
    ::unsetenv("LDPSPDE_OUTPUT_DIR");
    CHECK(fs::exists(dir / "from-env" / "conditions.csv"));
}
