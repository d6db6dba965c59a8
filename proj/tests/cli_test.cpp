#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "latplan/domains.hpp"
#include "latplan/image.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
    int code;
    std::string out;
};

Run run(const std::string& args) {
    const std::string cmd = std::string(LATPLAN_CLI) + " " + args + " 2>&1";
    Run r{0, {}};
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 512> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* kConfig = R"({
  "domain": {"name": "hanoi", "size": 3},
  "seed": 5,
  "sae": {"latent_bits": 16, "hidden": 200, "conv_channels": 8, "epochs": 300, "batch_size": 8},
  "solve": {"time_limit": 30, "instances": 6}
})";

}  // namespace

TEST_CASE("command line pipeline on Hanoi(3)") {
    const fs::path dir = fs::temp_directory_path() / "latplan_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path cfg = dir / "config.in.json";
    std::ofstream(cfg) << kConfig;
    const std::string a = "--config " + cfg.string() + " --out " + (dir / "a").string();
    const std::string b = "--config " + cfg.string() + " --out " + (dir / "b").string();

    SUBCASE("errors are reported, not thrown") {
        const Run r = run("train-sae --out " + (dir / "empty").string());
        CHECK(r.code != 0);
        CHECK(r.out.find("gen-data") != std::string::npos);
        CHECK(run("no-such-command").code != 0);
    }

    SUBCASE("stages, evaluation and validation") {
        REQUIRE(run("gen-data " + a).code == 0);
        REQUIRE(run("gen-data " + b).code == 0);
        CHECK(slurp(dir / "a/dataset/dataset.json") == slurp(dir / "b/dataset/dataset.json"));
        CHECK(slurp(dir / "a/dataset/images.lpt") == slurp(dir / "b/dataset/images.lpt"));

        const Run missing = run("eval --out " + (dir / "a").string());
        CHECK(missing.code != 0);
        CHECK(missing.out.find("SAE") != std::string::npos);

        REQUIRE(run("train-sae --out " + (dir / "a").string()).code == 0);
        REQUIRE(run("compile-ama1 --out " + (dir / "a").string()).code == 0);
        CHECK(slurp(dir / "a/ama1/domain.pddl").find("(:requirements :strips)") != std::string::npos);

        const Run ev = run("eval --out " + (dir / "a").string() + " --method ama1");
        REQUIRE(ev.code == 0);
        const json rep = json::parse(slurp(dir / "a/report-ama1-A-none.json"));
        CHECK(rep.at("instances") == 6);
        CHECK(rep.at("solved").get<int>() <= 6);

        // Every valid entry has a plan file that the validator accepts; a swapped copy is rejected.
        bool tampered_checked = false;
        for (const auto& row : rep.at("results")) {
            if (!row.at("valid").get<bool>()) continue;
            const fs::path plan = dir / "a/plans-ama1-A-none" / ("plan-" + std::to_string(row.at("id").get<int>()) + ".json");
            const Run v = run("validate " + plan.string());
            CHECK(v.code == 0);
            CHECK(v.out.rfind("valid", 0) == 0);
            if (!tampered_checked && row.at("length").get<int>() >= 3) {
                json j = json::parse(slurp(plan));
                std::swap(j["decoded"][1], j["decoded"][2]);
                const fs::path bad = dir / "tampered.json";
                std::ofstream(bad) << j.dump();
                const Run t = run("validate " + bad.string());
                CHECK(t.code == 0);
                CHECK(t.out.rfind("invalid", 0) == 0);
                tampered_checked = true;
            }
        }
        CHECK(tampered_checked);

        const latplan::Domain d = latplan::Domain::hanoi(3);
        const fs::path init = dir / "init.pgm";
        latplan::write_pgm(init.string(), d.render(latplan::PuzzleState{latplan::DomainKind::hanoi, {0, 0, 0}}));
        const Run s = run("solve --out " + (dir / "a").string() + " --init " + init.string());
        CHECK(s.code == 0);
        CHECK(fs::exists(dir / "a/plan.json"));
        CHECK(run("visualize --out " + (dir / "a").string()).code == 0);
        CHECK(fs::exists(dir / "a/reconstructions.ppm"));
    }
    fs::remove_all(dir);
}
