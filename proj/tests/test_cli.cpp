#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "cisac_cli_test";

int run_cli(const std::string& args) {
    std::string cmd = std::string(CISAC_CLI_PATH) + " " + args + " >" + (kDir / "stdout.txt").string() + " 2>" +
                      (kDir / "stderr.txt").string();
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int lines(const fs::path& p) {
    std::string s = slurp(p);
    return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

struct Fresh {
    Fresh() {
        fs::remove_all(kDir);
        fs::create_directories(kDir);
    }
    ~Fresh() { fs::remove_all(kDir); }
};

std::string out(const std::string& name) { return (kDir / name).string(); }

}  // namespace

TEST_CASE("solve writes a record and a manifest") {
    Fresh f;
    CHECK(run_cli("solve --scenario desk --seed 2 --scheme random_ris --out " + out("one.csv") + " --trace " +
                  out("trace.csv")) == 0);
    CHECK(lines(kDir / "one.csv") == 2);
    CHECK(fs::exists(kDir / "one.csv.manifest.json"));
    nlohmann::json m = nlohmann::json::parse(slurp(kDir / "one.csv.manifest.json"));
    CHECK(m["seeds"] == std::vector<int>{2});
    CHECK(slurp(kDir / "trace.csv").rfind("iter,stage,objective,pd,pf,tau,min_rate,max_interf,rank1_ratio_min\n", 0) == 0);

    CHECK(run_cli("solve --scenario desk --seed 2 --scheme random_ris --format json --out " + out("one.json")) == 0);
    nlohmann::json j = nlohmann::json::parse(slurp(kDir / "one.json"));
    REQUIRE(j.is_array());
    CHECK(j.size() == 1);
    CHECK(j[0]["scheme"] == "random_ris");
    CHECK(j[0]["feasible"] == true);
}

TEST_CASE("sweep over two powers and two seeds") {
    Fresh f;
    CHECK(run_cli("sweep --scenario desk --kind power_sweep --grid 25,30 --seed 1 --seeds 2 --scheme random_ris --out " +
                  out("p.csv")) == 0);
    CHECK(lines(kDir / "p.csv") == 5);
    CHECK(slurp(kDir / "stderr.txt").find("4/4") != std::string::npos);
}

TEST_CASE("failed points give exit code 2 and partial output") {
    Fresh f;
    std::ofstream(kDir / "hard.json") << R"({"n_b": 8, "n_r": 16, "n_m": 4, "r_k": [40, 40]})";
    CHECK(run_cli("solve --scenario " + out("hard.json") + " --scheme random_ris --out " + out("hard.csv")) == 2);
    CHECK(lines(kDir / "hard.csv") == 2);
    CHECK(run_cli("cdf --scenario " + out("hard.json") + " --seeds 2 --scheme random_ris --out " + out("cdf.csv") +
                  " --records " + out("rec.csv")) == 2);
    CHECK(lines(kDir / "rec.csv") == 3);
    CHECK(slurp(kDir / "cdf.csv") == "iterations,fraction\n");
}

TEST_CASE("detection curves") {
    Fresh f;
    CHECK(run_cli("roc --scenario desk --scheme random_ris --pf 0.01,0.1 --out " + out("roc.csv")) == 0);
    CHECK(slurp(kDir / "roc.csv").rfind("scheme,seed,pf,pd,one_minus_pd\n", 0) == 0);
    CHECK(lines(kDir / "roc.csv") == 3);
}

TEST_CASE("iteration CDF") {
    Fresh f;
    CHECK(run_cli("cdf --scenario desk --seeds 2 --scheme random_ris --format json --out " + out("cdf.json")) == 0);
    nlohmann::json j = nlohmann::json::parse(slurp(kDir / "cdf.json"));
    REQUIRE(j.is_array());
    REQUIRE(!j.empty());
    CHECK(j.back()["fraction"] == 1.0);
}

TEST_CASE("usage errors") {
    Fresh f;
    CHECK(run_cli("solve --scenario desk") != 0);  // --out missing
    CHECK(run_cli("solve --scenario desk --scheme best --out " + out("x.csv")) == 1);
    CHECK(run_cli("solve --scenario desk --format xml --out " + out("x.csv")) != 0);
    CHECK(run_cli("solve --scenario " + out("missing.json") + " --out " + out("x.csv")) == 1);
    CHECK(run_cli("sweep --scenario desk --kind ris_sweep --grid 8.5 --out " + out("x.csv")) == 1);
    CHECK_FALSE(fs::exists(kDir / "x.csv"));
}
