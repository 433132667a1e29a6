#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string line =
        "cd '" + dir.string() + "' && '" KINEX_CLI "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(line.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "kinex_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("cli exit codes") {
    const fs::path dir = scratch("codes");
    CHECK(run_cli("simulate --rule yardsale:lambda=0.5 --n 16 --sweeps 5 --out a.csv", dir) == 0);
    CHECK(fs::exists(dir / "a.csv"));
    CHECK(fs::exists(dir / "a.csv.meta.json"));

    CHECK(run_cli("simulate --rule robinhood --n 16 --sweeps 5 --out a.csv", dir) == 2);
    CHECK(read_file(dir / "stderr.txt").find("yardsale") != std::string::npos);
    CHECK(run_cli("simulate --rule yardsale:lambda=1.5 --n 16 --sweeps 5 --out a.csv", dir) == 2);
    CHECK(run_cli("simulate --n 1 --sweeps 5 --out a.csv", dir) == 2);
    CHECK(run_cli("integrate --grid log:2:1:30 --out b.csv", dir) == 2);

    // A fixed step too large for the positivity check breaches an invariant.
    CHECK(run_cli("integrate --grid log:1e-6:1e5:60 --dt 5 --t-end 10 --fixed-dt --out b.csv",
                  dir) == 3);
    CHECK(fs::exists(dir / "b.csv"));
    CHECK(run_cli("kernel-check --rule loser:lambda=0.5 --grid linear:10:20", dir) == 3);
    CHECK(run_cli("kernel-check --rule iglesias-almeida --grid linear:10:20", dir) == 0);
}

TEST_CASE("cli config files") {
    const fs::path dir = scratch("config");
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "# small run\nrule = yardsale:lambda=0.25\nn = 32\nsweeps = 20\nrecord-every = 10\n";
    }
    REQUIRE(run_cli("simulate --config run.cfg --out c.csv", dir) == 0);
    const std::string meta = read_file(dir / "c.csv.meta.json");
    CHECK(meta.find("\"n\": 32") != std::string::npos);
    CHECK(meta.find("yardsale:lambda=0.25") != std::string::npos);

    // Command-line flags win over the file.
    REQUIRE(run_cli("simulate --config run.cfg --n 8 --out d.csv", dir) == 0);
    CHECK(read_file(dir / "d.csv.meta.json").find("\"n\": 8") != std::string::npos);
}

TEST_CASE("cli gini of a snapshot") {
    const fs::path dir = scratch("gini");
    REQUIRE(run_cli("simulate --n 16 --sweeps 4 --snapshot-every 4 --snapshot-dir snaps --out e.csv",
                    dir) == 0);
    REQUIRE(fs::exists(dir / "snaps" / "population_4.txt"));
    CHECK(run_cli("gini snaps/population_4.txt", dir) == 0);
    CHECK_FALSE(read_file(dir / "stdout.txt").empty());
    CHECK(run_cli("gini missing.txt", dir) == 2);
}
