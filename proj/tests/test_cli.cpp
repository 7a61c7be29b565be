#include "harbench/cli.hpp"
#include "harbench/nn.hpp"
#include "harbench/pamap2.hpp"
#include "harbench/synthetic.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

using namespace harbench;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path small_dataset(const std::string& name) {
    const auto dir = testing::scratch_dir(name);
    SyntheticOptions options;
    options.subjects = {101, 102, 103};
    options.seconds_per_activity = 8.0;
    write_synthetic_dataset(dir / "data", options);
    return dir;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    auto r = cli({"train"});
    CHECK(r.code == 1);
    CHECK(r.err.find("prepare") != std::string::npos);
    CHECK(r.err.find("gradcheck") != std::string::npos);

    CHECK(cli({}).code == 1);
    CHECK(cli({"run", "--lr", "fast", "--data-root", "/nonexistent"}).code == 1);
    CHECK(cli({"run", "--combos", "q", "--data-root", "/nonexistent"}).code == 1);
    CHECK(cli({"run", "--bogus"}).code == 1);
    CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("gradcheck subcommand") {
    const auto r = cli({"gradcheck", "--seeds", "1", "--samples", "16"});
    CHECK(r.code == 0);
    CHECK(r.out.find("max relative error:") != std::string::npos);
    CHECK(r.out.find("conv1") != std::string::npos);
}

TEST_CASE("missing data exits 2") {
    unsetenv("HARBENCH_DATA_ROOT");
    const auto dir = testing::scratch_dir("cli_missing");
    CHECK(cli({"prepare", "--out", dir.string()}).code == 2);
    CHECK(cli({"run", "--out", dir.string()}).code == 2);
    CHECK(cli({"prepare", "--data-root", (dir / "nowhere").string(), "--out", dir.string()}).code == 2);
    CHECK(cli({"report", "--out", dir.string()}).code == 2);
}

TEST_CASE("prepare caches recordings") {
    const auto dir = small_dataset("cli_prepare");
    const auto r = cli({"prepare", "--data-root", (dir / "data").string(), "--out", (dir / "out").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("eligible subjects: 101 102 103") != std::string::npos);
    const auto cache = dir / "out" / "cache" / "subject101.16g.bin";
    REQUIRE(fs::exists(cache));
    std::ifstream in(cache, std::ios::binary);
    const auto cached = read_cache(in);
    const auto parsed = load_subject_file(dir / "data" / "subject101.dat", 101);
    CHECK(cached.timestamps == parsed.timestamps);
    CHECK(cached.activity_ids == parsed.activity_ids);
    REQUIRE(cached.values.size() == parsed.values.size());
    CHECK(std::memcmp(cached.values.data(), parsed.values.data(), parsed.values.size() * sizeof(double)) == 0);
}

TEST_CASE("run, skip and report") {
    const auto dir = small_dataset("cli_run");
    const auto out = dir / "out";
    const std::vector<std::string> args = {"run",          "--data-root", (dir / "data").string(),
                                           "--out",        out.string(),  "--combos",
                                           "l",            "--subsample", "2",
                                           "--seed",       "42",          "--max-epochs",
                                           "2"};
    const auto first = cli(args);
    REQUIRE(first.code == 0);
    CHECK(first.out.find("Chest and Ankle IMU (l) *") != std::string::npos);
    for (const char* f : {"config.resolved", "summaries/l.json", "results.csv", "table.txt", "summary.json",
                          "logs/l_fold0.csv", "logs/l_fold2.csv", "models/l_fold1.bin"}) {
        CHECK_MESSAGE(fs::exists(out / f), f);
    }
    CHECK(slurp(out / "logs" / "l_fold0.csv").rfind("epoch,train_loss,val_loss,val_acc\n1,", 0) == 0);
    std::ifstream model(out / "models" / "l_fold1.bin", std::ios::binary);
    CHECK(nn::load_checkpoint(model).modality == 12);
    CHECK(slurp(out / "config.resolved").find("seed = 42\n") != std::string::npos);

    const auto summary = slurp(out / "summaries" / "l.json");
    const auto table = slurp(out / "table.txt");
    const auto second = cli(args);
    REQUIRE(second.code == 0);
    CHECK(second.out.find("skipping") != std::string::npos);
    CHECK(slurp(out / "summaries" / "l.json") == summary);

    const auto report = cli({"report", "--out", out.string()});
    REQUIRE(report.code == 0);
    CHECK(report.out == table);
    CHECK(slurp(out / "table.txt") == table);
}
