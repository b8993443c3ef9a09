#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <json.hpp>

#include "idmfit/cli.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using idmfit::test::data_path;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = idmfit::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("idmfit_cli_" + std::to_string(std::rand()) + "_" +
                                            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream(p) << content;
        return p.string();
    }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("fit prints the coefficients as JSON") {
    const auto r = run({"fit", data_path("coal_miners_breathlessness.csv")});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(std::abs(j["estimates"][0].get<double>() + 7.8237) < 0.01);
    CHECK(j["converged"].get<bool>());
    CHECK(j["ci95"].size() == 2);
}

TEST_CASE("fit writes files and honours the confidence level") {
    TempDir dir;
    const auto r = run({"fit", data_path("coal_miners_breathlessness.csv"), "--json", dir / "fit.json",
                        "--curve", dir / "curve.csv", "--level", "0.9"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto j = nlohmann::json::parse(slurp(dir / "fit.json"));
    CHECK(j["level"].get<double>() == 0.9);
    const auto curve = slurp(dir / "curve.csv");
    CHECK(curve.rfind("age,incidence,ci_lo,ci_hi\n", 0) == 0);
    CHECK(std::count(curve.begin(), curve.end(), '\n') == 10);
    CHECK_FALSE(fs::exists(dir / "fit.json.tmp"));
}

TEST_CASE("input errors exit with 1 and leave no output") {
    TempDir dir;
    const auto empty = dir.file("empty.csv", "");
    auto r = run({"fit", empty, "--json", dir / "out.json"});
    CHECK(r.code == 1);
    CHECK(r.err.find("empty table") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out.json"));

    const auto bad = dir.file("bad.csv", "age_lo,age_hi,n,c\n20,25,10,11\n");
    r = run({"fit", bad});
    CHECK(r.code == 1);
    CHECK(r.err.find("c exceeds n at row 1") != std::string::npos);

    r = run({"fit", dir / "missing.csv"});
    CHECK(r.code == 1);
    r = run({"no-such-command"});
    CHECK(r.code == 1);
    r = run({"fit", data_path("coal_miners_breathlessness.csv"), "--p0", "1.5"});
    CHECK(r.code == 1);
}

TEST_CASE("degenerate data exits with 2") {
    TempDir dir;
    std::string csv = "age_lo,age_hi,n,c\n";
    for (int lo = 20; lo < 65; lo += 5) csv += std::to_string(lo) + "," + std::to_string(lo + 5) + ",100,0\n";
    const auto r = run({"fit", dir.file("zeros.csv", csv)});
    CHECK(r.code == 2);
    CHECK(r.err.find("fit.boundary") != std::string::npos);
}

TEST_CASE("fit-mortality warns about extrapolation and checks coverage") {
    auto r = run({"fit-mortality", data_path("coal_miners_breathlessness.csv"),
                  data_path("lifetable_england_wales.csv")});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("lifetable.extrapolation") != std::string::npos);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["estimates"].size() == 2);

    TempDir dir;
    const auto short_table = dir.file("short.csv",
                                      "age_lo,age_hi,general,diseased\n30,35,100,90\n35,40,90,80\n40,45,80,70\n");
    r = run({"fit-mortality", data_path("coal_miners_breathlessness.csv"), short_table});
    CHECK(r.code == 1);
    CHECK(r.err.find("life table covers ages") != std::string::npos);
}

TEST_CASE("regress") {
    TempDir dir;
    const auto r = run({"regress", data_path("coal_miners_breathlessness.csv"), "--curve", dir / "i.csv"});
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(std::abs(j["beta0"].get<double>() + 7.02) < 0.02);
    CHECK(slurp(dir / "i.csv").rfind("age,incidence\n", 0) == 0);
}

TEST_CASE("plugin writes one curve per period") {
    TempDir dir;
    const auto r = run({"plugin", data_path("diabetes_women_2009.csv"), data_path("diabetes_women_2010.csv"),
                        data_path("mortality_women_illustrative.csv"), "--curve", dir / "inc.csv"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "inc_2009.csv"));
    CHECK(fs::exists(dir / "inc_2010.csv"));
    CHECK(slurp(dir / "inc_2009.csv").rfind("age,incidence,ci_lo,ci_hi,negative\n", 0) == 0);

    const auto one = run({"plugin", data_path("diabetes_women_2009.csv"), data_path("diabetes_women_2010.csv"),
                          data_path("mortality_women_illustrative.csv"), "--period", "2010", "--curve",
                          dir / "single.csv"});
    REQUIRE(one.code == 0);
    CHECK(fs::exists(dir / "single.csv"));
}

TEST_CASE("simulate requires a seed and is reproducible") {
    TempDir dir;
    const auto scenario = dir.file(
        "s.json", R"({"incidence":{"beta0":-7.8237,"beta1":0.07559},
                      "groups":[[20,25],[25,30],[30,35]],"group_sizes":[1000,1000,1000]})");
    CHECK(run({"simulate", scenario}).code == 1);
    const auto a = run({"simulate", scenario, "--seed", "5"});
    const auto b = run({"simulate", scenario, "--seed", "5"});
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    CHECK(a.out.rfind("age_lo,age_hi,n,c\n", 0) == 0);

    const auto e = run({"simulate", scenario, "--seed", "5", "--expected", "-o", dir / "e.csv"});
    REQUIRE(e.code == 0);
    const auto refit = run({"fit", dir / "e.csv"});
    CHECK(refit.code == 0);
}

TEST_CASE("convert-lifetable") {
    const auto r = run({"convert-lifetable", data_path("lifetable_england_wales.csv")});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("age_lo,age_hi,m,m1\n", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 10);
}

TEST_CASE("config file supplies defaults, flags win") {
    TempDir dir;
    const auto cfg = dir.file("run.ini", "[fit]\nlevel=0.8\n");
    auto r = run({"--config", cfg, "fit", data_path("coal_miners_breathlessness.csv")});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["level"].get<double>() == 0.8);
    r = run({"--config", cfg, "fit", data_path("coal_miners_breathlessness.csv"), "--level", "0.9"});
    REQUIRE(r.code == 0);
    CHECK(nlohmann::json::parse(r.out)["level"].get<double>() == 0.9);
}

TEST_CASE("atomic writes replace the target") {
    TempDir dir;
    const auto target = dir.file("x.txt", "old");
    idmfit::cli::write_atomically(target, "new");
    CHECK(slurp(target) == "new");
    CHECK_FALSE(fs::exists(target + ".tmp"));
}

#ifdef IDMFIT_CLI_PATH
TEST_CASE("installed binary returns the documented exit codes") {
    const std::string bin = IDMFIT_CLI_PATH;
    CHECK(std::system((bin + " fit " + data_path("coal_miners_breathlessness.csv") + " > /dev/null").c_str()) == 0);
    TempDir dir;
    const auto empty = dir.file("empty.csv", "");
    const int status = std::system((bin + " fit " + empty + " 2> /dev/null").c_str());
    CHECK(WEXITSTATUS(status) == 1);
}
#endif
