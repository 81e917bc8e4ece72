#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli_io.hpp"
#include "pme/errors.hpp"

using namespace pme;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    std::string cmd = std::string(PME_CLI_PATH) + " " + args + " 2>/dev/null";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

cli::Table parse(const std::string& csv) {
    std::istringstream is(csv);
    return cli::read_csv(is);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch_dir() {
    auto d = fs::temp_directory_path() / ("pme_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("grid parsing") {
    CHECK(cli::parse_grid("0:0.5:60").size() == 121);
    CHECK(cli::parse_grid("0:0.5:60").back() == 60.0);
    CHECK(cli::parse_grid("1,2.5,4") == std::vector<double>{1.0, 2.5, 4.0});
    auto lg = cli::parse_grid("log:1e-8:1e-1:100");
    CHECK(lg.size() == 100);
    CHECK(lg.front() == 1e-8);
    CHECK(lg.back() == 1e-1);
    auto db = cli::parse_grid("0:10:20db");
    CHECK(db[0] == doctest::Approx(1.0));
    CHECK(db[1] == doctest::Approx(10.0));
    CHECK(db[2] == doctest::Approx(100.0));
    CHECK(cli::parse_level("3dB") == doctest::Approx(1.9952623149688795));
    CHECK(cli::parse_level("7") == 7.0);
    CHECK_THROWS_AS(cli::parse_grid("1:0:2"), DomainError);
    CHECK_THROWS_AS(cli::parse_grid("abc"), DomainError);
    CHECK_THROWS_AS(cli::parse_grid("log:0:1:5"), DomainError);
    CHECK_THROWS_AS(cli::parse_grid("1,,2"), DomainError);
}

TEST_CASE("key-value documents") {
    std::istringstream is("# comment\ncommand = zero-rate\n\n[args]\nm = 256  # trailing\nname = \"a b\"\n");
    auto doc = cli::parse_key_value(is);
    CHECK(doc.top.at("command") == "zero-rate");
    CHECK(doc.sections.at("args").at("m") == "256");
    CHECK(doc.sections.at("args").at("name") == "a b");
    std::istringstream bad("[args\n");
    CHECK_THROWS_AS(cli::parse_key_value(bad), DomainError);
    std::istringstream noeq("just words\n");
    CHECK_THROWS_AS(cli::parse_key_value(noeq), DomainError);
}

TEST_CASE("manifest digest ignores the output path and tracks parameters") {
    cli::RunManifest a{"zero-rate", {{"m", "256"}, {"out", "x.csv"}}, "1.0.0", {}, "t1"};
    cli::RunManifest b{"zero-rate", {{"m", "256"}, {"out", "y.csv"}}, "1.0.0", {}, "t2"};
    cli::RunManifest c{"zero-rate", {{"m", "128"}, {"out", "x.csv"}}, "1.0.0", {}, "t1"};
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
    std::istringstream is(a.to_text());
    auto doc = cli::parse_key_value(is);
    CHECK(doc.top.at("digest") == a.digest());
    CHECK(doc.sections.at("args").at("m") == "256");
}

TEST_CASE("CSV round-trips every double exactly") {
    cli::Table t{"pme.test/1", {"x", "y"}, {{0.1, 1.0 / 3.0}, {1e-300, -2.5}, {NAN, INFINITY}}, {{"k", "v"}}};
    std::ostringstream os;
    cli::write_csv(os, t, {"test", {}, "1", {}, ""});
    auto back = parse(os.str());
    CHECK(back.schema == "pme.test/1");
    CHECK(back.columns == t.columns);
    REQUIRE(back.rows.size() == 3);
    CHECK(back.rows[0] == t.rows[0]);
    CHECK(back.rows[1] == t.rows[1]);
    CHECK(std::isnan(back.rows[2][0]));
    CHECK(std::isinf(back.rows[2][1]));
    CHECK(os.str().rfind("# schema: pme.test/1\n", 0) == 0);
}

TEST_CASE("zero-rate command") {
    auto r = run("zero-rate --m 256 --e-grid 0:0.5:60 --mu 1e-3");
    REQUIRE(r.code == 0);
    auto t = parse(r.out);
    CHECK(t.schema == "pme.zero_rate/1");
    CHECK(t.rows.size() == 121);
    CHECK(t.columns == std::vector<std::string>{"e_over_n", "e_db", "shannon_zr", "polyanskiy_zr", "simplex_exact"});
    auto one = parse(run("zero-rate --m 1 --e-grid 0:1:5").out);
    for (const auto& row : one.rows) CHECK(row[2] == 0.0);
    auto db = parse(run("zero-rate --m 4 --e-grid 10db").out);
    CHECK(db.rows.at(0).at(0) == doctest::Approx(10.0));
}

TEST_CASE("exit codes") {
    CHECK(run("zero-rate --m x").code == 2);
    CHECK(run("zero-rate --bogus 1").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("zero-rate --m 0").code == 2);
    CHECK(run("mac-exponents --backends nope").code == 2);
    CHECK(run("single-mse --e-grid 1 --tail-tol 1e-300").code == 3);
    CHECK(run("--version").code == 0);
}

TEST_CASE("outputs carry a manifest and replay byte-for-byte") {
    auto dir = scratch_dir();
    auto out = dir / "zr.csv";
    REQUIRE(run("zero-rate --m 64 --e-grid 0:2:30 --out " + out.string()).code == 0);
    REQUIRE(fs::exists(out.string() + ".manifest"));
    auto replay = dir / "zr_replay.csv";
    REQUIRE(run("recipe " + out.string() + ".manifest --out " + replay.string()).code == 0);
    CHECK(slurp(out) == slurp(replay));

    auto sim = dir / "sim.csv";
    REQUIRE(run("simulate --m 8 --e-grid 4,8 --trials 20000 --seed 5 --streams 4 --out " + sim.string()).code == 0);
    auto sim_replay = dir / "sim_replay.csv";
    REQUIRE(run("recipe " + sim.string() + ".manifest --out " + sim_replay.string()).code == 0);
    CHECK(slurp(sim) == slurp(sim_replay));
    auto threads = run("simulate --m 8 --e-grid 4,8 --trials 20000 --seed 5 --streams 4");
    auto one_thread = Run{};
    {
        setenv("PME_THREADS", "1", 1);
        one_thread = run("simulate --m 8 --e-grid 4,8 --trials 20000 --seed 5 --streams 4");
        unsetenv("PME_THREADS");
    }
    CHECK(threads.out == one_thread.out);
    CHECK(slurp(sim.string() + ".manifest").find("seeds = 5") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("JSON mirror") {
    auto r = run("single-exponent --snr-grid 1,2 --format json");
    REQUIRE(r.code == 0);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j["schema"] == "pme.single_exponent/1");
    CHECK(j["rows"].size() == 2);
    CHECK(j["columns"][2] == "sp_value");
    CHECK(j["manifest"]["command"] == "single-exponent");
}

TEST_CASE("simulation column appears only on request") {
    auto plain = parse(run("single-mse --e-grid 0,4").out);
    CHECK(plain.columns.size() == 7);
    auto sim = parse(run("single-mse --e-grid 0,4 --simulate trials=2000,seed=1").out);
    REQUIRE(sim.columns.size() == 9);
    CHECK(sim.columns[7] == "simulated");
    CHECK(run("single-mse --e-grid 0 --simulate trials=0").code == 2);
    CHECK(run("single-mse --e-grid 0 --simulate foo=1").code == 2);
}

TEST_CASE("region commands emit one block per SNR") {
    auto mr = parse(run("mac-region --snr 1,4 --mse2-grid 1e-6,1e-3 --theta-points 8 --theta-max-denominator 2 "
                        "--theta-max-reciprocal 2")
                        .out);
    CHECK(mr.rows.size() == 4);
    CHECK(mr.rows[2][0] == 4.0);
    auto me = parse(run("mac-exponents --snr 1 --eps-grid 0,0.2,0.9 --backends divergence,sphere_packing").out);
    REQUIRE(me.rows.size() == 3);
    CHECK(me.columns.size() == 10);
    CHECK(me.rows[0][2] >= me.rows[0][6]);
    CHECK(me.rows[2][4] == 1.0);  // eps2 = 0.9 lies beyond F_1
}

TEST_CASE("figure recipes name valid commands") {
    for (int k = 1; k <= 4; ++k) {
        auto doc = cli::parse_key_value_file(std::string(PME_RECIPE_DIR) + "/fig" + std::to_string(k) + ".recipe");
        CHECK(doc.top.count("command") == 1);
        CHECK(doc.sections.count("args") == 1);
    }
    auto dir = scratch_dir();
    auto out = dir / "fig1.csv";
    REQUIRE(run("recipe " + std::string(PME_RECIPE_DIR) + "/fig1.recipe --out " + out.string()).code == 0);
    auto t = parse(slurp(out));
    CHECK(t.rows.size() == 201);
    fs::remove_all(dir);
}
