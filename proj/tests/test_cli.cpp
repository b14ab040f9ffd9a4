#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sys/wait.h>
#include <unistd.h>
#include <json.hpp>
#include <sstream>
#include <string>

namespace {

using nlohmann::json;

struct RunResult {
    int code = -1;
    std::string out;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const std::string& args) {
    static int counter = 0;
    const std::string out_path =
        "/tmp/urnlab_cli_test_" + std::to_string(getpid()) + "_" + std::to_string(counter++);
    const std::string cmd =
        std::string(URNLAB_CLI_PATH) + " " + args + " > " + out_path + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    std::remove(out_path.c_str());
    return r;
}

std::string spec(const std::string& name) {
    return std::string(URNLAB_SPEC_DIR) + "/" + name;
}

void check_required(const json& doc, const std::string& schema_name) {
    const json schema = json::parse(slurp(std::string(URNLAB_SCHEMA_DIR) + "/" + schema_name));
    for (const auto& field : schema.at("required"))
        CHECK(doc.contains(field.get<std::string>()));
}

std::string write_temp_spec(const json& j) {
    static int counter = 0;
    const std::string path = "/tmp/urnlab_spec_" + std::to_string(getpid()) + "_" +
                             std::to_string(counter++) + ".json";
    std::ofstream out(path);
    out << j.dump(2);
    return path;
}

} // namespace

TEST_CASE("validate: clean spec exits 0 with a schema-shaped report") {
    RunResult r = run("validate --spec " + spec("small_diag.json"));
    CHECK(r.code == 0);
    const json doc = json::parse(r.out);
    check_required(doc, "validation_report.schema.json");
    CHECK(doc.at("ok").get<bool>());
    CHECK(doc.at("irreducible").get<bool>());
}

TEST_CASE("validate: broken balance exits 1 and lists the violation") {
    json j = json::parse(slurp(spec("small_diag.json")));
    j["core"][1][0] = 3; // row sum 17 != 16
    const std::string path = write_temp_spec(j);
    RunResult r = run("validate --spec " + path);
    std::remove(path.c_str());
    CHECK(r.code == 1);
    const json doc = json::parse(r.out);
    CHECK_FALSE(doc.at("ok").get<bool>());
    CHECK_FALSE(doc.at("violations").empty());
}

TEST_CASE("missing and malformed spec files exit 2") {
    CHECK(run("validate --spec /tmp/does_not_exist_urnlab.json").code == 2);
    const std::string path = write_temp_spec(json::object());
    std::ofstream(path) << "{ not json";
    CHECK(run("classify --spec " + path).code == 2);
    std::remove(path.c_str());
}

TEST_CASE("expand reproduces the canonical ten-row table") {
    RunResult r = run("expand --spec " + spec("example1.json"));
    REQUIRE(r.code == 0);
    const std::string expected =
        "sample,m_1,m_2,m_3\n"
        "300,3,3,3\n"
        "210,4,2,3\n"
        "201,2,2,5\n"
        "120,5,1,3\n"
        "111,3,1,5\n"
        "102,1,1,7\n"
        "030,6,0,3\n"
        "021,4,0,5\n"
        "012,2,0,7\n"
        "003,0,0,9\n";
    CHECK(r.out == expected);
}

TEST_CASE("expand rejects a non-integral core with exit 3") {
    json j = {{"k", 2},
              {"s", 2},
              {"b", 2},
              {"core", {{1, 1}, {2, 0}}},
              {"x0", {4, 4}},
              {"mode", "without_replacement"}};
    const std::string path = write_temp_spec(j);
    RunResult r = run("expand --spec " + path);
    std::remove(path.c_str());
    CHECK(r.code == 3);
}

TEST_CASE("classify reports the regime and index") {
    RunResult r = run("classify --spec " + spec("critical.json"));
    REQUIRE(r.code == 0);
    const json doc = json::parse(r.out);
    check_required(doc, "classify.schema.json");
    CHECK(doc.at("regime") == "critical");
    CHECK(std::abs(doc.at("index").get<double>() - 0.5) < 1e-12);

    const json large = json::parse(run("classify --spec " + spec("large.json")).out);
    CHECK(large.at("regime") == "large");
    const json small = json::parse(run("classify --spec " + spec("small_jordan.json")).out);
    CHECK(small.at("regime") == "small");
    CHECK(small.at("nu2").get<int>() == 2);
}

TEST_CASE("moments CSV carries the exact one-step mean") {
    RunResult r = run("moments --spec " + spec("small_diag.json") + " --n 1");
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, row0, row1;
    std::getline(lines, header);
    std::getline(lines, row0);
    std::getline(lines, row1);
    CHECK(header.rfind("n,", 0) == 0);
    CHECK(row0.rfind("0,4,3,5", 0) == 0);
    // mu_1 = (49/6, 25/3, 23/2)
    std::istringstream cells(row1);
    std::string cell;
    std::getline(cells, cell, ',');
    CHECK(cell == "1");
    double mu[3];
    for (double& m : mu) {
        std::getline(cells, cell, ',');
        m = std::stod(cell);
    }
    CHECK(std::abs(mu[0] - 49.0 / 6.0) < 1e-12);
    CHECK(std::abs(mu[1] - 25.0 / 3.0) < 1e-12);
    CHECK(std::abs(mu[2] - 23.0 / 2.0) < 1e-12);
}

TEST_CASE("asymptotics emits the limit matrices for each regime") {
    const json small = json::parse(run("asymptotics --spec " + spec("small_diag.json")).out);
    check_required(small, "asymptotics.schema.json");
    REQUIRE(small.contains("sigma_inf"));
    CHECK(std::abs(small.at("sigma_inf")[0][0].get<double>() - 5552.0 / 3025.0) < 1e-8);

    const json large = json::parse(run("asymptotics --spec " + spec("large.json")).out);
    CHECK_FALSE(large.contains("sigma_inf"));
    CHECK_FALSE(large.at("sigma_inf_note").get<std::string>().empty());
}

TEST_CASE("simulate is deterministic for a fixed seed and honors overrides") {
    const std::string args = "simulate --spec " + spec("critical.json") +
                             " --n 50 --reps 8 --seed 42";
    RunResult a = run(args);
    RunResult b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const json doc = json::parse(a.out);
    check_required(doc, "simulate.schema.json");
    CHECK(doc.at("reps").get<long long>() == 8);

    RunResult c = run(args + " --mode with_replacement");
    CHECK(json::parse(c.out).at("mode") == "with_replacement");
    CHECK(c.out != a.out);

    RunResult bad = run(args + " --mode bogus");
    CHECK(bad.code == 3);
}

TEST_CASE("verify exits 0 on an honest run and 5 when starved") {
    RunResult good = run("verify --spec " + spec("small_diag.json") +
                         " --n 2000 --reps 3000 --seed 7");
    CHECK(good.code == 0);
    const json doc = json::parse(good.out);
    check_required(doc, "verify.schema.json");
    CHECK(doc.at("all_ok").get<bool>());

    // a tiny horizon is far from the limit law: must be reported, exit 5
    RunResult bad = run("verify --spec " + spec("small_diag.json") +
                        " --n 5 --reps 64 --seed 7");
    CHECK(bad.code == 5);
}
