#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

// End-to-end checks of the installed binary: headers, formatting, exit codes,
// flag interactions. Values themselves are covered by the unit suites, so the
// numeric assertions here are loose.

namespace {

struct RunResult {
    int status;
    std::string out;
};

RunResult run(const std::string& args) {
    const std::string cmd = std::string(CVQKD_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    size_t n = 0;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    const int rc = pclose(p);
    REQUIRE(rc != -1);
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, out};
}

using Row = std::vector<std::string>;

std::vector<Row> parse_csv(const std::string& s) {
    std::vector<Row> rows;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) {
        Row row;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        if (!line.empty() && line.back() == ',') row.push_back("");
        rows.push_back(row);
    }
    return rows;
}

size_t column(const Row& header, const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    FAIL("no column " + name);
    return 0;
}

const Row& row_at(const std::vector<Row>& rows, const std::string& key) {
    for (size_t i = 1; i < rows.size(); ++i)
        if (rows[i].at(0) == key) return rows[i];
    FAIL("no row with first cell " + key);
    return rows.front();
}

}  // namespace

TEST_CASE("keyrate breakdown") {
    SECTION("identity channel at full reconciliation") {
        const auto r = run("keyrate --beta 1 --eps 0");
        REQUIRE(r.status == 0);
        const auto rows = parse_csv(r.out);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0] == Row{"i_ab", "s_be", "nu1", "nu2", "nu3", "rate", "status"});
        CHECK(std::abs(std::stod(rows[1][column(rows[0], "rate")]) - 0.13415324321214711) < 1e-8);
        CHECK(rows[1][column(rows[0], "status")] == "Physical");
    }
    SECTION("zero modulation has zero mutual information") {
        const auto r = run("keyrate --va 0");
        REQUIRE(r.status == 0);
        const auto rows = parse_csv(r.out);
        CHECK(rows[1][0] == "0");
    }
    SECTION("NLA columns appear only with --gain") {
        const auto r = run("keyrate --loss-db 30 --gain 4");
        REQUIRE(r.status == 0);
        const auto rows = parse_csv(r.out);
        CHECK(rows[0] == Row{"i_ab", "s_be", "nu1", "nu2", "nu3", "rate", "status", "eta",
                             "eps_g", "g_max"});
        CHECK(std::abs(std::stod(rows[1][column(rows[0], "rate")]) - 4.2986426361972077e-5) <
              1e-12);
    }
    SECTION("unphysical mapping leaves the rate blank but reports the channel") {
        const auto r = run("keyrate --loss-db 1 --gain 4");
        REQUIRE(r.status == 0);
        const auto rows = parse_csv(r.out);
        REQUIRE(rows[1].size() == 10);
        CHECK(rows[1][column(rows[0], "status")] == "UnphysicalNlaMapping");
        CHECK(rows[1][column(rows[0], "rate")].empty());
        CHECK_FALSE(rows[1][column(rows[0], "eta")].empty());
        CHECK(std::stod(rows[1][column(rows[0], "g_max")]) < 4.0);
    }
    SECTION("--alpha2 and --va address the same quantity") {
        const auto a = run("keyrate --alpha2 0.125");
        const auto b = run("keyrate --va 0.25");
        REQUIRE(a.status == 0);
        CHECK(a.out == b.out);
        CHECK(run("keyrate --va 0.25 --alpha2 0.125").status == 2);
    }
    SECTION("distance is loss divided by attenuation") {
        const auto a = run("keyrate --distance-km 50 --beta 1 --eps 0");
        const auto b = run("keyrate --loss-db 10 --beta 1 --eps 0");
        REQUIRE(a.status == 0);
        CHECK(a.out == b.out);
        CHECK(run("keyrate --loss-db 1 --distance-km 5").status == 2);
    }
    SECTION("success probability rescales the rate only") {
        const auto def = run("keyrate --loss-db 30 --gain 4");
        const auto same = run("keyrate --loss-db 30 --gain 4 --psuccess 0.0625");
        CHECK(def.out == same.out);
        const auto unit = run("keyrate --loss-db 30 --gain 4 --psuccess 1");
        const auto rows_d = parse_csv(def.out);
        const auto rows_u = parse_csv(unit.out);
        const size_t rc = column(rows_d[0], "rate");
        CHECK(std::abs(std::stod(rows_u[1][rc]) - 16.0 * std::stod(rows_d[1][rc])) < 1e-11);
    }
}

TEST_CASE("sweep tables") {
    SECTION("deterministic output") {
        const auto a = run("sweep --grid 0:10:1");
        const auto b = run("sweep --grid 0:10:1");
        REQUIRE(a.status == 0);
        CHECK(a.out == b.out);
        const auto rows = parse_csv(a.out);
        REQUIRE(rows.size() == 12);
        CHECK(rows[0] == Row{"loss_db", "rate_original", "rate_nla", "eta", "eps_g"});
    }
    SECTION("unit gain reproduces the original column") {
        const auto rows = parse_csv(run("sweep --gain 1 --grid 0:10:2").out);
        for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] == rows[i][2]);
    }
    SECTION("amplification extends the positive-rate window") {
        const auto rows = parse_csv(run("sweep --grid 50:70:10").out);
        CHECK(std::stod(row_at(rows, "50")[1]) > 0.0);
        CHECK(std::stod(row_at(rows, "60")[1]) < 0.0);
        CHECK(std::stod(row_at(rows, "60")[2]) > 0.0);
        CHECK(std::stod(row_at(rows, "70")[2]) < 0.0);
    }
    SECTION("distance axis") {
        const auto rows = parse_csv(run("sweep --axis distance --grid 0:100:25").out);
        REQUIRE(rows.size() == 6);
        CHECK(rows[0][0] == "distance_km");
        CHECK(row_at(rows, "100").size() == 5);
    }
    SECTION("rows below the physical window leave the NLA cell blank") {
        const auto rows = parse_csv(run("sweep --grid 0:10:5 --gain 4").out);
        for (size_t i = 1; i < rows.size(); ++i) {
            CHECK(rows[i][2].empty());
            CHECK_FALSE(rows[i][1].empty());
            CHECK_FALSE(rows[i][3].empty());
        }
    }
}

TEST_CASE("gmax tables") {
    SECTION("noiseless value at T = 1/4") {
        const auto rows = parse_csv(run("gmax --eps 0 --grid 6.0206:6.0206:1").out);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0] == Row{"loss_db", "g_max"});
        CHECK(std::abs(std::stod(rows[1][1]) - 2.0) < 1e-5);
    }
    SECTION("monotone in loss") {
        const auto rows = parse_csv(run("gmax --eps 0.02 --grid 0:30:0.5").out);
        REQUIRE(rows.size() == 62);
        double prev = 0.0;
        for (size_t i = 1; i < rows.size(); ++i) {
            const double g = std::stod(rows[i][1]);
            CHECK(g > prev);
            prev = g;
        }
        CHECK(std::abs(std::stod(row_at(rows, "10")[1]) - 3.1343727961012881) < 1e-6);
    }
}

TEST_CASE("frontier tables") {
    SECTION("amplified frontier dominates") {
        const auto r = run("frontier --grid 20:30:5 --tol 1e-5");
        REQUIRE(r.status == 0);
        const auto rows = parse_csv(r.out);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0] == Row{"loss_db", "eps_max_original", "eps_max_nla"});
        for (size_t i = 1; i < rows.size(); ++i)
            CHECK(std::stod(rows[i][2]) >= std::stod(rows[i][1]) - 1e-12);
    }
    SECTION("tolerance controls the answer to its own scale") {
        const auto a = parse_csv(run("frontier --grid 25:25:1 --tol 1e-5").out);
        const auto b = parse_csv(run("frontier --grid 25:25:1 --tol 5e-6").out);
        CHECK(std::abs(std::stod(a[1][1]) - std::stod(b[1][1])) < 1e-5);
        CHECK(std::abs(std::stod(a[1][2]) - std::stod(b[1][2])) < 1e-5);
    }
    SECTION("past the unamplified cutoff") {
        const auto rows = parse_csv(run("frontier --grid 92:96:4 --tol 1e-5").out);
        for (const auto key : {"92", "96"}) {
            CHECK(row_at(rows, key)[1] == "0");
            CHECK(std::stod(row_at(rows, key)[2]) > 0.0);
        }
    }
}

TEST_CASE("verify subcommand") {
    SECTION("default checks pass") {
        const auto r = run("verify");
        REQUIRE(r.status == 0);
        const auto rows = parse_csv(r.out);
        REQUIRE(rows.size() == 11);
        CHECK(rows[0] == Row{"check", "deviation", "tolerance", "result"});
        for (size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][3] == "pass");
    }
    SECTION("inadequate cutoff fails loudly") {
        CHECK(run("verify --cutoff 4 --alpha2 1").status == 1);
    }
    SECTION("divergent amplification fails loudly") {
        CHECK(run("verify --lambda2 0.3 --gain 2").status == 1);
    }
}

TEST_CASE("exit codes and i/o plumbing") {
    SECTION("usage errors exit 2") {
        CHECK(run("keyrate --no-such-flag 1").status == 2);
        CHECK(run("sweep --grid 5:0:1").status == 2);
        CHECK(run("sweep --grid 0:10:-1").status == 2);
        CHECK(run("sweep --axis banana").status == 2);
        CHECK(run("").status == 2);
        CHECK(run("keyrate --loss-db 30 --gain 4 --psuccess 1.5").status == 2);
        CHECK(run("keyrate --loss-db 30 --gain 4 --psuccess abc").status == 2);
    }
    SECTION("help exits 0") {
        CHECK(run("--help").status == 0);
        CHECK(run("keyrate --help").status == 0);
    }
    SECTION("--output writes the same bytes as stdout") {
        const std::string path = "/tmp/cvqkd_cli_test_out.csv";
        std::remove(path.c_str());
        const auto direct = run("keyrate --beta 1 --eps 0");
        const auto filed = run("keyrate --beta 1 --eps 0 --output " + path);
        REQUIRE(filed.status == 0);
        CHECK(filed.out.empty());
        std::ifstream f(path, std::ios::binary);
        REQUIRE(f.good());
        std::stringstream ss;
        ss << f.rdbuf();
        CHECK(ss.str() == direct.out);
        std::remove(path.c_str());
    }
    SECTION("config file supplies defaults, flags win") {
        const std::string path = "/tmp/cvqkd_cli_test_cfg.toml";
        {
            std::ofstream f(path);
            f << "va = 0.3\n";
        }
        const auto from_cfg = run("keyrate --config " + path);
        const auto from_flag = run("keyrate --va 0.3");
        REQUIRE(from_cfg.status == 0);
        CHECK(from_cfg.out == from_flag.out);
        const auto overridden = run("keyrate --config " + path + " --va 0.25");
        CHECK(overridden.out == run("keyrate --va 0.25").out);
        // --alpha2 sets the same quantity, so the file's va entry must yield
        const auto partner = run("keyrate --config " + path + " --alpha2 0.15");
        CHECK(partner.out == run("keyrate --alpha2 0.15").out);
        std::remove(path.c_str());
    }
    SECTION("config sections scope keys to one subcommand") {
        const std::string path = "/tmp/cvqkd_cli_test_cfg2.toml";
        {
            std::ofstream f(path);
            f << "beta = 1\n[keyrate]\neps = 0\n[sweep]\ngrid = \"0:10:5\"\n";
        }
        const auto cfg = run("keyrate --config " + path);
        REQUIRE(cfg.status == 0);
        CHECK(cfg.out == run("keyrate --beta 1 --eps 0").out);
        std::remove(path.c_str());
    }
    SECTION("bad config input is a usage error") {
        const std::string path = "/tmp/cvqkd_cli_test_cfg3.toml";
        {
            std::ofstream f(path);
            f << "not-a-flag = 1\n";
        }
        CHECK(run("keyrate --config " + path).status == 2);
        CHECK(run("keyrate --config /nonexistent/cfg.toml").status == 2);
        std::remove(path.c_str());
    }
}
