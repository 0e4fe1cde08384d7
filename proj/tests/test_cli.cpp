#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#ifndef CL_CLI_PATH
#error "CL_CLI_PATH must point at the command-line binary"
#endif

using nlohmann::json;

namespace {

struct run_result {
    int exit_code = -1;
    std::string out;
};

/// Run the CLI with the given argument string, capturing stdout.
run_result run_cli(const std::string& args, bool keep_stderr = false) {
    const std::string cmd =
        std::string(CL_CLI_PATH) + " " + args + (keep_stderr ? " 2>&1" : " 2>/dev/null");
    run_result res;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return res;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) res.out.append(buf, got);
    const int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> lines;
    std::istringstream in(s);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

} // namespace

TEST(Cli, DistCsvExactRows) {
    const auto res = run_cli("dist --sizes 2,2 --r 2 --mode K1 --k-max 4 --format csv");
    EXPECT_EQ(res.exit_code, 0);
    EXPECT_EQ(res.out,
              "k,survival,survival_float\n"
              "0,1,1\n"
              "1,1,1\n"
              "2,2/3,0.666666666666667\n"
              "3,0,0\n"
              "4,0,0\n");
}

TEST(Cli, ExpectJsonClassicalTriple) {
    const auto res = run_cli("expect --classical 365 --r 3 --mode R --format json");
    ASSERT_EQ(res.exit_code, 0);
    const json doc = json::parse(res.out);
    EXPECT_EQ(doc.at("request").at("command"), "expect");
    EXPECT_TRUE(doc.at("result").at("exact").get<bool>());
    EXPECT_NEAR(doc.at("result").at("value").get<double>(), 88.7389176506049, 1e-9);
}

TEST(Cli, RequestArgvRoundTrip) {
    const std::string args = "expect --sizes 4,3,2 --r 2 --mode K2 --format json";
    const auto first = run_cli(args);
    ASSERT_EQ(first.exit_code, 0);
    const json doc = json::parse(first.out);
    std::string rebuilt;
    for (const auto& tok : doc.at("request").at("argv")) {
        if (!rebuilt.empty()) rebuilt += ' ';
        rebuilt += tok.get<std::string>();
    }
    const auto second = run_cli(rebuilt);
    ASSERT_EQ(second.exit_code, 0);
    EXPECT_EQ(first.out, second.out);
}

TEST(Cli, VerifySmallBattery) {
    const auto res = run_cli("verify --battery small", true);
    EXPECT_EQ(res.exit_code, 0);
    EXPECT_NE(res.out.find("0 failures"), std::string::npos);
}

TEST(Cli, ValidationFailuresExitTwo) {
    EXPECT_EQ(run_cli("dist --r 2 --mode K1 --k-max 3").exit_code, 2);
    EXPECT_EQ(run_cli("dist --sizes 2,2 --classical 10 --r 2 --mode K1 --k-max 3").exit_code, 2);
    EXPECT_EQ(run_cli("dist --sizes 2,2 --r 2 --mode Q --k-max 3").exit_code, 2);
    EXPECT_EQ(run_cli("dist --sizes 1,1 --r 2 --mode K1 --k-max 3").exit_code, 2);
    EXPECT_EQ(run_cli("dist --sizes 2,2 --r 2 --mode K1").exit_code, 2);
    EXPECT_EQ(run_cli("frobnicate --sizes 2,2").exit_code, 2);
    EXPECT_EQ(run_cli("expect --sizes 2,2 --r 2 --mode K1 --method series").exit_code, 2);
    // csv is a tabular format; scalar commands must refuse it rather than
    // silently emitting the structured report.
    EXPECT_EQ(run_cli("expect --classical 10 --r 2 --mode R --format csv").exit_code, 2);
}

TEST(Cli, ResourceLimitExitsThree) {
    const auto res = run_cli("dist --classical 2 --r 2 --mode R --k-max 6000000");
    EXPECT_EQ(res.exit_code, 3);
}

TEST(Cli, CsvAndJsonAgreeNumerically) {
    const std::string query = "dist --sizes 5,4,3 --r 3 --mode K2 --k-max 12";
    const auto csv = run_cli(query + " --format csv");
    const auto js = run_cli(query + " --format json");
    ASSERT_EQ(csv.exit_code, 0);
    ASSERT_EQ(js.exit_code, 0);
    const json doc = json::parse(js.out);
    const auto& rows = doc.at("result").at("survival");
    const auto lines = split_lines(csv.out);
    ASSERT_EQ(lines.size(), rows.size() + 1); // header + one line per k
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::string& line = lines[i + 1];
        const auto last_comma = line.rfind(',');
        const double csv_val = std::stod(line.substr(last_comma + 1));
        EXPECT_EQ(csv_val, rows[i].at("value").get<double>()) << "row " << i;
    }
}

TEST(Cli, WritesOutputFile) {
    const std::string path = "/tmp/collision_lab_cli_out_test.json";
    std::remove(path.c_str());
    const auto res = run_cli("measures --sizes 4,2,2 --r 2 --out " + path);
    EXPECT_EQ(res.exit_code, 0);
    std::ifstream in(path);
    ASSERT_TRUE(in.good());
    const json doc = json::parse(in);
    EXPECT_EQ(doc.at("result").at("chi2").at("rational"), "1");
    std::remove(path.c_str());
}

TEST(Cli, DecimalCommaArguments) {
    const auto res =
        run_cli("limits --sizes 2,1,1 --r 2 --kind type1_K1 --t-max 2,5 --t-steps 10 "
                "--format csv");
    ASSERT_EQ(res.exit_code, 0);
    const auto lines = split_lines(res.out);
    ASSERT_GE(lines.size(), 2u);
    EXPECT_EQ(lines.front(), "t,survival");
    EXPECT_EQ(lines.back().rfind("2.5,", 0), 0u) << lines.back();
}

TEST(Cli, SimulateDeterministicAndCsvShape) {
    const std::string query =
        "simulate --sizes 3,2,2 --r 2 --mode R --trials 20000 --seed 5 --format csv";
    const auto a = run_cli(query);
    const auto b = run_cli(query);
    ASSERT_EQ(a.exit_code, 0);
    EXPECT_EQ(a.out, b.out);
    const auto lines = split_lines(a.out);
    ASSERT_GE(lines.size(), 2u);
    EXPECT_EQ(lines.front(), "k,fraction_above");
}

TEST(Cli, ConfigurationFromFile) {
    const std::string path = "/tmp/collision_lab_cli_cfg_test.json";
    {
        std::ofstream out(path);
        out << "{\"sizes\": [2, 2]}\n";
    }
    const auto from_file =
        run_cli("dist --config-file " + path + " --r 2 --mode K1 --k-max 4 --format csv");
    const auto direct = run_cli("dist --sizes 2,2 --r 2 --mode K1 --k-max 4 --format csv");
    EXPECT_EQ(from_file.exit_code, 0);
    EXPECT_EQ(from_file.out, direct.out);

    {
        std::ofstream out(path);
        out << "this is not json\n";
    }
    EXPECT_EQ(run_cli("dist --config-file " + path + " --r 2 --mode K1 --k-max 4").exit_code, 2);
    std::remove(path.c_str());
}

TEST(Cli, MultinomialSource) {
    const auto res = run_cli(
        "dist --multinomial-n 4 --multinomial-p 1/2,1/2 --r 2 --mode K1 --k-max 2 "
        "--format json");
    ASSERT_EQ(res.exit_code, 0);
    const json doc = json::parse(res.out);
    const auto& rows = doc.at("result").at("survival");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[2].at("rational"), "1/2");
}
