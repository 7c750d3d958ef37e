#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run run(const std::string& args) {
    const auto tmp = fs::temp_directory_path() / "qroute_cli_stdout.txt";
    const std::string cmd = std::string(QROUTE_CLI) + " " + args + " > " + tmp.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(tmp);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

class CliTest : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / "qroute_cli_test";
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ASSERT_EQ(run("synth --seed 3 --per-label 20 --noise 0 --out " + dir_.string()).code, 0);
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }
    static std::string data() { return (dir_ / "synthetic.jsonl").string(); }
    static fs::path dir_;
};

fs::path CliTest::dir_;

} // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("eval --data " + data() + " --k 5 --out " + (dir_ / "e").string()).code, 2);  // no seed
    EXPECT_EQ(run("eval --data /nonexistent.jsonl --seed 1").code, 2);
    EXPECT_EQ(run("eval --data " + data() + " --seed 1 --k 1").code, 2);
    EXPECT_EQ(run("eval --data " + data() + " --seed 1 --classifier boosting").code, 2);
    EXPECT_EQ(run("eval --data " + data() + " --seed 1 --regime embedding").code, 2);
    EXPECT_EQ(run("grid --data " + data() + " --seed 1").code, 2);
    EXPECT_EQ(run("route --model /nonexistent.json hello").code, 2);
    EXPECT_EQ(run("serve --model /nonexistent.json").code, 2);
    const auto r = run("eval --data " + data() + " --seed 1 --k 1");
    EXPECT_NE(r.out.find("usage error"), std::string::npos) << r.out;
}

TEST_F(CliTest, DataErrorsExitOne) {
    const auto bad = (dir_ / "bad.jsonl").string();
    std::ofstream(bad) << "{\"id\": \"a\", \"query\": \"x\", \"label\": \"factual\", \"domain\": \"wiki\"}\n";
    EXPECT_EQ(run("eval --data " + bad + " --seed 1").code, 1);
    const auto not_model = (dir_ / "notmodel.json").string();
    std::ofstream(not_model) << "{}";
    EXPECT_EQ(run("route --model " + not_model + " hello").code, 1);
}

TEST_F(CliTest, EvalTrainRouteCost) {
    const auto out = (dir_ / "eval").string();
    auto r = run("eval --data " + data() + " --seed 2 --classifier knn --out " + out);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("macro_f1 "), std::string::npos);
    for (const char* f : {"report.json", "predictions.csv", "table1.txt", "table1.csv", "table2.txt", "table2.csv",
                          "table3.txt", "table3.csv"})
        EXPECT_TRUE(fs::exists(fs::path(out) / f)) << f;

    r = run("cost --predictions " + out + "/predictions.csv");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("Perfect-label"), std::string::npos);

    const auto mdir = (dir_ / "model").string();
    r = run("train-full --data " + data() + " --seed 2 --classifier logreg --out " + mdir);
    ASSERT_EQ(r.code, 0) << r.out;
    r = run("route --model " + mdir + "/model.json \"Summarize the main findings of the corpus\" \"Who wrote it?\"");
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream lines(r.out);
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_TRUE(j.contains("label"));
        ++n;
    }
    EXPECT_EQ(n, 2);
    EXPECT_EQ(run("route --model " + mdir + "/model.json \"  \"").code, 2);
}
