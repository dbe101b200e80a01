#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Outcome cli(const std::string& args) {
    const std::string cmd = std::string(TWINNN_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, ""};
    std::string out;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const fs::path& p) {
    const std::string s = slurp(p);
    return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("twinnn_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write(const std::string& name, const std::string& text) const {
        std::ofstream(dir_ / name) << text;
        return path(name);
    }

    // Small imbalanced two-class file with a header.
    std::string blobs() const {
        const auto r = cli("gen-imbalance --minority 20 --majority 120 --separation 5 --seed 2 --out " + path("b.csv"));
        EXPECT_EQ(r.code, 0) << r.out;
        return path("b.csv");
    }

    std::string three_classes() const {
        std::ostringstream os;
        const double cx[3] = {0, -4, 4}, cy[3] = {4, -3, -3};
        for (int i = 0; i < 90; ++i) {
            const int c = i % 3;
            const double a = 0.37 * i, r = 0.2 + 0.01 * (i % 50);
            os << cx[c] + r * std::cos(a) << ',' << cy[c] + r * std::sin(a) << ",class" << c << '\n';
        }
        return write("three.csv", os.str());
    }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, NoSubcommandIsUsageError) { EXPECT_EQ(cli("").code, 2); }

TEST_F(Cli, HelpExitsZero) {
    const auto r = cli("cv --help");
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("--grid"), std::string::npos);
    EXPECT_NE(r.out.find("--positive-class"), std::string::npos);
}

TEST_F(Cli, UnknownFlagOrBadFormatIsUsageError) {
    const auto b = blobs();
    EXPECT_EQ(cli("cv --data " + b + " --bogus").code, 2);
    EXPECT_EQ(cli("cv --data " + b + " --format arff").code, 2);
    EXPECT_EQ(cli("cv --data " + b + " --header --model svm").code, 2);
    EXPECT_EQ(cli("cv --data " + b + " --header --grid gamma=1").code, 2);
    EXPECT_EQ(cli("cv --data " + b + " --header --grid c_plus").code, 2);
    EXPECT_EQ(cli("cv --data " + b + " --header --folds 1").code, 2);
}

TEST_F(Cli, MissingFileIsDataError) {
    const auto r = cli("cv --data " + path("absent.csv"));
    EXPECT_EQ(r.code, 3);
    EXPECT_NE(r.out.find("data error"), std::string::npos);
}

TEST_F(Cli, MalformedCsvIsDataError) {
    const auto f = write("bad.csv", "1,2,a\n1,x,b\n");
    EXPECT_EQ(cli("cv --data " + f).code, 3);
}

TEST_F(Cli, EveryRunDivergingIsNumericalFailure) {
    const auto r = cli("cv --data " + blobs() + " --header --folds 2 --grid lr=1e300");
    EXPECT_EQ(r.code, 4);
    EXPECT_NE(r.out.find("diverged"), std::string::npos);
}

TEST_F(Cli, GenImbalanceSynthetic) {
    const auto r = cli("gen-imbalance --minority 50 --majority 1000 --seed 1 --out " + path("g.csv"));
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(line_count(path("g.csv")), 1051u);
    EXPECT_NE(r.out.find("50 positive"), std::string::npos);
}

TEST_F(Cli, GenImbalanceFromData) {
    const auto f = three_classes();
    const auto r = cli("gen-imbalance --data " + f + " --positive-class class1 --out " + path("ovr.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto text = slurp(path("ovr.csv"));
    EXPECT_EQ(std::count(text.begin(), text.end(), 'r'), 60);  // "rest" once per row
    EXPECT_EQ(cli("gen-imbalance --data " + f + " --out " + path("x.csv")).code, 2);
    EXPECT_EQ(cli("gen-imbalance --data " + f + " --positive-class nope --out " + path("x.csv")).code, 3);
}

TEST_F(Cli, CvWritesSchemaAndIsByteReproducible) {
    const auto b = blobs();
    const std::string args = "cv --data " + b + " --header --folds 3 --repeats 2 --seed 5 --grid epochs=300 --grid c_minus=1,4";
    const auto r1 = cli(args + " --out " + path("r1.json"));
    ASSERT_EQ(r1.code, 0) << r1.out;
    ASSERT_EQ(cli(args + " --out " + path("r2.json")).code, 0);
    EXPECT_EQ(slurp(path("r1.json")), slurp(path("r2.json")));
    const auto j = nlohmann::json::parse(slurp(path("r1.json")));
    EXPECT_EQ(j.at("schema"), "twinnn.result/1");
    EXPECT_EQ(j.at("runs").size(), 6u);
    EXPECT_EQ(j.at("positive_class"), "1");
    EXPECT_NE(r1.out.find("gmeans"), std::string::npos);
    EXPECT_NE(r1.out.find("±"), std::string::npos);
}

TEST_F(Cli, CvSelectionMetric) {
    const std::string args = "cv --data " + blobs() + " --header --folds 2 --seed 5 --grid epochs=100";
    ASSERT_EQ(cli(args + " --select acc --out " + path("s.json")).code, 0);
    EXPECT_EQ(nlohmann::json::parse(slurp(path("s.json"))).at("select"), "acc");
    EXPECT_EQ(cli(args + " --select auc").code, 2);
}

TEST_F(Cli, TrainThenPredict) {
    const auto b = blobs();
    const auto t = cli("train --data " + b + " --header --grid epochs=400 --seed 3 --out " + path("m.json"));
    ASSERT_EQ(t.code, 0) << t.out;
    EXPECT_NE(t.out.find("positive class '1'"), std::string::npos);
    const auto p = cli("predict --data " + b + " --header --model-file " + path("m.json") + " --out " + path("p.csv"));
    ASSERT_EQ(p.code, 0) << p.out;
    EXPECT_EQ(line_count(path("p.csv")), 141u);
    EXPECT_NE(p.out.find("accuracy"), std::string::npos);
    EXPECT_EQ(cli("train --data " + b + " --header --grid c_plus=1,2 --out " + path("m2.json")).code, 2);
}

TEST_F(Cli, PredictRejectsWidthMismatchAndBadModelFile) {
    const auto b = blobs();
    ASSERT_EQ(cli("train --data " + b + " --header --model twsvm_linear --out " + path("m.json")).code, 0);
    const auto wide = write("wide.csv", "1,2,3,a\n4,5,6,b\n");
    EXPECT_EQ(cli("predict --data " + wide + " --model-file " + path("m.json")).code, 3);
    const auto junk = write("junk.json", "{\"schema\": \"other\"}");
    EXPECT_EQ(cli("predict --data " + b + " --header --model-file " + junk).code, 3);
}

TEST_F(Cli, MulticlassAndOneVsRestModels) {
    const auto f = three_classes();
    for (const std::string model : {"twin_nn_mc", "twin_nn", "twsvm_rbf"}) {
        const auto t = cli("train --data " + f + " --model " + model + " --out " + path("m.json"));
        ASSERT_EQ(t.code, 0) << model << ": " << t.out;
        const auto p = cli("predict --data " + f + " --model-file " + path("m.json"));
        ASSERT_EQ(p.code, 0) << p.out;
        EXPECT_NE(p.out.find("class2"), std::string::npos);
        EXPECT_NE(p.out.find("accuracy 1.0000"), std::string::npos) << model << ": " << p.out.substr(p.out.size() - 40);
    }
    const auto cv = cli("cv --data " + f + " --folds 3 --grid epochs=300 --out " + path("ovr.json"));
    ASSERT_EQ(cv.code, 0) << cv.out;
    EXPECT_EQ(nlohmann::json::parse(slurp(path("ovr.json"))).at("mode"), "onevsrest");
    EXPECT_NE(cv.out.find("confusion"), std::string::npos);
}

TEST_F(Cli, MissingValuesTrainPredictAndImpute) {
    std::ostringstream os;
    for (int i = 0; i < 40; ++i) {
        const bool pos = i % 4 == 0;
        const double x = (pos ? 2.0 : -2.0) + 0.05 * (i % 7), y = 0.1 * (i % 5);
        if (i % 9 == 3)
            os << "," << y;
        else
            os << x << "," << y;
        os << "," << (pos ? "yes" : "no") << "\n";
    }
    const auto f = write("m.csv", os.str());
    const auto imp = cli("impute --data " + f + " --k 3 --out " + path("filled.csv"));
    ASSERT_EQ(imp.code, 0) << imp.out;
    EXPECT_NE(imp.out.find("imputed 5"), std::string::npos);
    EXPECT_EQ(slurp(path("filled.csv")).find(",,"), std::string::npos);
    ASSERT_EQ(cli("train --data " + f + " --grid epochs=300 --out " + path("model.json")).code, 0);
    const auto p = cli("predict --data " + f + " --model-file " + path("model.json"));
    EXPECT_EQ(p.code, 0) << p.out;
    EXPECT_EQ(cli("cv --data " + f + " --folds 2 --grid epochs=300").code, 0);
}

TEST_F(Cli, LibsvmInput) {
    std::ostringstream os;
    for (int i = 0; i < 30; ++i) os << (i % 2 ? "+1" : "-1") << " 1:" << (i % 2 ? 2.0 : -2.0) + 0.03 * i << " 2:0.5\n";
    const auto f = write("d.svm", os.str());
    const auto r = cli("cv --data " + f + " --format libsvm --folds 3 --model twsvm_linear");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("acc       1.0000"), std::string::npos) << r.out;
}

TEST_F(Cli, BenchRunsEveryModel) {
    const auto b = blobs();
    const auto r = cli("bench --data " + b + " --header --folds 3 --models twin_nn,rfnn --grid epochs=300 --grid rfnn.l2=0 --out " +
                       path("bench.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("twin_nn"), std::string::npos);
    EXPECT_NE(r.out.find("rfnn"), std::string::npos);
    const auto j = nlohmann::json::parse(slurp(path("bench.json")));
    EXPECT_EQ(j.at("schema"), "twinnn.bench/1");
    EXPECT_EQ(j.at("results").size(), 2u);
    EXPECT_EQ(cli("bench --data " + b + " --header --models twin_nn --grid gamma=1").code, 2);
}

TEST_F(Cli, CompareReport) {
    const auto f = write("s.csv",
                         "dataset,twin,rfnn\nd1,0.9,0.8\nd2,0.8,0.7\nd3,0.85,0.8\nd4,0.7,0.6\nd5,0.95,0.9\nd6,0.6,0.5\n");
    const auto r = cli("compare --data " + f + " --out " + path("c.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("3.1250e-02 (exact)"), std::string::npos) << r.out;
    const auto j = nlohmann::json::parse(slurp(path("c.json")));
    EXPECT_EQ(j.at("pairs")[0].at("note"), "reference");
    EXPECT_DOUBLE_EQ(j.at("pairs")[1].at("wilcoxon").at("p_value").get<double>(), 0.03125);
    const auto few = write("few.csv", "dataset,a,b\nd1,1,2\nd2,1,2\n");
    const auto bad = cli("compare --data " + few);
    EXPECT_EQ(bad.code, 3);
    EXPECT_NE(bad.out.find("insufficient datasets"), std::string::npos);
    EXPECT_EQ(cli("compare --data " + f + " --reference nobody").code, 2);
}
