#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using emoscale::cli::run;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "emoscale_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(CliTest, HelpAndUnknownFlag) {
    EXPECT_EQ(invoke({"--help"}).code, 0);
    auto bad = invoke({"synth", "--out", "x", "--bogus", "1"});
    EXPECT_EQ(bad.code, 1);
    EXPECT_FALSE(bad.err.empty());
    EXPECT_EQ(invoke({"nonsense"}).code, 1);
}

TEST(CliTest, SynthIsDeterministic) {
    auto dir = scratch("synth");
    const std::vector<std::string> common{"--seed", "3", "--subjects", "1", "--videos", "2", "--duration", "2"};
    auto a = common;
    a.insert(a.begin(), "synth");
    a.insert(a.end(), {"--out", (dir / "a").string()});
    auto b = common;
    b.insert(b.begin(), "synth");
    b.insert(b.end(), {"--out", (dir / "b").string()});
    ASSERT_EQ(invoke(a).code, 0);
    ASSERT_EQ(invoke(b).code, 0);
    for (const char* f : {"meta.csv", "physio/sub1_vid1.csv", "annotations/sub1_vid2.csv"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
}

TEST(CliTest, MissingDatasetIsInputError) {
    auto dir = scratch("missing");
    auto r = invoke({"train", "--data", (dir / "nope").string(), "--out", (dir / "c.json").string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_FALSE(r.err.empty());
}

TEST(CliTest, GradcheckPasses) {
    auto r = invoke({"gradcheck", "--entries", "3"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_NE(r.out.find("no gradient"), std::string::npos);
}

TEST(CliTest, TrainEvalReportFlow) {
    auto dir = scratch("flow");
    ASSERT_EQ(invoke({"synth", "--seed", "2", "--subjects", "2", "--videos", "4", "--duration", "3", "--out",
                      (dir / "data").string()})
                  .code,
              0);
    const auto ckpt = (dir / "model.json").string();
    auto tr = invoke({"train", "--data", (dir / "data").string(), "--preset", "gradcheck", "--epochs", "1", "--hop",
                      "500", "--out", ckpt});
    ASSERT_EQ(tr.code, 0) << tr.err;
    EXPECT_TRUE(fs::exists(ckpt));
    EXPECT_TRUE(fs::exists(ckpt + ".manifest.json"));

    const auto report = (dir / "report.json").string();
    auto ev = invoke({"eval", "--checkpoint", ckpt, "--data", (dir / "data").string(), "--hop", "500", "--out", report});
    ASSERT_EQ(ev.code, 0) << ev.err;
    EXPECT_NE(ev.out.find("Across-subject scenario"), std::string::npos);
    // four videos per subject leave no version pairs
    EXPECT_NE(ev.out.find("flagged: across_version"), std::string::npos);
    auto doc = nlohmann::json::parse(slurp(report));
    EXPECT_EQ(doc["rows"].size(), 8u);

    auto rp = invoke({"report", "--in", report});
    EXPECT_EQ(rp.code, 0);
    EXPECT_NE(rp.out.find("Valence STD"), std::string::npos);

    auto bad = invoke({"eval", "--checkpoint", report, "--data", (dir / "data").string()});
    EXPECT_EQ(bad.code, 1);
}
